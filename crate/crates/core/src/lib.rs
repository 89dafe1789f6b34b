//! Functorial data migration over finitely presented schemas.
//!
//! A [`Schema`] is a finitely presented category: entities are objects,
//! foreign keys are generating morphisms, attributes send entities to base
//! types, and path equations are the relations. A [`Mapping`] between two
//! schemas is a functor, and it is only allowed to move data once
//! [`check_mapping`] has shown that every source equation still holds in the
//! target. Data lives in an [`Instance`], whose attribute cells may hold
//! labelled nulls that behave like variables.
//!
//! The migration operations ([`delta`], [`sigma`], [`merge`] and [`filter`])
//! consume validated mappings and always produce instances that satisfy the
//! equations of their output schema.
//!
//! The crate is `no_std` and only needs `alloc`; parsing of the textual
//! format, CSV bundles and the command line live in the `funmig` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod catcore;
pub mod instance;
pub mod mapping;
pub mod migrate;
pub mod udf;

pub use catcore::{
    compose, decide_path_equality, decide_with_limits, validate_schema, Attribute, BaseType,
    Diagnostic, DiagnosticCode, Direction, Equation, ForeignKey, Path, ProofResult, ProverLimits,
    RewriteStep, Schema, SchemaError, Sort, Verdict, DEFAULT_DEPTH_BOUND,
};
pub use instance::{
    CheckOptions, Congruence, Evaluated, Instance, InstanceBuilder, InstanceError, Literal,
    NodeId, RowId, Value, Violation, ViolationReport,
};
pub use mapping::{
    check_mapping, check_mapping_with_limits, compose_mappings, translate_path, AttrExpr,
    EquationOutcome, ExprError, GenRef, Image, Mapping, MappingError, Overall, ValidationReport,
};
pub use migrate::{
    delta, filter, merge, pushout, sigma, ChaseConfig, CmpOp, Clause, Conflict, MergeResult,
    MergeSpec, MigrateError, MigrationContext, Predicate, Pushout,
};
pub use udf::{UdfError, UdfRegistry, UdfSignature};
