//! Schemas as finitely presented categories.
//!
//! Entities are objects, foreign keys are generating morphisms, attributes
//! are morphisms into base types and equations are relations between paths.
//! Path equality is decided by a bounded rewriting search ([`prover`]) that
//! is sound but deliberately incomplete.

mod path;
pub mod prover;
mod schema;
mod validate;

pub use path::{compose, Path};
pub use prover::{
    decide_path_equality, decide_with_limits, Direction, ProofResult, ProverLimits, RewriteStep,
    Verdict, DEFAULT_DEPTH_BOUND,
};
pub use schema::{Attribute, BaseType, Equation, ForeignKey, Generator, Schema, SchemaError, Sort};
pub use validate::{is_identifier, validate_schema, Diagnostic, DiagnosticCode};
