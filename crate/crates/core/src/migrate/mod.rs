//! Data migration along mappings: delta, sigma, merge and filter.

mod chase;
mod delta;
mod filter;
mod merge;
mod pushout;
mod sigma;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

pub use delta::delta;
pub use filter::{filter, Clause, CmpOp, Predicate};
pub use merge::{merge, MergeResult, MergeSpec};
pub use pushout::{pushout, Pushout};
pub use sigma::sigma;

use crate::catcore::DEFAULT_DEPTH_BOUND;
use crate::instance::{CheckOptions, Instance, InstanceError, Literal, RowId};
use crate::mapping::{check_mapping, Mapping, MappingError, Overall};
use crate::udf::UdfRegistry;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChaseConfig {
    pub max_fresh_rows: usize,
    pub max_rounds: usize,
}

impl Default for ChaseConfig {
    fn default() -> Self {
        ChaseConfig { max_fresh_rows: 10_000, max_rounds: 1_000 }
    }
}

/// Everything a migration needs besides its inputs.
#[derive(Clone, Copy, Debug)]
pub struct MigrationContext<'a> {
    pub udfs: &'a UdfRegistry,
    /// Bound for the mapping check every migration runs first.
    pub depth_bound: usize,
    pub chase: ChaseConfig,
    pub check: CheckOptions,
}

impl<'a> MigrationContext<'a> {
    pub fn new(udfs: &'a UdfRegistry) -> Self {
        MigrationContext { udfs, depth_bound: DEFAULT_DEPTH_BOUND, chase: ChaseConfig::default(), check: CheckOptions::default() }
    }
}

/// Linked rows that disagree on an attribute.
#[derive(Clone, Debug, PartialEq)]
pub struct Conflict {
    pub entity: String,
    pub rows: (RowId, RowId),
    pub attribute: Option<String>,
    pub left: Literal,
    pub right: Literal,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rows `{}` and `{}`", self.entity, self.rows.0, self.rows.1)?;
        if let Some(a) = &self.attribute {
            write!(f, " disagree on `{a}`")?;
        } else {
            f.write_str(" disagree")?;
        }
        write!(f, ": {} vs {}", self.left, self.right)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MigrateError {
    #[error("mapping is ill-formed: {0}")]
    IllFormedMapping(#[from] MappingError),
    #[error("mapping `{mapping}` is {overall}; unproved equations: {}", unproven.join(", "))]
    MappingRejected { mapping: String, overall: Overall, unproven: Vec<String> },
    #[error("instance is over schema `{found}`, expected `{expected}`")]
    SchemaMismatch { expected: String, found: String },
    #[error("input instance over `{schema}` violates {count} equation instance(s), first: {first}")]
    InputViolatesConstraints { schema: String, count: usize, first: String },
    #[error("chase budget exceeded after {rounds} rounds and {fresh_rows} fresh rows (limits {max_rounds} rounds, {max_fresh_rows} rows)")]
    ChaseBudgetExceeded { rounds: usize, fresh_rows: usize, max_rounds: usize, max_fresh_rows: usize },
    #[error("contradiction{}: {left} = {right} is forced", match (entity.is_empty(), attribute) {
        (false, Some(a)) => alloc::format!(" at {entity}.{a}"),
        (false, None) => alloc::format!(" at {entity}"),
        _ => String::new(),
    })]
    Contradiction { entity: String, attribute: Option<String>, left: Literal, right: Literal },
    #[error("record linkage conflict: {0}")]
    KeyConflict(Conflict),
    #[error("cannot build the merged schema: {0}")]
    Pushout(String),
    #[error("invalid merge spec: {0}")]
    InvalidMergeSpec(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("`{entity}` has no attribute `{attribute}`")]
    UnknownAttribute { entity: String, attribute: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// A mapping must be proved valid before it moves data.
pub(crate) fn require_valid(ctx: &MigrationContext<'_>, m: &Mapping) -> Result<(), MigrateError> {
    let report = check_mapping(m, ctx.udfs, ctx.depth_bound, true)?;
    if report.is_valid() {
        return Ok(());
    }
    Err(MigrateError::MappingRejected {
        mapping: m.name.clone(),
        overall: report.overall,
        unproven: report.unproven().into_iter().map(String::from).collect(),
    })
}

pub(crate) fn require_instance(ctx: &MigrationContext<'_>, inst: &Instance, schema: &crate::catcore::Schema) -> Result<(), MigrateError> {
    if inst.schema() != schema {
        return Err(MigrateError::SchemaMismatch { expected: schema.name.clone(), found: inst.schema().name.clone() });
    }
    let report = inst.check(&ctx.check);
    if let Some(first) = report.violations.first() {
        return Err(MigrateError::InputViolatesConstraints {
            schema: schema.name.clone(),
            count: report.violations.len(),
            first: alloc::format!("{first}"),
        });
    }
    Ok(())
}
