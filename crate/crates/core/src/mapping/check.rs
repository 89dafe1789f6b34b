use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{AttrExpr, Image, Mapping, MappingError};
use crate::catcore::{decide_with_limits, Equation, Path, ProofResult, ProverLimits, Verdict};
use crate::udf::UdfRegistry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Overall {
    Valid,
    Rejected,
    Inconclusive,
}

impl Overall {
    pub fn as_str(self) -> &'static str {
        match self {
            Overall::Valid => "Valid",
            Overall::Rejected => "Rejected",
            Overall::Inconclusive => "Inconclusive",
        }
    }
}

impl fmt::Display for Overall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What became of one source equation under the mapping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationOutcome {
    pub label: String,
    pub equation: Equation,
    pub lhs: Image,
    pub rhs: Image,
    pub result: ProofResult,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub mapping: String,
    pub strict: bool,
    pub depth_bound: usize,
    /// One entry per source equation, in declaration order.
    pub outcomes: Vec<EquationOutcome>,
    pub overall: Overall,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.overall == Overall::Valid
    }

    /// Labels of the equations that could not be proved.
    pub fn unproven(&self) -> Vec<&str> {
        self.outcomes.iter().filter(|o| !o.result.is_provable()).map(|o| o.label.as_str()).collect()
    }
}

/// Collects the path pairs whose equality makes `a` and `b` equal by
/// congruence. False when the shapes cannot be matched.
fn match_exprs<'a>(a: &'a AttrExpr, b: &'a AttrExpr, udfs: &UdfRegistry, out: &mut Vec<(&'a Path, &'a Path)>) -> bool {
    if let (Some(x), Some(y)) = (a.eval_ground(udfs), b.eval_ground(udfs)) {
        return x == y;
    }
    match (a, b) {
        (AttrExpr::Path(p), AttrExpr::Path(q)) => {
            out.push((p, q));
            true
        }
        (AttrExpr::Const(x), AttrExpr::Const(y)) => x == y,
        (AttrExpr::Apply { func: f, args: xs }, AttrExpr::Apply { func: g, args: ys }) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_exprs(x, y, udfs, out))
        }
        // each null expression is a fresh unknown, equal to nothing else
        _ => false,
    }
}

fn prove(m: &Mapping, lhs: &Image, rhs: &Image, udfs: &UdfRegistry, limits: ProverLimits) -> ProofResult {
    let mut pairs = Vec::new();
    let matched = match (lhs, rhs) {
        (Image::Entity(p), Image::Entity(q)) => {
            pairs.push((p, q));
            true
        }
        (Image::Value(a), Image::Value(b)) => match_exprs(a, b, udfs, &mut pairs),
        _ => false,
    };
    if !matched {
        return ProofResult::unproven();
    }
    let mut trace = Vec::new();
    for (p, q) in pairs {
        match decide_with_limits(&m.target, p, q, limits) {
            Ok(r) if r.is_provable() => trace.extend(r.trace),
            _ => return ProofResult::unproven(),
        }
    }
    ProofResult::provable(trace)
}

/// Statically checks that `m` is a functor: well-formed, and every source
/// equation provable in the target after translation.
///
/// Ill-formed mappings are reported as an error before any proving. In
/// strict mode an unproved equation rejects the mapping; otherwise the
/// verdict is `Inconclusive`, since failing to find a proof within the bound
/// never shows that the equation fails.
pub fn check_mapping(m: &Mapping, udfs: &UdfRegistry, depth_bound: usize, strict: bool) -> Result<ValidationReport, MappingError> {
    check_mapping_with_limits(m, udfs, ProverLimits::with_depth(depth_bound), strict)
}

pub fn check_mapping_with_limits(
    m: &Mapping,
    udfs: &UdfRegistry,
    limits: ProverLimits,
    strict: bool,
) -> Result<ValidationReport, MappingError> {
    m.well_formed(udfs)?;
    let mut outcomes = Vec::with_capacity(m.source.equations.len());
    for (i, eq) in m.source.equations.iter().enumerate() {
        let lhs = m.translate(&eq.lhs)?;
        let rhs = m.translate(&eq.rhs)?;
        let result = prove(m, &lhs, &rhs, udfs, limits);
        outcomes.push(EquationOutcome { label: eq.display_label(i), equation: eq.clone(), lhs, rhs, result });
    }
    let all = outcomes.iter().all(|o| o.result.verdict == Verdict::Provable);
    let overall = match (all, strict) {
        (true, _) => Overall::Valid,
        (false, true) => Overall::Rejected,
        (false, false) => Overall::Inconclusive,
    };
    Ok(ValidationReport { mapping: m.name.clone(), strict, depth_bound: limits.depth_bound, outcomes, overall })
}
