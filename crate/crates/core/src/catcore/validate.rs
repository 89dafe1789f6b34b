use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::schema::{Schema, SchemaError};

/// Machine-readable diagnostic codes for schema validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagnosticCode {
    InvalidIdentifier,
    DuplicateEntity,
    UnknownEntity,
    DuplicateGenerator,
    UnknownGenerator,
    AttributeNotLast,
    EquationEndpointMismatch,
    EquationCodomainMismatch,
    DuplicateEquationLabel,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::InvalidIdentifier => "InvalidIdentifier",
            DiagnosticCode::DuplicateEntity => "DuplicateEntity",
            DiagnosticCode::UnknownEntity => "UnknownEntity",
            DiagnosticCode::DuplicateGenerator => "DuplicateGenerator",
            DiagnosticCode::UnknownGenerator => "UnknownGenerator",
            DiagnosticCode::AttributeNotLast => "AttributeNotLast",
            DiagnosticCode::EquationEndpointMismatch => "EquationEndpointMismatch",
            DiagnosticCode::EquationCodomainMismatch => "EquationCodomainMismatch",
            DiagnosticCode::DuplicateEquationLabel => "DuplicateEquationLabel",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One schema problem: `element` names the offending entity, generator or
/// equation (`entity`, `entity.generator`, or an equation label).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub element: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.element, self.message)
    }
}

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Checks every schema invariant. Empty output means the schema is well formed.
pub fn validate_schema(s: &Schema) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |code, element: String, message: String| {
        out.push(Diagnostic { code, element, message });
    };

    let mut seen = BTreeSet::new();
    for e in &s.entities {
        if !is_identifier(e) || e == "id" {
            diag(DiagnosticCode::InvalidIdentifier, e.clone(), format!("`{e}` is not a valid entity name"));
        }
        if !seen.insert(e.as_str()) {
            diag(DiagnosticCode::DuplicateEntity, e.clone(), format!("entity `{e}` declared twice"));
        }
    }

    let mut gens: BTreeSet<(&str, &str)> = BTreeSet::new();
    for f in &s.fks {
        let element = format!("{}.{}", f.source, f.name);
        if !is_identifier(&f.name) || f.name == "id" {
            diag(DiagnosticCode::InvalidIdentifier, element.clone(), format!("`{}` is not a valid generator name", f.name));
        }
        if !s.has_entity(&f.source) {
            diag(DiagnosticCode::UnknownEntity, element.clone(), format!("source entity `{}` is not declared", f.source));
        }
        if !s.has_entity(&f.target) {
            diag(DiagnosticCode::UnknownEntity, element.clone(), format!("target entity `{}` is not declared", f.target));
        }
        if !gens.insert((&f.source, &f.name)) {
            diag(DiagnosticCode::DuplicateGenerator, element, format!("generator `{}` declared twice on `{}`", f.name, f.source));
        }
    }
    for a in &s.attrs {
        let element = format!("{}.{}", a.source, a.name);
        if !is_identifier(&a.name) || a.name == "id" {
            diag(DiagnosticCode::InvalidIdentifier, element.clone(), format!("`{}` is not a valid generator name", a.name));
        }
        if !s.has_entity(&a.source) {
            diag(DiagnosticCode::UnknownEntity, element.clone(), format!("source entity `{}` is not declared", a.source));
        }
        if !gens.insert((&a.source, &a.name)) {
            diag(DiagnosticCode::DuplicateGenerator, element, format!("generator `{}` declared twice on `{}`", a.name, a.source));
        }
    }

    let mut labels = BTreeSet::new();
    for (i, eq) in s.equations.iter().enumerate() {
        let element = eq.display_label(i);
        if let Some(l) = &eq.label {
            if !labels.insert(l.as_str()) {
                diag(DiagnosticCode::DuplicateEquationLabel, element.clone(), format!("equation label `{l}` used twice"));
            }
        }
        if eq.lhs.start != eq.rhs.start {
            diag(
                DiagnosticCode::EquationEndpointMismatch,
                element.clone(),
                format!("sides start at `{}` and `{}`", eq.lhs.start, eq.rhs.start),
            );
        }
        let l = s.codomain(&eq.lhs);
        let r = s.codomain(&eq.rhs);
        for side in [&l, &r] {
            if let Err(e) = side {
                let code = match e {
                    SchemaError::UnknownEntity(_) => DiagnosticCode::UnknownEntity,
                    SchemaError::UnknownGenerator { .. } => DiagnosticCode::UnknownGenerator,
                    SchemaError::AttributeNotLast { .. } => DiagnosticCode::AttributeNotLast,
                    SchemaError::TypeMismatch { .. } => DiagnosticCode::EquationCodomainMismatch,
                };
                diag(code, element.clone(), format!("{e}"));
            }
        }
        if let (Ok(a), Ok(b)) = (&l, &r) {
            if a != b {
                diag(DiagnosticCode::EquationCodomainMismatch, element, format!("sides end at {a} and {b}"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catcore::{BaseType, Path};

    fn schema_a() -> Schema {
        Schema::new("A")
            .entity("Reaction")
            .entity("Simulation")
            .fk("rev", "Reaction", "Reaction")
            .fk("sim", "Reaction", "Simulation")
            .fk("rds", "Simulation", "Reaction")
            .attr("name", "Reaction", BaseType::String)
            .equation(Some("A1"), Path::new("Reaction", ["rev", "sim"]), Path::new("Reaction", ["sim"]))
            .equation(Some("A2"), Path::new("Simulation", ["rds", "sim"]), Path::identity("Simulation"))
            .equation(Some("A3"), Path::new("Reaction", ["rev", "rev"]), Path::identity("Reaction"))
    }

    fn codes(s: &Schema) -> Vec<DiagnosticCode> {
        validate_schema(s).into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn well_formed_schema_has_no_diagnostics() {
        assert!(validate_schema(&schema_a()).is_empty());
    }

    #[test]
    fn fk_to_undeclared_entity() {
        let s = Schema::new("S").entity("A").fk("f", "A", "B");
        assert_eq!(codes(&s), [DiagnosticCode::UnknownEntity]);
        assert_eq!(validate_schema(&s)[0].element, "A.f");
    }

    #[test]
    fn equation_sides_start_apart() {
        let s = schema_a().equation(Some("bad"), Path::identity("Reaction"), Path::identity("Simulation"));
        let c = codes(&s);
        assert!(c.contains(&DiagnosticCode::EquationEndpointMismatch));
    }

    #[test]
    fn duplicate_generator_names() {
        let s = Schema::new("S").entity("A").fk("f", "A", "A").attr("f", "A", BaseType::Int);
        assert_eq!(codes(&s), [DiagnosticCode::DuplicateGenerator]);
        // same name on different entities is fine
        let s = Schema::new("S").entity("A").entity("B").attr("f", "A", BaseType::Int).attr("f", "B", BaseType::Int);
        assert!(codes(&s).is_empty());
    }

    #[test]
    fn codomain_mismatch_and_bad_paths() {
        let s = schema_a().equation(None, Path::new("Reaction", ["sim"]), Path::identity("Reaction"));
        assert_eq!(codes(&s), [DiagnosticCode::EquationCodomainMismatch]);
        let s = schema_a().equation(None, Path::new("Reaction", ["name", "rev"]), Path::identity("Reaction"));
        assert_eq!(codes(&s), [DiagnosticCode::AttributeNotLast]);
        let s = schema_a().equation(None, Path::new("Reaction", ["nope"]), Path::identity("Reaction"));
        assert_eq!(codes(&s), [DiagnosticCode::UnknownGenerator]);
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("cell_id"));
        assert!(is_identifier("_x9"));
        assert!(!is_identifier("9x"));
        assert!(!is_identifier("Reaction'"));
        assert!(!is_identifier(""));
    }
}
