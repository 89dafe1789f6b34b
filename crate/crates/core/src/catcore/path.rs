use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::schema::{Schema, SchemaError, Sort};

/// A word of generators starting at an entity. Only the last step may be an
/// attribute; no steps means the identity at `start`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    pub start: String,
    pub steps: Vec<String>,
}

impl Path {
    pub fn new<S: Into<String>>(start: &str, steps: impl IntoIterator<Item = S>) -> Self {
        Path { start: start.into(), steps: steps.into_iter().map(Into::into).collect() }
    }

    pub fn identity(start: &str) -> Self {
        Path { start: start.into(), steps: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Concatenation without type checking; see [`compose`].
    pub fn then(&self, other: &Path) -> Path {
        let mut steps = self.steps.clone();
        steps.extend(other.steps.iter().cloned());
        Path { start: self.start.clone(), steps }
    }
}

/// `Reaction . rev . rev`, or `Reaction . id` for the identity.
impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.start)?;
        if self.steps.is_empty() {
            return f.write_str(" . id");
        }
        for s in &self.steps {
            write!(f, " . {s}")?;
        }
        Ok(())
    }
}

/// Composes `p` then `q`; `p` must end at the entity where `q` starts.
pub fn compose(schema: &Schema, p: &Path, q: &Path) -> Result<Path, SchemaError> {
    let cod = schema.codomain(p)?;
    schema.codomain(q)?;
    if cod != Sort::Entity(q.start.clone()) {
        return Err(SchemaError::TypeMismatch { expected: Sort::Entity(q.start.clone()), found: cod });
    }
    Ok(p.then(q))
}
