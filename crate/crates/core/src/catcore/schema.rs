use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use super::path::Path;

/// The value types an attribute can land in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseType {
    Int,
    Float,
    String,
    Bool,
}

impl BaseType {
    pub const ALL: [BaseType; 4] = [BaseType::Int, BaseType::Float, BaseType::String, BaseType::Bool];

    pub fn name(self) -> &'static str {
        match self {
            BaseType::Int => "Int",
            BaseType::Float => "Float",
            BaseType::String => "String",
            BaseType::Bool => "Bool",
        }
    }

    pub fn from_name(name: &str) -> Option<BaseType> {
        BaseType::ALL.into_iter().find(|t| t.name() == name)
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Codomain of a path: either an entity or a base type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sort {
    Entity(String),
    Base(BaseType),
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Entity(e) => f.write_str(e),
            Sort::Base(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForeignKey {
    pub name: String,
    pub source: String,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub source: String,
    pub ty: BaseType,
}

/// A path equation; both sides start at the same entity and share a codomain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub label: Option<String>,
    pub lhs: Path,
    pub rhs: Path,
}

impl Equation {
    pub fn new(label: Option<&str>, lhs: Path, rhs: Path) -> Self {
        Equation { label: label.map(String::from), lhs, rhs }
    }

    /// The label, or `#<index>` for unlabelled equations.
    pub fn display_label(&self, index: usize) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => alloc::format!("#{}", index + 1),
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = &self.label {
            write!(f, "{l}: ")?;
        }
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// A generator resolved against its source entity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator<'a> {
    Fk(&'a ForeignKey),
    Attr(&'a Attribute),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemaError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("entity `{entity}` has no generator `{name}`")]
    UnknownGenerator { entity: String, name: String },
    #[error("attribute `{name}` must be the last step of a path")]
    AttributeNotLast { name: String },
    #[error("type mismatch: expected {expected}, found {found}")]
    TypeMismatch { expected: Sort, found: Sort },
}

/// A finitely presented schema.
///
/// Fields are public so that schemas can be built directly; run
/// [`validate_schema`](super::validate_schema) before trusting one.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Schema {
    pub name: String,
    pub entities: Vec<String>,
    pub fks: Vec<ForeignKey>,
    pub attrs: Vec<Attribute>,
    pub equations: Vec<Equation>,
}

impl Schema {
    pub fn new(name: &str) -> Self {
        Schema { name: name.into(), ..Default::default() }
    }

    pub fn entity(mut self, name: &str) -> Self {
        self.entities.push(name.into());
        self
    }

    pub fn fk(mut self, name: &str, source: &str, target: &str) -> Self {
        self.fks.push(ForeignKey { name: name.into(), source: source.into(), target: target.into() });
        self
    }

    pub fn attr(mut self, name: &str, source: &str, ty: BaseType) -> Self {
        self.attrs.push(Attribute { name: name.into(), source: source.into(), ty });
        self
    }

    pub fn equation(mut self, label: Option<&str>, lhs: Path, rhs: Path) -> Self {
        self.equations.push(Equation::new(label, lhs, rhs));
        self
    }

    pub fn has_entity(&self, name: &str) -> bool {
        self.entities.iter().any(|e| e == name)
    }

    pub fn entity_index(&self, name: &str) -> Option<usize> {
        self.entities.iter().position(|e| e == name)
    }

    pub fn fk_index(&self, entity: &str, name: &str) -> Option<usize> {
        self.fks.iter().position(|f| f.source == entity && f.name == name)
    }

    pub fn attr_index(&self, entity: &str, name: &str) -> Option<usize> {
        self.attrs.iter().position(|a| a.source == entity && a.name == name)
    }

    pub fn find_fk(&self, entity: &str, name: &str) -> Option<&ForeignKey> {
        self.fk_index(entity, name).map(|i| &self.fks[i])
    }

    pub fn find_attr(&self, entity: &str, name: &str) -> Option<&Attribute> {
        self.attr_index(entity, name).map(|i| &self.attrs[i])
    }

    pub fn generator(&self, entity: &str, name: &str) -> Option<Generator<'_>> {
        if let Some(f) = self.find_fk(entity, name) {
            return Some(Generator::Fk(f));
        }
        self.find_attr(entity, name).map(Generator::Attr)
    }

    pub fn fks_from<'a>(&'a self, entity: &'a str) -> impl Iterator<Item = &'a ForeignKey> + 'a {
        self.fks.iter().filter(move |f| f.source == entity)
    }

    pub fn attrs_from<'a>(&'a self, entity: &'a str) -> impl Iterator<Item = &'a Attribute> + 'a {
        self.attrs.iter().filter(move |a| a.source == entity)
    }

    /// Type-checks `path` and returns its codomain.
    pub fn codomain(&self, path: &Path) -> Result<Sort, SchemaError> {
        if !self.has_entity(&path.start) {
            return Err(SchemaError::UnknownEntity(path.start.clone()));
        }
        let mut current = path.start.as_str();
        let last = path.steps.len();
        for (i, step) in path.steps.iter().enumerate() {
            match self.generator(current, step) {
                Some(Generator::Fk(f)) => current = &f.target,
                Some(Generator::Attr(a)) => {
                    if i + 1 != last {
                        return Err(SchemaError::AttributeNotLast { name: a.name.clone() });
                    }
                    return Ok(Sort::Base(a.ty));
                }
                None => {
                    return Err(SchemaError::UnknownGenerator {
                        entity: current.into(),
                        name: step.clone(),
                    })
                }
            }
        }
        if !self.has_entity(current) {
            return Err(SchemaError::UnknownEntity(current.into()));
        }
        Ok(Sort::Entity(current.into()))
    }

    /// Entities visited by `path`, including the start; one more than the
    /// number of fk steps.
    pub fn entities_along(&self, path: &Path) -> Result<Vec<String>, SchemaError> {
        let mut out = alloc::vec![path.start.clone()];
        let mut current = path.start.clone();
        for step in &path.steps {
            match self.generator(&current, step) {
                Some(Generator::Fk(f)) => {
                    current = f.target.clone();
                    out.push(current.clone());
                }
                Some(Generator::Attr(_)) => break,
                None => {
                    return Err(SchemaError::UnknownGenerator { entity: current, name: step.clone() })
                }
            }
        }
        Ok(out)
    }

    /// Equations whose sides start at `entity`, with their declaration index.
    pub fn equations_at<'a>(
        &'a self,
        entity: &'a str,
    ) -> impl Iterator<Item = (usize, &'a Equation)> + 'a {
        self.equations.iter().enumerate().filter(move |(_, e)| e.lhs.start == entity)
    }
}
