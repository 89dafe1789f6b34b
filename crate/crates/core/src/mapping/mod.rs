//! Schema mappings: functors between finitely presented schemas.

mod check;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

pub use check::{check_mapping, check_mapping_with_limits, EquationOutcome, Overall, ValidationReport};

use crate::catcore::{BaseType, Generator, Path, Schema, SchemaError, Sort};
use crate::instance::Literal;
use crate::udf::{UdfError, UdfRegistry};

/// A generator named by its source entity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenRef {
    pub entity: String,
    pub name: String,
}

impl GenRef {
    pub fn new(entity: &str, name: &str) -> Self {
        GenRef { entity: entity.into(), name: name.into() }
    }
}

impl fmt::Display for GenRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.entity, self.name)
    }
}

/// Image of a source attribute, evaluated at a row of the image entity.
///
/// At most one `Path` leaf may occur in a whole expression.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum AttrExpr {
    /// Target path ending in an attribute, starting at the image entity.
    Path(Path),
    Const(Literal),
    Apply { func: String, args: Vec<AttrExpr> },
    /// A fresh labelled null per row.
    Null(BaseType),
}

impl AttrExpr {
    pub fn path(start: &str, steps: &[&str]) -> Self {
        AttrExpr::Path(Path::new(start, steps.iter().copied()))
    }

    pub fn apply(func: &str, args: Vec<AttrExpr>) -> Self {
        AttrExpr::Apply { func: func.into(), args }
    }

    pub fn path_count(&self) -> usize {
        match self {
            AttrExpr::Path(_) => 1,
            AttrExpr::Const(_) | AttrExpr::Null(_) => 0,
            AttrExpr::Apply { args, .. } => args.iter().map(AttrExpr::path_count).sum(),
        }
    }

    /// The single path leaf, if any.
    pub fn path_leaf(&self) -> Option<&Path> {
        match self {
            AttrExpr::Path(p) => Some(p),
            AttrExpr::Const(_) | AttrExpr::Null(_) => None,
            AttrExpr::Apply { args, .. } => args.iter().find_map(AttrExpr::path_leaf),
        }
    }

    /// Replaces every path leaf by `f(leaf)`.
    pub fn substitute<E>(&self, f: &mut impl FnMut(&Path) -> Result<AttrExpr, E>) -> Result<AttrExpr, E> {
        Ok(match self {
            AttrExpr::Path(p) => f(p)?,
            AttrExpr::Apply { func, args } => AttrExpr::Apply {
                func: func.clone(),
                args: args.iter().map(|a| a.substitute(f)).collect::<Result<_, _>>()?,
            },
            other => other.clone(),
        })
    }

    /// Type of the expression when evaluated at `start` in `schema`.
    pub fn infer(&self, schema: &Schema, start: &str, udfs: &UdfRegistry) -> Result<BaseType, ExprError> {
        match self {
            AttrExpr::Path(p) => {
                if p.start != start {
                    return Err(ExprError::Path(SchemaError::TypeMismatch {
                        expected: Sort::Entity(start.into()),
                        found: Sort::Entity(p.start.clone()),
                    }));
                }
                match schema.codomain(p)? {
                    Sort::Base(t) => Ok(t),
                    s @ Sort::Entity(_) => Err(ExprError::NotAnAttribute(s)),
                }
            }
            AttrExpr::Const(l) => Ok(l.ty()),
            AttrExpr::Null(t) => Ok(*t),
            AttrExpr::Apply { func, args } => {
                let tys = args.iter().map(|a| a.infer(schema, start, udfs)).collect::<Result<Vec<_>, _>>()?;
                Ok(udfs.check_call(func, &tys)?)
            }
        }
    }

    /// Value of a path-free, null-free expression.
    pub fn eval_ground(&self, udfs: &UdfRegistry) -> Option<Literal> {
        match self {
            AttrExpr::Const(l) => Some(l.clone()),
            AttrExpr::Apply { func, args } => {
                let lits = args.iter().map(|a| a.eval_ground(udfs)).collect::<Option<Vec<_>>>()?;
                udfs.eval(func, &lits).ok()
            }
            AttrExpr::Path(_) | AttrExpr::Null(_) => None,
        }
    }
}

impl fmt::Display for AttrExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrExpr::Path(p) => write!(f, "{p}"),
            AttrExpr::Const(l) => write!(f, "{l}"),
            AttrExpr::Null(_) => f.write_str("null"),
            AttrExpr::Apply { func, args } => {
                write!(f, "{func}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error(transparent)]
    Path(#[from] SchemaError),
    #[error("path ends at {0}, not at an attribute")]
    NotAnAttribute(Sort),
    #[error(transparent)]
    Udf(#[from] UdfError),
}

/// Translation of a source path: entity-valued paths go to paths, attribute
/// paths go to expressions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Image {
    Entity(Path),
    Value(AttrExpr),
}

impl fmt::Display for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Image::Entity(p) => write!(f, "{p}"),
            Image::Value(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("cannot compose: `{first}` ends at schema `{found}` but `{second}` starts at `{expected}`")]
    SchemaMismatch { first: String, second: String, expected: String, found: String },
    #[error("source entity `{0}` has no image")]
    MissingEntity(String),
    #[error("`{0}` is not an entity of the source schema")]
    ExtraEntity(String),
    #[error("image `{image}` of `{entity}` is not an entity of the target schema")]
    UnknownTargetEntity { entity: String, image: String },
    #[error("generator `{0}` has no image")]
    MissingGenerator(GenRef),
    #[error("`{0}` is not a generator of the source schema")]
    ExtraGenerator(GenRef),
    #[error("image of `{generator}` is ill-typed: {error}")]
    IllTyped { generator: GenRef, error: ExprError },
    #[error("image of `{generator}` should have type {expected}, has {found}")]
    WrongType { generator: GenRef, expected: Sort, found: Sort },
    #[error("image of `{generator}` uses {count} paths; at most one is allowed")]
    TooManyPaths { generator: GenRef, count: usize },
    #[error("`{0}` ends at an attribute")]
    NotEntityValued(Path),
    #[error("cannot translate `{path}`: {error}")]
    Path { path: Path, error: SchemaError },
}

/// A functor between two schemas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mapping {
    pub name: String,
    pub source: Schema,
    pub target: Schema,
    pub entity_map: BTreeMap<String, String>,
    pub fk_map: BTreeMap<GenRef, Path>,
    pub attr_map: BTreeMap<GenRef, AttrExpr>,
}

impl Mapping {
    pub fn new(name: &str, source: &Schema, target: &Schema) -> Self {
        Mapping {
            name: name.into(),
            source: source.clone(),
            target: target.clone(),
            entity_map: BTreeMap::new(),
            fk_map: BTreeMap::new(),
            attr_map: BTreeMap::new(),
        }
    }

    pub fn identity(schema: &Schema) -> Self {
        let mut m = Mapping::new(&format!("id_{}", schema.name), schema, schema);
        for e in &schema.entities {
            m.entity_map.insert(e.clone(), e.clone());
        }
        for f in &schema.fks {
            m.fk_map.insert(GenRef::new(&f.source, &f.name), Path::new(&f.source, [f.name.as_str()]));
        }
        for a in &schema.attrs {
            m.attr_map.insert(GenRef::new(&a.source, &a.name), AttrExpr::Path(Path::new(&a.source, [a.name.as_str()])));
        }
        m
    }

    pub fn entity(mut self, source: &str, target: &str) -> Self {
        self.entity_map.insert(source.into(), target.into());
        self
    }

    /// Maps fk `entity.name` to `path` (which starts at the image entity).
    pub fn fk(mut self, entity: &str, name: &str, path: Path) -> Self {
        self.fk_map.insert(GenRef::new(entity, name), path);
        self
    }

    pub fn attr(mut self, entity: &str, name: &str, expr: AttrExpr) -> Self {
        self.attr_map.insert(GenRef::new(entity, name), expr);
        self
    }

    pub fn image_of_entity(&self, entity: &str) -> Option<&str> {
        self.entity_map.get(entity).map(String::as_str)
    }

    fn path_error(p: &Path, error: SchemaError) -> MappingError {
        MappingError::Path { path: p.clone(), error }
    }

    /// Image of an entity-valued or attribute-ending source path.
    pub fn translate(&self, p: &Path) -> Result<Image, MappingError> {
        self.source.codomain(p).map_err(|e| Self::path_error(p, e))?;
        let start = self
            .image_of_entity(&p.start)
            .ok_or_else(|| MappingError::MissingEntity(p.start.clone()))?;
        let mut out = Path::identity(start);
        let mut current = p.start.as_str();
        for step in &p.steps {
            match self.source.generator(current, step) {
                Some(Generator::Fk(f)) => {
                    let g = GenRef::new(current, step);
                    let img = self.fk_map.get(&g).ok_or(MappingError::MissingGenerator(g))?;
                    out = out.then(img);
                    current = &f.target;
                }
                Some(Generator::Attr(_)) => {
                    let g = GenRef::new(current, step);
                    let expr = self.attr_map.get(&g).ok_or(MappingError::MissingGenerator(g))?;
                    let prefix = out;
                    let expr = expr.substitute(&mut |leaf: &Path| Ok::<_, MappingError>(AttrExpr::Path(prefix.then(leaf))))?;
                    return Ok(Image::Value(expr));
                }
                None => unreachable!("codomain succeeded"),
            }
        }
        Ok(Image::Entity(out))
    }

    /// Checks totality and typing of every component.
    pub fn well_formed(&self, udfs: &UdfRegistry) -> Result<(), MappingError> {
        let (s, t) = (&self.source, &self.target);
        for e in &s.entities {
            let img = self.entity_map.get(e).ok_or_else(|| MappingError::MissingEntity(e.clone()))?;
            if !t.has_entity(img) {
                return Err(MappingError::UnknownTargetEntity { entity: e.clone(), image: img.clone() });
            }
        }
        if let Some(e) = self.entity_map.keys().find(|e| !s.has_entity(e)) {
            return Err(MappingError::ExtraEntity(e.clone()));
        }
        for f in &s.fks {
            let g = GenRef::new(&f.source, &f.name);
            let img = self.fk_map.get(&g).ok_or_else(|| MappingError::MissingGenerator(g.clone()))?;
            let (from, to) = (&self.entity_map[&f.source], &self.entity_map[&f.target]);
            if &img.start != from {
                return Err(MappingError::WrongType {
                    generator: g,
                    expected: Sort::Entity(from.clone()),
                    found: Sort::Entity(img.start.clone()),
                });
            }
            let found = t.codomain(img).map_err(|e| MappingError::IllTyped { generator: g.clone(), error: e.into() })?;
            if found != Sort::Entity(to.clone()) {
                return Err(MappingError::WrongType { generator: g, expected: Sort::Entity(to.clone()), found });
            }
        }
        if let Some(g) = self.fk_map.keys().find(|g| s.find_fk(&g.entity, &g.name).is_none()) {
            return Err(MappingError::ExtraGenerator(g.clone()));
        }
        for a in &s.attrs {
            let g = GenRef::new(&a.source, &a.name);
            let expr = self.attr_map.get(&g).ok_or_else(|| MappingError::MissingGenerator(g.clone()))?;
            let count = expr.path_count();
            if count > 1 {
                return Err(MappingError::TooManyPaths { generator: g, count });
            }
            let found = expr
                .infer(t, &self.entity_map[&a.source], udfs)
                .map_err(|error| MappingError::IllTyped { generator: g.clone(), error })?;
            if found != a.ty {
                return Err(MappingError::WrongType { generator: g, expected: Sort::Base(a.ty), found: Sort::Base(found) });
            }
        }
        if let Some(g) = self.attr_map.keys().find(|g| s.find_attr(&g.entity, &g.name).is_none()) {
            return Err(MappingError::ExtraGenerator(g.clone()));
        }
        Ok(())
    }
}

/// Image of an entity-valued source path.
pub fn translate_path(f: &Mapping, p: &Path) -> Result<Path, MappingError> {
    match f.translate(p)? {
        Image::Entity(q) => Ok(q),
        Image::Value(_) => Err(MappingError::NotEntityValued(p.clone())),
    }
}

/// `g ∘ f`: first `f`, then `g`.
pub fn compose_mappings(f: &Mapping, g: &Mapping) -> Result<Mapping, MappingError> {
    if f.target != g.source {
        return Err(MappingError::SchemaMismatch {
            first: f.name.clone(),
            second: g.name.clone(),
            expected: g.source.name.clone(),
            found: f.target.name.clone(),
        });
    }
    let mut out = Mapping::new(&format!("{}_{}", g.name, f.name), &f.source, &g.target);
    for (x, y) in &f.entity_map {
        let z = g.image_of_entity(y).ok_or_else(|| MappingError::MissingEntity(y.clone()))?;
        out.entity_map.insert(x.clone(), z.into());
    }
    for (gen, p) in &f.fk_map {
        out.fk_map.insert(gen.clone(), translate_path(g, p)?);
    }
    for (gen, e) in &f.attr_map {
        let composed = e.substitute(&mut |leaf: &Path| match g.translate(leaf)? {
            Image::Value(v) => Ok(v),
            Image::Entity(_) => Err(MappingError::IllTyped {
                generator: gen.clone(),
                error: ExprError::NotAnAttribute(Sort::Entity(leaf.start.clone())),
            }),
        })?;
        out.attr_map.insert(gen.clone(), composed);
    }
    Ok(out)
}
