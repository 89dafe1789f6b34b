//! Instances: one table per entity, fk columns holding row references and
//! attribute columns holding values in a shared [`Congruence`].

mod congruence;
mod value;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

pub use congruence::{Congruence, NodeId};
pub use value::{Literal, Value};

use crate::catcore::{BaseType, Generator, Path, Schema, SchemaError};
use crate::udf::{UdfError, UdfRegistry};

pub type RowId = String;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("`{entity}` has no generator `{name}`")]
    UnknownGenerator { entity: String, name: String },
    #[error("`{entity}` has no row `{row}`")]
    UnknownRow { entity: String, row: RowId },
    #[error("row `{row}` appears twice in `{entity}`")]
    DuplicateRow { entity: String, row: RowId },
    #[error("{entity} row `{row}`: foreign key `{fk}` {}", match target {
        Some(t) => format!("points to missing row `{t}`"),
        None => String::from("is not set"),
    })]
    DanglingForeignKey { entity: String, row: RowId, fk: String, target: Option<RowId> },
    #[error("{entity} row `{row}`: attribute `{attr}` expects {expected}, got {found}")]
    TypeMismatch { entity: String, row: RowId, attr: String, expected: BaseType, found: BaseType },
    #[error("cannot identify distinct values {left} and {right}")]
    Contradiction { left: Literal, right: Literal },
    #[error("unknown null `?{0}`")]
    UnknownNull(String),
    #[error(transparent)]
    Udf(#[from] UdfError),
    #[error(transparent)]
    Path(#[from] SchemaError),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Table {
    pub ids: Vec<RowId>,
    pub index: BTreeMap<RowId, usize>,
    pub lineage: Vec<Vec<String>>,
}

impl Table {
    pub fn push(&mut self, id: RowId, lineage: Vec<String>) -> usize {
        let i = self.ids.len();
        self.index.insert(id.clone(), i);
        self.ids.push(id);
        self.lineage.push(lineage);
        i
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }
}

/// Result of following a path from a row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evaluated {
    Row(RowId),
    Value(Value),
}

impl fmt::Display for Evaluated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Evaluated::Row(r) => write!(f, "row {r}"),
            Evaluated::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckOptions {
    /// Absolute tolerance when both sides are float literals.
    pub float_tolerance: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { float_tolerance: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub equation: String,
    pub entity: String,
    pub row: RowId,
    pub lhs: Evaluated,
    pub rhs: Evaluated,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fails at {} {}: {} vs {}", self.equation, self.entity, self.row, self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// Labels of the violated equations.
    pub fn equations(&self) -> BTreeSet<&str> {
        self.violations.iter().map(|v| v.equation.as_str()).collect()
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Step {
    Fk(usize),
    Attr(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Ev {
    Row(usize),
    Node(NodeId),
}

/// Resolves a path against `schema` into generator indices.
pub(crate) fn compile_path(schema: &Schema, path: &Path) -> Result<(usize, Vec<Step>), SchemaError> {
    schema.codomain(path)?;
    let start = schema.entity_index(&path.start).ok_or_else(|| SchemaError::UnknownEntity(path.start.clone()))?;
    let mut current = path.start.as_str();
    let mut steps = Vec::with_capacity(path.steps.len());
    for s in &path.steps {
        match schema.generator(current, s) {
            Some(Generator::Fk(f)) => {
                steps.push(Step::Fk(schema.fk_index(current, s).unwrap()));
                current = &f.target;
            }
            Some(Generator::Attr(_)) => steps.push(Step::Attr(schema.attr_index(current, s).unwrap())),
            None => unreachable!("codomain succeeded"),
        }
    }
    Ok((start, steps))
}

/// A database state over a schema.
#[derive(Clone, Debug)]
pub struct Instance {
    pub(crate) schema: Schema,
    /// By entity index.
    pub(crate) tables: Vec<Table>,
    /// By global fk index; each entry is a row index in the target table.
    pub(crate) fk_cols: Vec<Vec<usize>>,
    /// By global attribute index.
    pub(crate) attr_cols: Vec<Vec<NodeId>>,
    pub(crate) values: Congruence,
}

impl Instance {
    pub fn empty(schema: &Schema) -> Instance {
        Instance {
            schema: schema.clone(),
            tables: alloc::vec![Table::default(); schema.entities.len()],
            fk_cols: alloc::vec![Vec::new(); schema.fks.len()],
            attr_cols: alloc::vec![Vec::new(); schema.attrs.len()],
            values: Congruence::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn values(&self) -> &Congruence {
        &self.values
    }

    fn entity(&self, entity: &str) -> Result<usize, InstanceError> {
        self.schema.entity_index(entity).ok_or_else(|| InstanceError::UnknownEntity(entity.into()))
    }

    fn row(&self, entity: &str, row: &str) -> Result<(usize, usize), InstanceError> {
        let e = self.entity(entity)?;
        let r = self.tables[e]
            .index
            .get(row)
            .copied()
            .ok_or_else(|| InstanceError::UnknownRow { entity: entity.into(), row: row.into() })?;
        Ok((e, r))
    }

    /// Row ids of `entity` in insertion order.
    pub fn row_ids(&self, entity: &str) -> Result<&[RowId], InstanceError> {
        Ok(&self.tables[self.entity(entity)?].ids)
    }

    pub fn row_count(&self, entity: &str) -> usize {
        self.schema.entity_index(entity).map_or(0, |e| self.tables[e].len())
    }

    pub fn total_rows(&self) -> usize {
        self.tables.iter().map(Table::len).sum()
    }

    pub fn has_row(&self, entity: &str, row: &str) -> bool {
        self.row(entity, row).is_ok()
    }

    pub fn fk(&self, entity: &str, fk: &str, row: &str) -> Result<&RowId, InstanceError> {
        let (_, r) = self.row(entity, row)?;
        let f = self
            .schema
            .fk_index(entity, fk)
            .ok_or_else(|| InstanceError::UnknownGenerator { entity: entity.into(), name: fk.into() })?;
        let target = self.schema.entity_index(&self.schema.fks[f].target).unwrap();
        Ok(&self.tables[target].ids[self.fk_cols[f][r]])
    }

    pub fn attr(&self, entity: &str, attr: &str, row: &str) -> Result<Value, InstanceError> {
        let (_, r) = self.row(entity, row)?;
        let a = self
            .schema
            .attr_index(entity, attr)
            .ok_or_else(|| InstanceError::UnknownGenerator { entity: entity.into(), name: attr.into() })?;
        Ok(self.values.value(self.attr_cols[a][r]))
    }

    /// Provenance tags of a row, sorted.
    pub fn lineage(&self, entity: &str, row: &str) -> Result<&[String], InstanceError> {
        let (e, r) = self.row(entity, row)?;
        Ok(&self.tables[e].lineage[r])
    }

    pub(crate) fn eval_compiled(&self, row: usize, steps: &[Step]) -> Ev {
        let mut r = row;
        for s in steps {
            match *s {
                Step::Fk(f) => r = self.fk_cols[f][r],
                Step::Attr(a) => return Ev::Node(self.attr_cols[a][r]),
            }
        }
        Ev::Row(r)
    }

    pub(crate) fn render(&self, entity: usize, ev: Ev) -> Evaluated {
        match ev {
            Ev::Row(r) => Evaluated::Row(self.tables[entity].ids[r].clone()),
            Ev::Node(n) => Evaluated::Value(self.values.value(n)),
        }
    }

    /// Follows `path` from the row `row` of the path's start entity.
    pub fn evaluate_path(&self, row: &str, path: &Path) -> Result<Evaluated, InstanceError> {
        let (_, r) = self.row(&path.start, row)?;
        let (_, steps) = compile_path(&self.schema, path)?;
        let end = self.end_entity(path);
        Ok(self.render(end, self.eval_compiled(r, &steps)))
    }

    /// Entity index where a path ends, or its start entity for attribute paths.
    fn end_entity(&self, path: &Path) -> usize {
        let along = self.schema.entities_along(path).unwrap_or_default();
        along.last().and_then(|e| self.schema.entity_index(e)).unwrap_or(0)
    }

    fn same(&self, a: Ev, b: Ev, opts: &CheckOptions) -> bool {
        match (a, b) {
            (Ev::Row(x), Ev::Row(y)) => x == y,
            (Ev::Node(x), Ev::Node(y)) => {
                if self.values.equal(x, y) {
                    return true;
                }
                match (self.values.literal(x), self.values.literal(y)) {
                    (Some(Literal::Float(p)), Some(Literal::Float(q))) => (p - q).abs() <= opts.float_tolerance,
                    _ => false,
                }
            }
            _ => false,
        }
    }

    /// Every (equation, row) pair where the two sides disagree, in equation
    /// declaration order then row insertion order. Ill-typed equations are
    /// skipped; validate the schema first.
    pub fn check(&self, opts: &CheckOptions) -> ViolationReport {
        let mut violations = Vec::new();
        for (i, eq) in self.schema.equations.iter().enumerate() {
            let (Ok((e, ls)), Ok((_, rs))) = (compile_path(&self.schema, &eq.lhs), compile_path(&self.schema, &eq.rhs)) else {
                continue;
            };
            let end = self.end_entity(&eq.lhs);
            for r in 0..self.tables[e].len() {
                let (a, b) = (self.eval_compiled(r, &ls), self.eval_compiled(r, &rs));
                if !self.same(a, b, opts) {
                    violations.push(Violation {
                        equation: eq.display_label(i),
                        entity: eq.lhs.start.clone(),
                        row: self.tables[e].ids[r].clone(),
                        lhs: self.render(end, a),
                        rhs: self.render(end, b),
                    });
                }
            }
        }
        ViolationReport { violations }
    }

    /// A copy of this instance in which `a` and `b` are the same value.
    /// Nulls and terms must already occur in the instance; literals need not.
    pub fn equate_nulls(&self, a: &Value, b: &Value, udfs: &UdfRegistry) -> Result<Instance, InstanceError> {
        let mut out = self.clone();
        let mut find = |v: &Value| match v {
            Value::Lit(l) => Ok(out.values.intern_lit(l)),
            Value::Null { label, .. } => out.values.lookup(v).ok_or_else(|| InstanceError::UnknownNull(label.clone())),
            other => out.values.lookup(other).ok_or_else(|| InstanceError::UnknownNull(format!("{other}"))),
        };
        let (x, y) = (find(a)?, find(b)?);
        out.values.union(x, y, udfs)?;
        Ok(out)
    }

    /// Structural equality up to row order: same rows, same references and
    /// same displayed values. Lineage is not compared.
    pub fn same_content(&self, other: &Instance) -> bool {
        if self.schema != other.schema {
            return false;
        }
        for (e, t) in self.tables.iter().enumerate() {
            let u = &other.tables[e];
            if t.len() != u.len() {
                return false;
            }
            for (r, id) in t.ids.iter().enumerate() {
                let Some(&s) = u.index.get(id) else { return false };
                let entity = &self.schema.entities[e];
                for (f, fk) in self.schema.fks.iter().enumerate() {
                    if &fk.source != entity {
                        continue;
                    }
                    let tgt = self.schema.entity_index(&fk.target).unwrap();
                    if self.tables[tgt].ids[self.fk_cols[f][r]] != other.tables[tgt].ids[other.fk_cols[f][s]] {
                        return false;
                    }
                }
                for (a, at) in self.schema.attrs.iter().enumerate() {
                    if &at.source == entity && self.values.value(self.attr_cols[a][r]) != other.values.value(other.attr_cols[a][s]) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.same_content(other)
    }
}

/// Checks a value tree against the registry and returns its type.
pub(crate) fn value_type(udfs: &UdfRegistry, v: &Value) -> Result<BaseType, UdfError> {
    match v {
        Value::Lit(l) => Ok(l.ty()),
        Value::Null { ty, .. } => Ok(*ty),
        Value::Term { func, args } => {
            let types = args.iter().map(|a| value_type(udfs, a)).collect::<Result<Vec<_>, _>>()?;
            udfs.check_call(func, &types)
        }
    }
}

fn collect_labels(v: &Value, out: &mut BTreeSet<String>) {
    match v {
        Value::Lit(_) => {}
        Value::Null { label, .. } => {
            out.insert(label.clone());
        }
        Value::Term { args, .. } => args.iter().for_each(|a| collect_labels(a, out)),
    }
}

/// Picks `<base>_<n>` for the smallest `n >= 1` not in `used`, and reserves it.
pub(crate) fn fresh_label(base: &str, counter: &mut usize, used: &mut BTreeSet<String>) -> String {
    loop {
        *counter += 1;
        let label = format!("{base}_{counter}");
        if used.insert(label.clone()) {
            return label;
        }
    }
}

/// Incremental construction of an [`Instance`].
///
/// Attributes left unset become fresh labelled nulls; foreign keys left
/// unset are an error.
#[derive(Clone, Debug)]
pub struct InstanceBuilder {
    schema: Schema,
    tables: Vec<Table>,
    fks: BTreeMap<(usize, usize), RowId>,
    attrs: BTreeMap<(usize, usize), Value>,
    equalities: Vec<(Value, Value)>,
}

impl InstanceBuilder {
    pub fn new(schema: &Schema) -> Self {
        InstanceBuilder {
            schema: schema.clone(),
            tables: alloc::vec![Table::default(); schema.entities.len()],
            fks: BTreeMap::new(),
            attrs: BTreeMap::new(),
            equalities: Vec::new(),
        }
    }

    fn row(&self, entity: &str, row: &str) -> Result<(usize, usize), InstanceError> {
        let e = self.schema.entity_index(entity).ok_or_else(|| InstanceError::UnknownEntity(entity.into()))?;
        let r = self.tables[e]
            .index
            .get(row)
            .copied()
            .ok_or_else(|| InstanceError::UnknownRow { entity: entity.into(), row: row.into() })?;
        Ok((e, r))
    }

    pub fn add_row(&mut self, entity: &str, id: &str) -> Result<(), InstanceError> {
        let e = self.schema.entity_index(entity).ok_or_else(|| InstanceError::UnknownEntity(entity.into()))?;
        if self.tables[e].index.contains_key(id) {
            return Err(InstanceError::DuplicateRow { entity: entity.into(), row: id.into() });
        }
        self.tables[e].push(id.into(), Vec::new());
        Ok(())
    }

    pub fn set_fk(&mut self, entity: &str, row: &str, fk: &str, target: &str) -> Result<(), InstanceError> {
        let (_, r) = self.row(entity, row)?;
        let f = self
            .schema
            .fk_index(entity, fk)
            .ok_or_else(|| InstanceError::UnknownGenerator { entity: entity.into(), name: fk.into() })?;
        self.fks.insert((f, r), target.into());
        Ok(())
    }

    pub fn set_attr(&mut self, entity: &str, row: &str, attr: &str, value: Value) -> Result<(), InstanceError> {
        let (_, r) = self.row(entity, row)?;
        let a = self
            .schema
            .attr_index(entity, attr)
            .ok_or_else(|| InstanceError::UnknownGenerator { entity: entity.into(), name: attr.into() })?;
        let expected = self.schema.attrs[a].ty;
        let found = match &value {
            Value::Lit(l) => Some(l.ty()),
            Value::Null { ty, .. } => Some(*ty),
            Value::Term { .. } => None,
        };
        if let Some(found) = found.filter(|f| *f != expected) {
            return Err(InstanceError::TypeMismatch { entity: entity.into(), row: row.into(), attr: attr.into(), expected, found });
        }
        self.attrs.insert((a, r), value);
        Ok(())
    }

    pub fn add_lineage(&mut self, entity: &str, row: &str, tag: &str) -> Result<(), InstanceError> {
        let (e, r) = self.row(entity, row)?;
        let l = &mut self.tables[e].lineage[r];
        if let Err(pos) = l.binary_search_by(|x| x.as_str().cmp(tag)) {
            l.insert(pos, tag.into());
        }
        Ok(())
    }

    /// Records that two values are equal; applied at [`finalize`](Self::finalize).
    pub fn equate(&mut self, a: Value, b: Value) {
        self.equalities.push((a, b));
    }

    pub fn finalize(self, udfs: &UdfRegistry) -> Result<Instance, InstanceError> {
        let schema = self.schema;
        let mut fk_cols = Vec::with_capacity(schema.fks.len());
        for (f, fk) in schema.fks.iter().enumerate() {
            let e = schema.entity_index(&fk.source).ok_or_else(|| InstanceError::UnknownEntity(fk.source.clone()))?;
            let t = schema.entity_index(&fk.target).ok_or_else(|| InstanceError::UnknownEntity(fk.target.clone()))?;
            let mut col = Vec::with_capacity(self.tables[e].len());
            for r in 0..self.tables[e].len() {
                let dangling = |target: Option<RowId>| InstanceError::DanglingForeignKey {
                    entity: fk.source.clone(),
                    row: self.tables[e].ids[r].clone(),
                    fk: fk.name.clone(),
                    target,
                };
                let target = self.fks.get(&(f, r)).ok_or_else(|| dangling(None))?;
                let idx = self.tables[t].index.get(target).ok_or_else(|| dangling(Some(target.clone())))?;
                col.push(*idx);
            }
            fk_cols.push(col);
        }

        let mut used = BTreeSet::new();
        for v in self.attrs.values() {
            collect_labels(v, &mut used);
        }
        for (a, b) in &self.equalities {
            collect_labels(a, &mut used);
            collect_labels(b, &mut used);
        }

        let mut values = Congruence::new();
        let mut attr_cols = Vec::with_capacity(schema.attrs.len());
        for (a, at) in schema.attrs.iter().enumerate() {
            let e = schema.entity_index(&at.source).ok_or_else(|| InstanceError::UnknownEntity(at.source.clone()))?;
            let mut counter = 0;
            let mut col = Vec::with_capacity(self.tables[e].len());
            for r in 0..self.tables[e].len() {
                let node = match self.attrs.get(&(a, r)) {
                    Some(v) => {
                        let found = value_type(udfs, v)?;
                        if found != at.ty {
                            return Err(InstanceError::TypeMismatch {
                                entity: at.source.clone(),
                                row: self.tables[e].ids[r].clone(),
                                attr: at.name.clone(),
                                expected: at.ty,
                                found,
                            });
                        }
                        values.intern(v, udfs)?
                    }
                    None => {
                        let label = fresh_label(&format!("{}_{}", at.source, at.name), &mut counter, &mut used);
                        values.intern_null(&label, at.ty)
                    }
                };
                col.push(node);
            }
            attr_cols.push(col);
        }
        for (a, b) in &self.equalities {
            value_type(udfs, a)?;
            value_type(udfs, b)?;
            let x = values.intern(a, udfs)?;
            let y = values.intern(b, udfs)?;
            values.union(x, y, udfs)?;
        }
        Ok(Instance { schema, tables: self.tables, fk_cols, attr_cols, values })
    }
}
