//! The chase engine shared by sigma and merge.
//!
//! Rows live in per-entity union-find forests. Foreign keys and attributes
//! may be undefined while the chase runs; each round first fires the target
//! equations (identifying rows and values, or filling in a missing last
//! step), then makes every fk and attribute total by inventing fresh rows
//! and labelled nulls. Rows that become equal are merged, and their fk and
//! attribute values are merged in turn.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{ChaseConfig, Conflict, MigrateError};
use crate::catcore::Schema;
use crate::instance::{compile_path, fresh_label, Congruence, Instance, InstanceError, NodeId, RowId, Step, Table};
use crate::mapping::{AttrExpr, Mapping};
use crate::udf::UdfRegistry;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Cell {
    Row(usize),
    Node(NodeId),
}

enum Walk {
    Done(Cell),
    /// Step `at` is undefined at row `row`.
    Stuck { at: usize, row: usize },
}

struct CompiledEq {
    lhs: Vec<Step>,
    rhs: Vec<Step>,
    /// Entity where both sides end, for entity-valued equations.
    end: usize,
}

pub(crate) struct Chase<'a> {
    pub schema: &'a Schema,
    udfs: &'a UdfRegistry,
    cfg: ChaseConfig,
    pub ids: Vec<Vec<RowId>>,
    used_ids: Vec<BTreeSet<RowId>>,
    lineage: Vec<Vec<BTreeSet<String>>>,
    parent: Vec<Vec<usize>>,
    pub fks: Vec<Vec<Option<usize>>>,
    pub attrs: Vec<Vec<Option<NodeId>>>,
    pub values: Congruence,
    used_labels: BTreeSet<String>,
    fk_source: Vec<usize>,
    fk_target: Vec<usize>,
    attr_source: Vec<usize>,
    fks_of: Vec<Vec<usize>>,
    attrs_of: Vec<Vec<usize>>,
    /// Equations grouped by start entity, entities in lexicographic order.
    equations: Vec<(usize, Vec<CompiledEq>)>,
    fresh_rows: usize,
    fresh_counters: BTreeMap<String, usize>,
    pub rounds: usize,
    /// Contradictions found while linking records are key conflicts.
    pub linking: bool,
}

impl<'a> Chase<'a> {
    pub fn new(schema: &'a Schema, udfs: &'a UdfRegistry, cfg: ChaseConfig) -> Self {
        let n = schema.entities.len();
        let ent = |name: &str| schema.entity_index(name).expect("validated schema");
        let fk_source: Vec<usize> = schema.fks.iter().map(|f| ent(&f.source)).collect();
        let fk_target: Vec<usize> = schema.fks.iter().map(|f| ent(&f.target)).collect();
        let attr_source: Vec<usize> = schema.attrs.iter().map(|a| ent(&a.source)).collect();
        let mut fks_of = vec![Vec::new(); n];
        for (i, &e) in fk_source.iter().enumerate() {
            fks_of[e].push(i);
        }
        let mut attrs_of = vec![Vec::new(); n];
        for (i, &e) in attr_source.iter().enumerate() {
            attrs_of[e].push(i);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| schema.entities[a].cmp(&schema.entities[b]));
        let mut equations = Vec::new();
        for e in order {
            let mut eqs = Vec::new();
            for eq in schema.equations.iter().filter(|q| q.lhs.start == schema.entities[e]) {
                if let (Ok((_, lhs)), Ok((_, rhs))) = (compile_path(schema, &eq.lhs), compile_path(schema, &eq.rhs)) {
                    let along = schema.entities_along(&eq.lhs).unwrap_or_default();
                    let end = along.last().and_then(|x| schema.entity_index(x)).unwrap_or(e);
                    eqs.push(CompiledEq { lhs, rhs, end });
                }
            }
            if !eqs.is_empty() {
                equations.push((e, eqs));
            }
        }
        Chase {
            schema,
            udfs,
            cfg,
            ids: vec![Vec::new(); n],
            used_ids: vec![BTreeSet::new(); n],
            lineage: vec![Vec::new(); n],
            parent: vec![Vec::new(); n],
            fks: vec![Vec::new(); schema.fks.len()],
            attrs: vec![Vec::new(); schema.attrs.len()],
            values: Congruence::new(),
            used_labels: BTreeSet::new(),
            fk_source,
            fk_target,
            attr_source,
            fks_of,
            attrs_of,
            equations,
            fresh_rows: 0,
            fresh_counters: BTreeMap::new(),
            rounds: 0,
            linking: false,
        }
    }

    pub fn row_count(&self, e: usize) -> usize {
        self.ids[e].len()
    }

    pub fn find(&self, e: usize, mut r: usize) -> usize {
        while self.parent[e][r] != r {
            r = self.parent[e][r];
        }
        r
    }

    pub fn is_root(&self, e: usize, r: usize) -> bool {
        self.parent[e][r] == r
    }

    /// Adds a row; `id` is used as is when free in the entity, otherwise
    /// `fallback` (made unique with a `#n` suffix).
    pub fn add_row(&mut self, e: usize, id: &str, fallback: &str, lineage: impl IntoIterator<Item = String>) -> usize {
        let mut chosen = String::from(id);
        if self.used_ids[e].contains(&chosen) {
            chosen = String::from(fallback);
            let mut n = 1;
            while self.used_ids[e].contains(&chosen) {
                n += 1;
                chosen = format!("{fallback}#{n}");
            }
        }
        self.used_ids[e].insert(chosen.clone());
        let r = self.ids[e].len();
        self.ids[e].push(chosen);
        self.lineage[e].push(lineage.into_iter().collect());
        self.parent[e].push(r);
        for &f in &self.fks_of[e] {
            self.fks[f].push(None);
        }
        for &a in &self.attrs_of[e] {
            self.attrs[a].push(None);
        }
        r
    }

    fn fresh_row(&mut self, e: usize, base: &str) -> Result<usize, MigrateError> {
        if self.fresh_rows >= self.cfg.max_fresh_rows {
            return Err(self.budget());
        }
        self.fresh_rows += 1;
        let counter = self.fresh_counters.entry(String::from(base)).or_insert(0);
        loop {
            *counter += 1;
            let id = format!("?{base}_{counter}");
            if !self.used_ids[e].contains(&id) {
                return Ok(self.add_row(e, &id, &id, []));
            }
        }
    }

    fn budget(&self) -> MigrateError {
        MigrateError::ChaseBudgetExceeded {
            rounds: self.rounds,
            fresh_rows: self.fresh_rows,
            max_rounds: self.cfg.max_rounds,
            max_fresh_rows: self.cfg.max_fresh_rows,
        }
    }

    pub fn fresh_null(&mut self, a: usize) -> NodeId {
        let at = &self.schema.attrs[a];
        let base = format!("{}_{}", at.source, at.name);
        let counter = self.fresh_counters.entry(base.clone()).or_insert(0);
        let label = fresh_label(&base, counter, &mut self.used_labels);
        self.values.intern_null(&label, at.ty)
    }

    /// Copies the values of `inst` in, renaming nulls whose label is taken.
    /// Returns the image of each node.
    pub fn import_values(&mut self, inst: &Instance, prefix: &str) -> Result<Vec<NodeId>, MigrateError> {
        let mut taken: BTreeSet<String> = self.values.null_labels().map(String::from).collect();
        taken.extend(self.used_labels.iter().cloned());
        let mut renamed = BTreeMap::new();
        let map = self
            .values
            .import(
                inst.values(),
                |label| {
                    if let Some(l) = renamed.get(label) {
                        return String::clone(l);
                    }
                    let mut out = String::from(label);
                    let mut n = 1;
                    while taken.contains(&out) {
                        out = if n == 1 { format!("{prefix}.{label}") } else { format!("{prefix}.{label}#{n}") };
                        n += 1;
                    }
                    taken.insert(out.clone());
                    renamed.insert(String::from(label), out.clone());
                    out
                },
                self.udfs,
            )
            .map_err(value_error)?;
        self.used_labels = taken;
        Ok(map)
    }

    fn get_fk(&self, f: usize, r: usize) -> Option<usize> {
        self.fks[f][r].map(|t| self.find(self.fk_target[f], t))
    }

    fn walk(&self, e: usize, row: usize, steps: &[Step]) -> Walk {
        let mut r = self.find(e, row);
        for (i, s) in steps.iter().enumerate() {
            match *s {
                Step::Fk(f) => match self.get_fk(f, r) {
                    Some(t) => r = t,
                    None => return Walk::Stuck { at: i, row: r },
                },
                Step::Attr(a) => {
                    return match self.attrs[a][r] {
                        Some(n) => Walk::Done(Cell::Node(n)),
                        None => Walk::Stuck { at: i, row: r },
                    }
                }
            }
        }
        Walk::Done(Cell::Row(r))
    }

    /// Follows `steps` from `row`, inventing rows for missing fks along the
    /// way. For an attribute-ending path the final cell becomes a fresh null
    /// when unset.
    pub fn walk_create(&mut self, e: usize, row: usize, steps: &[Step]) -> Result<Cell, MigrateError> {
        let mut r = self.find(e, row);
        for s in steps {
            match *s {
                Step::Fk(f) => {
                    r = match self.get_fk(f, r) {
                        Some(t) => t,
                        None => {
                            let base = format!("{}_{}", self.schema.fks[f].source, self.schema.fks[f].name);
                            let t = self.fresh_row(self.fk_target[f], &base)?;
                            self.fks[f][r] = Some(t);
                            t
                        }
                    };
                }
                Step::Attr(a) => {
                    let n = match self.attrs[a][r] {
                        Some(n) => n,
                        None => {
                            let n = self.fresh_null(a);
                            self.attrs[a][r] = Some(n);
                            n
                        }
                    };
                    return Ok(Cell::Node(n));
                }
            }
        }
        Ok(Cell::Row(r))
    }

    /// Makes the path `steps` from `row` end at `value`, creating what is
    /// missing on the way.
    pub fn assert_path(&mut self, e: usize, row: usize, steps: &[Step], value: Cell) -> Result<(), MigrateError> {
        let Some((last, prefix)) = steps.split_last() else {
            let Cell::Row(v) = value else { unreachable!("identity path has entity type") };
            return self.merge_rows(e, row, v);
        };
        let Cell::Row(r) = self.walk_create(e, row, prefix)? else { unreachable!("prefix is entity-valued") };
        self.set_step(*last, r, value)
    }

    fn set_step(&mut self, step: Step, r: usize, value: Cell) -> Result<(), MigrateError> {
        match (step, value) {
            (Step::Fk(f), Cell::Row(v)) => match self.get_fk(f, r) {
                Some(t) => self.merge_rows(self.fk_target[f], t, v),
                None => {
                    self.fks[f][r] = Some(v);
                    Ok(())
                }
            },
            (Step::Attr(a), Cell::Node(n)) => match self.attrs[a][r] {
                Some(m) => self.union_values(self.attr_source[a], r, r, Some(a), m, n),
                None => {
                    self.attrs[a][r] = Some(n);
                    Ok(())
                }
            },
            _ => unreachable!("well-typed step"),
        }
    }

    pub fn union_values(&mut self, e: usize, r1: usize, r2: usize, attr: Option<usize>, a: NodeId, b: NodeId) -> Result<(), MigrateError> {
        match self.values.union(a, b, self.udfs) {
            Ok(_) => Ok(()),
            Err(InstanceError::Contradiction { left, right }) => {
                let entity = self.schema.entities[e].clone();
                let attribute = attr.map(|a| self.schema.attrs[a].name.clone());
                Err(if self.linking {
                    let rows = (self.ids[e][r1].clone(), self.ids[e][r2].clone());
                    MigrateError::KeyConflict(Conflict { entity, rows, attribute, left, right })
                } else {
                    MigrateError::Contradiction { entity, attribute, left, right }
                })
            }
            Err(other) => Err(MigrateError::Instance(other)),
        }
    }

    /// Identifies two rows and everything that follows from it.
    pub fn merge_rows(&mut self, e: usize, a: usize, b: usize) -> Result<(), MigrateError> {
        let mut pending = vec![(e, a, b)];
        while let Some((e, a, b)) = pending.pop() {
            let (ra, rb) = (self.find(e, a), self.find(e, b));
            if ra == rb {
                continue;
            }
            let (keep, gone) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[e][gone] = keep;
            let moved = core::mem::take(&mut self.lineage[e][gone]);
            self.lineage[e][keep].extend(moved);
            for i in 0..self.fks_of[e].len() {
                let f = self.fks_of[e][i];
                match (self.get_fk(f, keep), self.get_fk(f, gone)) {
                    (Some(x), Some(y)) if x != y => pending.push((self.fk_target[f], x, y)),
                    (None, Some(y)) => self.fks[f][keep] = Some(y),
                    _ => {}
                }
            }
            for i in 0..self.attrs_of[e].len() {
                let at = self.attrs_of[e][i];
                match (self.attrs[at][keep], self.attrs[at][gone]) {
                    (Some(x), Some(y)) => self.union_values(e, keep, gone, Some(at), x, y)?,
                    (None, Some(y)) => self.attrs[at][keep] = Some(y),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Value of an attribute expression at `row`, creating what it needs.
    pub fn expr_node(&mut self, e: usize, row: usize, expr: &AttrExpr) -> Result<NodeId, MigrateError> {
        Ok(match expr {
            AttrExpr::Path(p) => {
                let (_, steps) = compile_path(self.schema, p).map_err(|err| MigrateError::Instance(err.into()))?;
                match self.walk_create(e, row, &steps)? {
                    Cell::Node(n) => n,
                    Cell::Row(_) => unreachable!("attribute path"),
                }
            }
            AttrExpr::Const(l) => self.values.intern_lit(l),
            AttrExpr::Null(_) => unreachable!("null expressions carry no constraint"),
            AttrExpr::Apply { func, args } => {
                let args = args.iter().map(|a| self.expr_node(e, row, a)).collect::<Result<Vec<_>, _>>()?;
                let n = self.values.intern_app_raw(func, args);
                self.values.close(self.udfs).map_err(value_error)?;
                n
            }
        })
    }

    /// Seeds the chase with `inst` pushed along `m` (whose target is this
    /// chase's schema). Returns the target row of every source row, by
    /// source entity index.
    pub fn seed(&mut self, m: &Mapping, inst: &Instance, db: &str) -> Result<Vec<Vec<usize>>, MigrateError> {
        let src = inst.schema();
        let nodes = self.import_values(inst, db)?;
        let mut placed = Vec::with_capacity(src.entities.len());
        for (se, name) in src.entities.iter().enumerate() {
            let te = self.schema.entity_index(&m.entity_map[name]).expect("well-formed mapping");
            let table = &inst.tables[se];
            let mut rows = Vec::with_capacity(table.len());
            for (r, id) in table.ids.iter().enumerate() {
                let lineage = if table.lineage[r].is_empty() {
                    vec![format!("src:{db}:{name}:{id}")]
                } else {
                    table.lineage[r].clone()
                };
                rows.push(self.add_row(te, id, &format!("{db}.{name}.{id}"), lineage));
            }
            placed.push(rows);
        }
        for (f, fk) in src.fks.iter().enumerate() {
            let se = src.entity_index(&fk.source).unwrap();
            let st = src.entity_index(&fk.target).unwrap();
            let te = self.schema.entity_index(&m.entity_map[&fk.source]).unwrap();
            let img = &m.fk_map[&crate::mapping::GenRef::new(&fk.source, &fk.name)];
            let (_, steps) = compile_path(self.schema, img).map_err(|e| MigrateError::Instance(e.into()))?;
            for r in 0..inst.tables[se].len() {
                let target = placed[st][inst.fk_cols[f][r]];
                self.assert_path(te, placed[se][r], &steps, Cell::Row(target))?;
            }
        }
        for (a, at) in src.attrs.iter().enumerate() {
            let se = src.entity_index(&at.source).unwrap();
            let te = self.schema.entity_index(&m.entity_map[&at.source]).unwrap();
            let expr = &m.attr_map[&crate::mapping::GenRef::new(&at.source, &at.name)];
            if matches!(expr, AttrExpr::Null(_)) {
                continue;
            }
            for r in 0..inst.tables[se].len() {
                let value = nodes[inst.attr_cols[a][r].index()];
                let row = placed[se][r];
                match expr {
                    AttrExpr::Path(p) => {
                        let (_, steps) = compile_path(self.schema, p).map_err(|e| MigrateError::Instance(e.into()))?;
                        self.assert_path(te, row, &steps, Cell::Node(value))?;
                    }
                    other => {
                        let n = self.expr_node(te, row, other)?;
                        self.union_values(te, row, row, None, n, value)?;
                    }
                }
            }
        }
        Ok(placed)
    }

    /// Fires every equation once. Returns whether anything changed.
    fn fire_equations(&mut self) -> Result<bool, MigrateError> {
        let mut changed = false;
        for gi in 0..self.equations.len() {
            let e = self.equations[gi].0;
            for r in 0..self.ids[e].len() {
                if !self.is_root(e, r) {
                    continue;
                }
                for qi in 0..self.equations[gi].1.len() {
                    let eq = &self.equations[gi].1[qi];
                    let (l, rr) = (self.walk(e, r, &eq.lhs), self.walk(e, r, &eq.rhs));
                    let end = eq.end;
                    let outcome = match (l, rr) {
                        (Walk::Done(a), Walk::Done(b)) => self.identify(e, r, end, a, b)?,
                        (Walk::Stuck { at, row }, Walk::Done(b)) if at + 1 == eq.lhs.len() => {
                            let step = eq.lhs[at];
                            self.set_step(step, row, b)?;
                            true
                        }
                        (Walk::Done(a), Walk::Stuck { at, row }) if at + 1 == eq.rhs.len() => {
                            let step = eq.rhs[at];
                            self.set_step(step, row, a)?;
                            true
                        }
                        _ => false,
                    };
                    changed |= outcome;
                }
            }
        }
        Ok(changed)
    }

    fn identify(&mut self, e: usize, r: usize, end: usize, a: Cell, b: Cell) -> Result<bool, MigrateError> {
        match (a, b) {
            (Cell::Row(x), Cell::Row(y)) => {
                if x == y {
                    return Ok(false);
                }
                self.merge_rows(end, x, y)?;
                Ok(true)
            }
            (Cell::Node(x), Cell::Node(y)) => {
                if self.values.equal(x, y) {
                    return Ok(false);
                }
                self.union_values(e, r, r, None, x, y)?;
                Ok(true)
            }
            _ => unreachable!("equation sides have the same type"),
        }
    }

    /// Makes every fk and attribute of the rows present now defined.
    fn fill(&mut self) -> Result<bool, MigrateError> {
        let mut changed = false;
        for e in 0..self.ids.len() {
            let n = self.ids[e].len();
            for r in 0..n {
                if !self.is_root(e, r) {
                    continue;
                }
                for i in 0..self.fks_of[e].len() {
                    let f = self.fks_of[e][i];
                    if self.fks[f][r].is_none() {
                        let base = format!("{}_{}", self.schema.fks[f].source, self.schema.fks[f].name);
                        let t = self.fresh_row(self.fk_target[f], &base)?;
                        self.fks[f][r] = Some(t);
                        changed = true;
                    }
                }
                for i in 0..self.attrs_of[e].len() {
                    let a = self.attrs_of[e][i];
                    if self.attrs[a][r].is_none() {
                        let node = self.fresh_null(a);
                        self.attrs[a][r] = Some(node);
                        changed = true;
                    }
                }
            }
        }
        Ok(changed)
    }

    /// Runs rounds until nothing changes.
    pub fn run(&mut self) -> Result<(), MigrateError> {
        loop {
            if self.rounds >= self.cfg.max_rounds {
                return Err(self.budget());
            }
            self.rounds += 1;
            let mut changed = false;
            while self.fire_equations()? {
                changed = true;
            }
            changed |= self.fill()?;
            if !changed {
                return Ok(());
            }
        }
    }

    /// Current value at the end of a path from a root row, if defined.
    pub fn eval(&self, e: usize, row: usize, steps: &[Step]) -> Option<Cell> {
        match self.walk(e, row, steps) {
            Walk::Done(c) => Some(c),
            Walk::Stuck { .. } => None,
        }
    }

    /// The chased instance. Call after [`run`](Self::run).
    pub fn finish(self) -> Instance {
        let schema = self.schema;
        let n = schema.entities.len();
        let mut new_index: Vec<Vec<usize>> = Vec::with_capacity(n);
        let mut tables = Vec::with_capacity(n);
        for e in 0..n {
            let mut table = Table::default();
            let mut idx = vec![usize::MAX; self.ids[e].len()];
            for r in 0..self.ids[e].len() {
                if self.is_root(e, r) {
                    idx[r] = table.push(self.ids[e][r].clone(), self.lineage[e][r].iter().cloned().collect());
                }
            }
            new_index.push(idx);
            tables.push(table);
        }
        let mut fk_cols = Vec::with_capacity(schema.fks.len());
        for f in 0..schema.fks.len() {
            let (s, t) = (self.fk_source[f], self.fk_target[f]);
            let col = (0..self.ids[s].len())
                .filter(|&r| self.is_root(s, r))
                .map(|r| new_index[t][self.find(t, self.fks[f][r].expect("total after chase"))])
                .collect();
            fk_cols.push(col);
        }
        let mut attr_cols = Vec::with_capacity(schema.attrs.len());
        for a in 0..schema.attrs.len() {
            let s = self.attr_source[a];
            let col = (0..self.ids[s].len())
                .filter(|&r| self.is_root(s, r))
                .map(|r| self.attrs[a][r].expect("total after chase"))
                .collect();
            attr_cols.push(col);
        }
        Instance { schema: schema.clone(), tables, fk_cols, attr_cols, values: self.values }
    }
}

pub(crate) fn value_error(e: InstanceError) -> MigrateError {
    match e {
        InstanceError::Contradiction { left, right } => MigrateError::Contradiction { entity: String::new(), attribute: None, left, right },
        other => MigrateError::Instance(other),
    }
}
