//! Name resolution and type checking from syntax trees to engine objects.
//!
//! Mappings are only checked for well-typedness here; whether they preserve
//! the source equations is `check_mapping`'s job.

use std::collections::BTreeMap;

use funmig_core::{
    validate_schema, AttrExpr, BaseType, CmpOp, GenRef, Instance, InstanceBuilder, InstanceError, Literal, Mapping,
    MappingError, MergeSpec, Path, Predicate, Schema, SchemaError, UdfError, UdfRegistry, Value,
};

use super::ast::*;
use super::{Diag, Span, Stage};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PipelineStep {
    Delta(String),
    Sigma(String),
    Filter(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pipeline {
    pub name: String,
    pub steps: Vec<PipelineStep>,
    /// Schema the first step consumes.
    pub input: String,
    pub output: String,
}

/// A filter together with the schema it applies to.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterDef {
    pub schema: String,
    pub predicate: Predicate,
}

/// Everything declared by a set of files.
#[derive(Debug)]
pub struct Project {
    /// Built-in functions plus declared constants.
    pub udfs: UdfRegistry,
    pub schemas: BTreeMap<String, Schema>,
    pub mappings: BTreeMap<String, Mapping>,
    pub instances: BTreeMap<String, Instance>,
    pub merges: BTreeMap<String, MergeSpec>,
    pub filters: BTreeMap<String, FilterDef>,
    pub pipelines: BTreeMap<String, Pipeline>,
}

impl Default for Project {
    fn default() -> Self {
        Project {
            udfs: UdfRegistry::with_builtins(),
            schemas: BTreeMap::new(),
            mappings: BTreeMap::new(),
            instances: BTreeMap::new(),
            merges: BTreeMap::new(),
            filters: BTreeMap::new(),
            pipelines: BTreeMap::new(),
        }
    }
}

/// Elaborates `decls` in dependency order (constants, schemas, mappings,
/// filters, instances, merges, pipelines). Declarations that fail are left
/// out of the project; all problems found are returned.
pub fn elaborate(decls: &[Decl]) -> (Project, Vec<Diag>) {
    let mut e = Elab { p: Project::default(), diags: Vec::new() };
    let mut seen: BTreeMap<&str, Span> = BTreeMap::new();
    let mut unique = Vec::new();
    for d in decls {
        let Some(name) = d.name() else { continue };
        if let Some(first) = seen.get(name.node.as_str()) {
            e.diags.push(Diag::elab(
                "DuplicateDeclaration",
                format!("`{}` is already declared at {}:{}", name.node, first.line, first.col),
                name.span,
            ));
            continue;
        }
        seen.insert(&name.node, name.span);
        unique.push(d);
    }
    let rank = |d: &Decl| match d {
        Decl::Import(_) => 0,
        Decl::Constant(_) => 1,
        Decl::Schema(_) => 2,
        Decl::Mapping(_) => 3,
        Decl::Filter(_) => 4,
        Decl::Instance(_) => 5,
        Decl::Merge(_) => 6,
        Decl::Migrate(_) => 7,
    };
    unique.sort_by_key(|d| rank(d));
    for d in unique {
        let r = match d {
            Decl::Import(_) => Ok(()),
            Decl::Constant(c) => e.constant(c),
            Decl::Schema(s) => e.schema(s),
            Decl::Mapping(m) => e.mapping(m),
            Decl::Filter(f) => e.filter(f),
            Decl::Instance(i) => e.instance(i),
            Decl::Merge(m) => e.merge(m),
            Decl::Migrate(m) => e.migrate(m),
        };
        if let Err(d) = r {
            e.diags.push(d);
        }
    }
    (e.p, e.diags)
}

struct Elab {
    p: Project,
    diags: Vec<Diag>,
}

fn unresolved(what: &str, name: &Ident) -> Diag {
    Diag::elab("UnresolvedName", format!("unknown {what} `{}`", name.node), name.span)
}

fn mismatch(msg: impl Into<String>, span: Span) -> Diag {
    Diag::elab("TypeMismatch", msg, span)
}

fn to_path(p: &PathAst) -> Path {
    Path::new(&p.start.node, p.steps.iter().map(|s| s.node.clone()))
}

fn schema_error(e: SchemaError, span: Span) -> Diag {
    match e {
        SchemaError::UnknownEntity(_) | SchemaError::UnknownGenerator { .. } => Diag::elab("UnresolvedName", e.to_string(), span),
        _ => mismatch(e.to_string(), span),
    }
}

fn udf_error(e: UdfError, span: Span) -> Diag {
    match e {
        UdfError::UnknownFunction(_) => Diag::elab("UnresolvedName", e.to_string(), span),
        UdfError::Evaluation { .. } => Diag::elab("Evaluation", e.to_string(), span),
        _ => mismatch(e.to_string(), span),
    }
}

pub fn base_type(ty: &Ident) -> Result<BaseType, Diag> {
    BaseType::from_name(&ty.node).ok_or_else(|| unresolved("type", ty))
}

/// A literal at `expected` type; integers widen to floats.
pub fn literal(lit: &Spanned<LitAst>, expected: Option<BaseType>) -> Result<Literal, Diag> {
    let span = lit.span;
    let value = match &lit.node {
        LitAst::Int(raw) if expected == Some(BaseType::Float) => {
            Literal::Float(raw.parse().map_err(|_| mismatch(format!("`{raw}` is not a number"), span))?)
        }
        LitAst::Int(raw) => {
            Literal::Int(raw.parse().map_err(|_| mismatch(format!("integer `{raw}` is out of range"), span))?)
        }
        LitAst::Float(raw) => Literal::Float(raw.parse().map_err(|_| mismatch(format!("`{raw}` is not a number"), span))?),
        LitAst::Str(s) => Literal::Str(s.clone()),
        LitAst::Bool(b) => Literal::Bool(*b),
    };
    match expected {
        Some(t) if value.ty() != t => Err(mismatch(format!("expected {t}, found {} literal {value}", value.ty()), span)),
        _ => Ok(value),
    }
}

/// The value of an instance cell at type `expected`. Functions applied to
/// literals are evaluated; applied to nulls they stay symbolic.
pub fn cell_value(cell: &CellAst, expected: BaseType, udfs: &UdfRegistry) -> Result<Value, Diag> {
    match cell {
        CellAst::Lit(l) => literal(l, Some(expected)).map(Value::Lit),
        CellAst::Null(label) => Ok(Value::null(&label.node, expected)),
        CellAst::Ref(r) => Err(mismatch(format!("expected a {expected} value, found identifier `{}`", r.node), r.span)),
        CellAst::Call(f, args) => {
            let sig = udfs.signature(&f.node).ok_or_else(|| unresolved("function", f))?.clone();
            if sig.ret != expected {
                return Err(mismatch(format!("`{}` returns {}, expected {expected}", f.node, sig.ret), f.span));
            }
            if sig.args.len() != args.len() {
                return Err(mismatch(format!("`{}` takes {} arguments, got {}", f.node, sig.args.len(), args.len()), f.span));
            }
            let vals = args.iter().zip(&sig.args).map(|(a, t)| cell_value(a, *t, udfs)).collect::<Result<Vec<_>, _>>()?;
            udfs.apply(&f.node, &vals).map_err(|e| udf_error(e, f.span))
        }
    }
}

/// A foreign-key cell names a row: a bare identifier, an integer or a string.
pub fn cell_row(cell: &CellAst) -> Result<String, Diag> {
    match cell {
        CellAst::Ref(r) => Ok(r.node.clone()),
        CellAst::Lit(Spanned { node: LitAst::Int(s) | LitAst::Str(s), .. }) => Ok(s.clone()),
        CellAst::Lit(l) => Err(mismatch("expected a row id", l.span)),
        CellAst::Null(l) => Err(mismatch("foreign keys cannot be null", l.span)),
        CellAst::Call(f, _) => Err(mismatch("expected a row id, found a function call", f.span)),
    }
}

fn instance_error(e: InstanceError, span: Span) -> Diag {
    let code = match &e {
        InstanceError::UnknownEntity(_) | InstanceError::UnknownGenerator { .. } | InstanceError::UnknownRow { .. } => "UnresolvedName",
        InstanceError::DuplicateRow { .. } => "DuplicateId",
        InstanceError::DanglingForeignKey { .. } => "DanglingForeignKey",
        InstanceError::TypeMismatch { .. } => "TypeMismatch",
        InstanceError::Contradiction { .. } => "Contradiction",
        _ => "Instance",
    };
    Diag::elab(code, e.to_string(), span)
}

fn op(o: OpAst) -> CmpOp {
    match o {
        OpAst::Eq => CmpOp::Eq,
        OpAst::Ne => CmpOp::Ne,
        OpAst::Lt => CmpOp::Lt,
        OpAst::Le => CmpOp::Le,
        OpAst::Gt => CmpOp::Gt,
        OpAst::Ge => CmpOp::Ge,
    }
}

impl Elab {
    fn schema_ref(&self, name: &Ident) -> Result<Schema, Diag> {
        self.p.schemas.get(&name.node).cloned().ok_or_else(|| unresolved("schema", name))
    }

    fn mapping_ref(&self, name: &Ident) -> Result<&Mapping, Diag> {
        self.p.mappings.get(&name.node).ok_or_else(|| unresolved("mapping", name))
    }

    fn constant(&mut self, c: &ConstantDecl) -> Result<(), Diag> {
        let ty = base_type(&c.ty)?;
        let value = literal(&c.value, Some(ty))?;
        self.p.udfs.register_constant(&c.name.node, value).map_err(|_| {
            Diag::elab("DuplicateDeclaration", format!("`{}` is a built-in function", c.name.node), c.name.span)
        })
    }

    fn schema(&mut self, d: &SchemaDecl) -> Result<(), Diag> {
        let mut s = Schema::new(&d.name.node);
        s.entities = d.entities.iter().map(|e| e.node.clone()).collect();
        for f in &d.fks {
            s = s.fk(&f.name.node, &f.source.node, &f.target.node);
        }
        for a in &d.attrs {
            s = s.attr(&a.name.node, &a.source.node, base_type(&a.ty)?);
        }
        for eq in &d.equations {
            s = s.equation(eq.label.as_ref().map(|l| l.node.as_str()), to_path(&eq.lhs), to_path(&eq.rhs));
        }
        for v in validate_schema(&s) {
            let span = element_span(d, &v.element);
            self.diags.push(Diag::new(Stage::Validation, v.code.as_str(), v.message.clone(), span));
        }
        self.p.schemas.insert(s.name.clone(), s);
        Ok(())
    }

    fn mapping(&mut self, d: &MappingDecl) -> Result<(), Diag> {
        let source = self.schema_ref(&d.source)?;
        let target = self.schema_ref(&d.target)?;
        let mut m = Mapping::new(&d.name.node, &source, &target);
        for (a, b) in &d.entities {
            if !source.has_entity(&a.node) {
                return Err(unresolved(&format!("entity of `{}`", source.name), a));
            }
            if !target.has_entity(&b.node) {
                return Err(unresolved(&format!("entity of `{}`", target.name), b));
            }
            if m.entity_map.insert(a.node.clone(), b.node.clone()).is_some() {
                return Err(Diag::elab("DuplicateDeclaration", format!("entity `{}` is mapped twice", a.node), a.span));
            }
        }
        let mut spans: BTreeMap<GenRef, Span> = BTreeMap::new();
        for (g, p) in &d.fks {
            let gref = resolve_gen(&source, g, true)?;
            let path = to_path(p);
            target.codomain(&path).map_err(|e| schema_error(e, p.start.span))?;
            if m.fk_map.insert(gref.clone(), path).is_some() {
                return Err(Diag::elab("DuplicateDeclaration", format!("`{gref}` is mapped twice"), g.name.span));
            }
            spans.insert(gref, g.name.span);
        }
        for (g, x) in &d.attrs {
            let gref = resolve_gen(&source, g, false)?;
            let ty = source.find_attr(&gref.entity, &gref.name).map(|a| a.ty).expect("resolved");
            let expr = self.expr(x, ty, &target)?;
            if m.attr_map.insert(gref.clone(), expr).is_some() {
                return Err(Diag::elab("DuplicateDeclaration", format!("`{gref}` is mapped twice"), g.name.span));
            }
            spans.insert(gref, g.name.span);
        }
        if let Err(e) = m.well_formed(&self.p.udfs) {
            // Missing images are reported by the mapping check.
            if let MappingError::IllTyped { generator, .. }
            | MappingError::WrongType { generator, .. }
            | MappingError::TooManyPaths { generator, .. } = &e
            {
                return Err(mismatch(e.to_string(), spans.get(generator).copied().unwrap_or(d.name.span)));
            }
        }
        self.p.mappings.insert(m.name.clone(), m);
        Ok(())
    }

    fn expr(&self, x: &ExprAst, expected: BaseType, target: &Schema) -> Result<AttrExpr, Diag> {
        match x {
            ExprAst::Path(p) => {
                let path = to_path(p);
                target.codomain(&path).map_err(|e| schema_error(e, p.start.span))?;
                Ok(AttrExpr::Path(path))
            }
            ExprAst::Lit(l) => literal(l, Some(expected)).map(AttrExpr::Const),
            ExprAst::Null(_) => Ok(AttrExpr::Null(expected)),
            ExprAst::Call(f, args) => {
                let sig = self.p.udfs.signature(&f.node).ok_or_else(|| unresolved("function", f))?;
                if sig.ret != expected {
                    return Err(mismatch(format!("`{}` returns {}, expected {expected}", f.node, sig.ret), f.span));
                }
                if sig.args.len() != args.len() {
                    return Err(mismatch(format!("`{}` takes {} arguments, got {}", f.node, sig.args.len(), args.len()), f.span));
                }
                let args = args.iter().zip(&sig.args).map(|(a, t)| self.expr(a, *t, target)).collect::<Result<Vec<_>, _>>()?;
                Ok(AttrExpr::apply(&f.node, args))
            }
        }
    }

    fn filter(&mut self, d: &FilterDecl) -> Result<(), Diag> {
        let schema = self.schema_ref(&d.schema)?;
        if !schema.has_entity(&d.entity.node) {
            return Err(unresolved("entity", &d.entity));
        }
        let mut pred = Predicate::new(&d.entity.node);
        for (attr, o, lit) in &d.clauses {
            let a = schema.find_attr(&d.entity.node, &attr.node).ok_or_else(|| unresolved("attribute", attr))?;
            pred = pred.and(&attr.node, op(*o), literal(lit, Some(a.ty))?);
        }
        self.p.filters.insert(d.name.node.clone(), FilterDef { schema: schema.name, predicate: pred });
        Ok(())
    }

    fn instance(&mut self, d: &InstanceDecl) -> Result<(), Diag> {
        let schema = self.schema_ref(&d.schema)?;
        let mut b = InstanceBuilder::new(&schema);
        for block in &d.blocks {
            if !schema.has_entity(&block.entity.node) {
                return Err(unresolved("entity", &block.entity));
            }
            for row in &block.rows {
                b.add_row(&block.entity.node, &row.id.node).map_err(|e| instance_error(e, row.id.span))?;
            }
        }
        for block in &d.blocks {
            let entity = &block.entity.node;
            for row in &block.rows {
                for (g, cell) in &row.cells {
                    if schema.find_fk(entity, &g.node).is_some() {
                        let target = cell_row(cell)?;
                        b.set_fk(entity, &row.id.node, &g.node, &target).map_err(|e| instance_error(e, g.span))?;
                    } else if let Some(a) = schema.find_attr(entity, &g.node) {
                        let v = cell_value(cell, a.ty, &self.p.udfs)?;
                        b.set_attr(entity, &row.id.node, &g.node, v).map_err(|e| instance_error(e, g.span))?;
                    } else {
                        return Err(unresolved(&format!("generator of `{entity}`"), g));
                    }
                }
            }
        }
        let inst = b.finalize(&self.p.udfs).map_err(|e| instance_error(e, d.name.span))?;
        self.p.instances.insert(d.name.node.clone(), inst);
        Ok(())
    }

    fn merge(&mut self, d: &MergeDecl) -> Result<(), Diag> {
        let overlap = self.schema_ref(&d.overlap)?;
        let left = self.mapping_ref(&d.left)?.clone();
        let right = self.mapping_ref(&d.right)?.clone();
        for (m, span) in [(&left, d.left.span), (&right, d.right.span)] {
            if m.source != overlap {
                return Err(mismatch(format!("`{}` starts at `{}`, not at overlap `{}`", m.name, m.source.name, overlap.name), span));
            }
        }
        let mut keys = BTreeMap::new();
        for (e, paths) in &d.keys {
            if !overlap.has_entity(&e.node) {
                return Err(unresolved("overlap entity", e));
            }
            let mut ps = Vec::new();
            for p in paths {
                if p.start.node != e.node {
                    return Err(mismatch(format!("key path must start at `{}`", e.node), p.start.span));
                }
                let path = to_path(p);
                overlap.codomain(&path).map_err(|err| schema_error(err, p.start.span))?;
                ps.push(path);
            }
            if keys.insert(e.node.clone(), ps).is_some() {
                return Err(Diag::elab("DuplicateDeclaration", format!("keys for `{}` given twice", e.node), e.span));
            }
        }
        let spec = MergeSpec { name: d.name.node.clone(), overlap, left, right, keys };
        self.p.merges.insert(spec.name.clone(), spec);
        Ok(())
    }

    fn migrate(&mut self, d: &MigrateDecl) -> Result<(), Diag> {
        let mut steps = Vec::new();
        let mut input: Option<String> = None;
        let mut current: Option<String> = None;
        for s in &d.steps {
            let (name, from, to, step) = match s {
                StepAst::Delta(n) => {
                    let m = self.mapping_ref(n)?;
                    (n, m.target.name.clone(), m.source.name.clone(), PipelineStep::Delta(n.node.clone()))
                }
                StepAst::Sigma(n) => {
                    let m = self.mapping_ref(n)?;
                    (n, m.source.name.clone(), m.target.name.clone(), PipelineStep::Sigma(n.node.clone()))
                }
                StepAst::Filter(n) => {
                    let f = self.p.filters.get(&n.node).ok_or_else(|| unresolved("filter", n))?;
                    (n, f.schema.clone(), f.schema.clone(), PipelineStep::Filter(n.node.clone()))
                }
            };
            if let Some(cur) = &current {
                if *cur != from {
                    return Err(mismatch(format!("step `{}` consumes `{from}` but the previous step produces `{cur}`", name.node), name.span));
                }
            }
            input.get_or_insert(from);
            current = Some(to);
            steps.push(step);
        }
        let (Some(input), Some(output)) = (input, current) else {
            return Err(mismatch("a migration needs at least one step", d.name.span));
        };
        self.p.pipelines.insert(d.name.node.clone(), Pipeline { name: d.name.node.clone(), steps, input, output });
        Ok(())
    }
}

/// Finds the generator a mapping line refers to; unqualified names must be
/// unique among the source's foreign keys (or attributes).
fn resolve_gen(source: &Schema, g: &GenName, fk: bool) -> Result<GenRef, Diag> {
    let kind = if fk { "foreign key" } else { "attribute" };
    let owners: Vec<&str> = if fk {
        source.fks.iter().filter(|f| f.name == g.name.node).map(|f| f.source.as_str()).collect()
    } else {
        source.attrs.iter().filter(|a| a.name == g.name.node).map(|a| a.source.as_str()).collect()
    };
    match &g.entity {
        Some(e) => {
            if !source.has_entity(&e.node) {
                return Err(unresolved("entity", e));
            }
            if !owners.contains(&e.node.as_str()) {
                return Err(unresolved(&format!("{kind} of `{}`", e.node), &g.name));
            }
            Ok(GenRef::new(&e.node, &g.name.node))
        }
        None => match owners.as_slice() {
            [one] => Ok(GenRef::new(one, &g.name.node)),
            [] => Err(unresolved(kind, &g.name)),
            _ => Err(Diag::elab(
                "UnresolvedName",
                format!("{kind} `{}` is ambiguous; qualify it as `{} . {}`", g.name.node, owners[0], g.name.node),
                g.name.span,
            )),
        },
    }
}

/// Best span for a schema validation element: an equation label, an
/// `entity.generator` pair or an entity name.
fn element_span(d: &SchemaDecl, element: &str) -> Span {
    for (i, eq) in d.equations.iter().enumerate() {
        let label = match &eq.label {
            Some(l) => l.node.clone(),
            None => format!("#{}", i + 1),
        };
        if label == element {
            return eq.label.as_ref().map(|l| l.span).unwrap_or(eq.lhs.start.span);
        }
    }
    if let Some((e, g)) = element.split_once('.') {
        if let Some(f) = d.fks.iter().find(|f| f.source.node == e && f.name.node == g) {
            return f.name.span;
        }
        if let Some(a) = d.attrs.iter().find(|a| a.source.node == e && a.name.node == g) {
            return a.name.span;
        }
    }
    if let Some(e) = d.entities.iter().find(|e| e.node == element) {
        return e.span;
    }
    d.name.span
}
