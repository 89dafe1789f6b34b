//! Canonical text for syntax trees and engine objects. Reparsing the output
//! gives back an equal tree.

use std::fmt::Write;

use funmig_core::{AttrExpr, Instance, Literal, Mapping, Path, Schema, Value};

use super::ast::*;
use super::parser::is_keyword;
use super::Span;

const NOWHERE: Span = Span { file: 0, line: 0, col: 0 };

fn ident(s: &str) -> Ident {
    Spanned::new(s.to_string(), NOWHERE)
}

fn path_text(p: &PathAst) -> String {
    let mut s = p.start.node.clone();
    if p.steps.is_empty() {
        s.push_str(" . id");
    }
    for step in &p.steps {
        s.push_str(" . ");
        s.push_str(&step.node);
    }
    s
}

pub fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn lit_text(l: &LitAst) -> String {
    match l {
        LitAst::Int(s) | LitAst::Float(s) => s.clone(),
        LitAst::Str(s) => quote(s),
        LitAst::Bool(b) => b.to_string(),
    }
}

fn expr_text(e: &ExprAst) -> String {
    match e {
        ExprAst::Path(p) => path_text(p),
        ExprAst::Lit(l) => lit_text(&l.node),
        ExprAst::Null(_) => "null".into(),
        ExprAst::Call(f, args) => format!("{}({})", f.node, args.iter().map(expr_text).collect::<Vec<_>>().join(", ")),
    }
}

pub fn cell_text(c: &CellAst) -> String {
    match c {
        CellAst::Ref(r) => r.node.clone(),
        CellAst::Lit(l) => lit_text(&l.node),
        CellAst::Null(l) => format!("?{}", l.node),
        CellAst::Call(f, args) => format!("{}({})", f.node, args.iter().map(cell_text).collect::<Vec<_>>().join(", ")),
    }
}

fn is_plain_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !is_keyword(s)
}

fn row_id_text(id: &str) -> String {
    let digits = !id.is_empty() && id.bytes().all(|b| b.is_ascii_digit());
    if digits || is_plain_ident(id) {
        id.to_string()
    } else {
        quote(id)
    }
}

fn gen_text(g: &GenName) -> String {
    match &g.entity {
        Some(e) => format!("{} . {}", e.node, g.name.node),
        None => g.name.node.clone(),
    }
}

fn op_text(o: OpAst) -> &'static str {
    match o {
        OpAst::Eq => "=",
        OpAst::Ne => "!=",
        OpAst::Lt => "<",
        OpAst::Le => "<=",
        OpAst::Gt => ">",
        OpAst::Ge => ">=",
    }
}

/// Prints declarations in order, separated by blank lines.
pub fn print_decls(decls: &[Decl]) -> String {
    decls.iter().map(print_decl).collect::<Vec<_>>().join("\n")
}

pub fn print_decl(d: &Decl) -> String {
    let mut out = String::new();
    let o = &mut out;
    match d {
        Decl::Import(p) => {
            let _ = writeln!(o, "import {};", quote(&p.node));
        }
        Decl::Schema(s) => {
            let _ = writeln!(o, "schema {} {{", s.name.node);
            if !s.entities.is_empty() {
                let names: Vec<&str> = s.entities.iter().map(|e| e.node.as_str()).collect();
                let _ = writeln!(o, "  entities {};", names.join(", "));
            }
            if !s.fks.is_empty() {
                let _ = writeln!(o, "  fks");
                for f in &s.fks {
                    let _ = writeln!(o, "    {} : {} -> {};", f.name.node, f.source.node, f.target.node);
                }
            }
            if !s.attrs.is_empty() {
                let _ = writeln!(o, "  attrs");
                for a in &s.attrs {
                    let _ = writeln!(o, "    {} : {} -> {};", a.name.node, a.source.node, a.ty.node);
                }
            }
            if !s.equations.is_empty() {
                let _ = writeln!(o, "  equations");
                for e in &s.equations {
                    let label = e.label.as_ref().map(|l| format!("{} : ", l.node)).unwrap_or_default();
                    let _ = writeln!(o, "    {label}{} = {};", path_text(&e.lhs), path_text(&e.rhs));
                }
            }
            o.push_str("}\n");
        }
        Decl::Mapping(m) => {
            let _ = writeln!(o, "mapping {} : {} -> {} {{", m.name.node, m.source.node, m.target.node);
            for (a, b) in &m.entities {
                let _ = writeln!(o, "  entity {} -> {};", a.node, b.node);
            }
            for (g, p) in &m.fks {
                let _ = writeln!(o, "  fk {} -> {};", gen_text(g), path_text(p));
            }
            for (g, e) in &m.attrs {
                let _ = writeln!(o, "  attr {} -> {};", gen_text(g), expr_text(e));
            }
            o.push_str("}\n");
        }
        Decl::Instance(i) => {
            let _ = writeln!(o, "instance {} : {} {{", i.name.node, i.schema.node);
            for b in &i.blocks {
                let _ = writeln!(o, "  {} {{", b.entity.node);
                for r in &b.rows {
                    let cells: String = r.cells.iter().map(|(g, c)| format!(" {} = {};", g.node, cell_text(c))).collect();
                    let _ = writeln!(o, "    row {} {{{cells} }}", row_id_text(&r.id.node));
                }
                o.push_str("  }\n");
            }
            o.push_str("}\n");
        }
        Decl::Merge(m) => {
            let _ = writeln!(o, "merge {} {{", m.name.node);
            let _ = writeln!(o, "  overlap {};", m.overlap.node);
            let _ = writeln!(o, "  left {};", m.left.node);
            let _ = writeln!(o, "  right {};", m.right.node);
            if !m.keys.is_empty() {
                let _ = writeln!(o, "  keys");
                for (e, ps) in &m.keys {
                    let _ = writeln!(o, "    {} : {};", e.node, ps.iter().map(path_text).collect::<Vec<_>>().join(", "));
                }
            }
            o.push_str("}\n");
        }
        Decl::Constant(c) => {
            let _ = writeln!(o, "constant {} : {} = {};", c.name.node, c.ty.node, lit_text(&c.value.node));
        }
        Decl::Filter(f) => {
            let _ = write!(o, "filter {} : {} {{\n  {}", f.name.node, f.schema.node, f.entity.node);
            for (i, (a, op, v)) in f.clauses.iter().enumerate() {
                let kw = if i == 0 { "where" } else { "and" };
                let _ = write!(o, " {kw} {} {} {}", a.node, op_text(*op), lit_text(&v.node));
            }
            o.push_str(";\n}\n");
        }
        Decl::Migrate(m) => {
            let _ = writeln!(o, "migrate {} {{", m.name.node);
            for s in &m.steps {
                let (kw, n) = match s {
                    StepAst::Delta(n) => ("delta", n),
                    StepAst::Sigma(n) => ("sigma", n),
                    StepAst::Filter(n) => ("filter", n),
                };
                let _ = writeln!(o, "  {kw} {};", n.node);
            }
            o.push_str("}\n");
        }
    }
    out
}

fn path_ast(p: &Path) -> PathAst {
    PathAst { start: ident(&p.start), steps: p.steps.iter().map(|s| ident(s)).collect() }
}

/// Source form of a literal. Non-finite floats have no source form.
pub fn literal_ast(l: &Literal) -> LitAst {
    match l {
        Literal::Int(i) => LitAst::Int(i.to_string()),
        Literal::Float(x) => LitAst::Float(format!("{x:?}")),
        Literal::Str(s) => LitAst::Str(s.clone()),
        Literal::Bool(b) => LitAst::Bool(*b),
    }
}

pub fn schema_ast(s: &Schema) -> SchemaDecl {
    SchemaDecl {
        name: ident(&s.name),
        entities: s.entities.iter().map(|e| ident(e)).collect(),
        fks: s.fks.iter().map(|f| FkDecl { name: ident(&f.name), source: ident(&f.source), target: ident(&f.target) }).collect(),
        attrs: s.attrs.iter().map(|a| AttrDecl { name: ident(&a.name), source: ident(&a.source), ty: ident(a.ty.name()) }).collect(),
        equations: s
            .equations
            .iter()
            .map(|e| EquationDecl { label: e.label.as_deref().map(ident), lhs: path_ast(&e.lhs), rhs: path_ast(&e.rhs) })
            .collect(),
    }
}

fn expr_ast(e: &AttrExpr) -> ExprAst {
    match e {
        AttrExpr::Path(p) => ExprAst::Path(path_ast(p)),
        AttrExpr::Const(l) => ExprAst::Lit(Spanned::new(literal_ast(l), NOWHERE)),
        AttrExpr::Null(_) => ExprAst::Null(Spanned::new((), NOWHERE)),
        AttrExpr::Apply { func, args } => ExprAst::Call(ident(func), args.iter().map(expr_ast).collect()),
    }
}

/// Generators are printed qualified, in sorted order.
pub fn mapping_ast(m: &Mapping) -> MappingDecl {
    let gen = |g: &funmig_core::GenRef| GenName { entity: Some(ident(&g.entity)), name: ident(&g.name) };
    MappingDecl {
        name: ident(&m.name),
        source: ident(&m.source.name),
        target: ident(&m.target.name),
        entities: m.entity_map.iter().map(|(a, b)| (ident(a), ident(b))).collect(),
        fks: m.fk_map.iter().map(|(g, p)| (gen(g), path_ast(p))).collect(),
        attrs: m.attr_map.iter().map(|(g, e)| (gen(g), expr_ast(e))).collect(),
    }
}

pub fn value_cell(v: &Value) -> CellAst {
    match v {
        Value::Lit(l) => CellAst::Lit(Spanned::new(literal_ast(l), NOWHERE)),
        Value::Null { label, .. } => CellAst::Null(ident(label)),
        Value::Term { func, args } => CellAst::Call(ident(func), args.iter().map(value_cell).collect()),
    }
}

/// Rows in stored order; foreign keys before attributes.
pub fn instance_ast(name: &str, inst: &Instance) -> InstanceDecl {
    let s = inst.schema();
    let blocks = s
        .entities
        .iter()
        .map(|e| EntityRows {
            entity: ident(e),
            rows: inst
                .row_ids(e)
                .unwrap_or_default()
                .iter()
                .map(|r| {
                    let mut cells = Vec::new();
                    for f in s.fks_from(e) {
                        let t = inst.fk(e, &f.name, r).expect("row exists");
                        cells.push((ident(&f.name), CellAst::Lit(Spanned::new(LitAst::Str(t.clone()), NOWHERE))));
                    }
                    for a in s.attrs_from(e) {
                        let v = inst.attr(e, &a.name, r).expect("row exists");
                        cells.push((ident(&a.name), value_cell(&v)));
                    }
                    RowDecl { id: Spanned::new(r.clone(), NOWHERE), cells }
                })
                .collect(),
        })
        .collect();
    InstanceDecl { name: ident(name), schema: ident(&s.name), blocks }
}

pub fn print_schema(s: &Schema) -> String {
    print_decl(&Decl::Schema(schema_ast(s)))
}

pub fn print_mapping(m: &Mapping) -> String {
    print_decl(&Decl::Mapping(mapping_ast(m)))
}
