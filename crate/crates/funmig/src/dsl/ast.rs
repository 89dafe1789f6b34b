//! Syntax trees. Spans are carried along for diagnostics but never take
//! part in equality, so a reparsed pretty-print compares equal to the
//! original.

use super::Span;

#[derive(Clone, Debug)]
pub struct Spanned<T> {
    pub node: T,
    pub span: Span,
}

impl<T: PartialEq> PartialEq for Spanned<T> {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl<T> Spanned<T> {
    pub fn new(node: T, span: Span) -> Self {
        Spanned { node, span }
    }
}

pub type Ident = Spanned<String>;

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Import(Spanned<String>),
    Schema(SchemaDecl),
    Mapping(MappingDecl),
    Instance(InstanceDecl),
    Merge(MergeDecl),
    Constant(ConstantDecl),
    Filter(FilterDecl),
    Migrate(MigrateDecl),
}

impl Decl {
    /// Declared name, `None` for imports.
    pub fn name(&self) -> Option<&Ident> {
        match self {
            Decl::Import(_) => None,
            Decl::Schema(d) => Some(&d.name),
            Decl::Mapping(d) => Some(&d.name),
            Decl::Instance(d) => Some(&d.name),
            Decl::Merge(d) => Some(&d.name),
            Decl::Constant(d) => Some(&d.name),
            Decl::Filter(d) => Some(&d.name),
            Decl::Migrate(d) => Some(&d.name),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Decl::Import(_) => "import",
            Decl::Schema(_) => "schema",
            Decl::Mapping(_) => "mapping",
            Decl::Instance(_) => "instance",
            Decl::Merge(_) => "merge",
            Decl::Constant(_) => "constant",
            Decl::Filter(_) => "filter",
            Decl::Migrate(_) => "migrate",
        }
    }
}

/// `Entity . step . step`; an explicit `id` step is dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct PathAst {
    pub start: Ident,
    pub steps: Vec<Ident>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FkDecl {
    pub name: Ident,
    pub source: Ident,
    pub target: Ident,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttrDecl {
    pub name: Ident,
    pub source: Ident,
    pub ty: Ident,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquationDecl {
    pub label: Option<Ident>,
    pub lhs: PathAst,
    pub rhs: PathAst,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemaDecl {
    pub name: Ident,
    pub entities: Vec<Ident>,
    pub fks: Vec<FkDecl>,
    pub attrs: Vec<AttrDecl>,
    pub equations: Vec<EquationDecl>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LitAst {
    /// As written, so printing reproduces it.
    Int(String),
    Float(String),
    Str(String),
    Bool(bool),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprAst {
    Path(PathAst),
    Lit(Spanned<LitAst>),
    Null(Spanned<()>),
    Call(Ident, Vec<ExprAst>),
}

/// `Entity . name` or a bare `name` that is unique in the source schema.
#[derive(Clone, Debug, PartialEq)]
pub struct GenName {
    pub entity: Option<Ident>,
    pub name: Ident,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MappingDecl {
    pub name: Ident,
    pub source: Ident,
    pub target: Ident,
    pub entities: Vec<(Ident, Ident)>,
    pub fks: Vec<(GenName, PathAst)>,
    pub attrs: Vec<(GenName, ExprAst)>,
}

/// A cell of an instance row.
#[derive(Clone, Debug, PartialEq)]
pub enum CellAst {
    /// A bare identifier: a row id for fks.
    Ref(Ident),
    Lit(Spanned<LitAst>),
    Null(Ident),
    Call(Ident, Vec<CellAst>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowDecl {
    pub id: Spanned<String>,
    pub cells: Vec<(Ident, CellAst)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntityRows {
    pub entity: Ident,
    pub rows: Vec<RowDecl>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceDecl {
    pub name: Ident,
    pub schema: Ident,
    pub blocks: Vec<EntityRows>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeDecl {
    pub name: Ident,
    pub overlap: Ident,
    pub left: Ident,
    pub right: Ident,
    pub keys: Vec<(Ident, Vec<PathAst>)>,
}

/// `constant name : Type = literal;`, a nullary function.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantDecl {
    pub name: Ident,
    pub ty: Ident,
    pub value: Spanned<LitAst>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpAst {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterDecl {
    pub name: Ident,
    pub schema: Ident,
    pub entity: Ident,
    pub clauses: Vec<(Ident, OpAst, Spanned<LitAst>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepAst {
    Delta(Ident),
    Sigma(Ident),
    Filter(Ident),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MigrateDecl {
    pub name: Ident,
    pub steps: Vec<StepAst>,
}
