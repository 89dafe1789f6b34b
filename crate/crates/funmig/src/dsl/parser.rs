//! Recursive-descent parser for `.fql` files.

use super::ast::*;
use super::lexer::{lex, punct, Tok, Token};
use super::{Diag, Span, Stage};

pub const KEYWORDS: &[&str] = &[
    "schema", "entities", "fks", "attrs", "equations", "mapping", "entity", "fk", "attr", "instance", "row", "merge",
    "overlap", "left", "right", "keys", "import", "constant", "filter", "where", "and", "migrate", "delta", "sigma",
    "null", "true", "false", "id",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

const SECTIONS: &[&str] = &["entities", "fks", "attrs", "equations"];

/// Parses one file's text; `file` is the index used in spans.
pub fn parse(file: usize, text: &str) -> Result<Vec<Decl>, Diag> {
    let tokens = lex(file, text)?;
    let mut p = Parser { tokens, pos: 0, expected: Vec::new() };
    let mut decls = Vec::new();
    while !p.at_eof() {
        decls.push(p.decl()?);
    }
    Ok(decls)
}

/// Parses a single instance cell such as `?n1`, `3.5` or `f(?a, "x")`.
pub fn parse_cell(text: &str) -> Result<CellAst, Diag> {
    let tokens = lex(0, text)?;
    let mut p = Parser { tokens, pos: 0, expected: Vec::new() };
    let c = p.cell()?;
    if !p.at_eof() {
        return Err(p.error());
    }
    Ok(c)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// What would have been accepted at the current position.
    expected: Vec<String>,
}

type R<T> = Result<T, Diag>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.tokens[(self.pos + n).min(self.tokens.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        self.expected.clear();
        t
    }

    fn error(&mut self) -> Diag {
        let found = self.peek().describe();
        let mut expected = std::mem::take(&mut self.expected);
        expected.sort();
        expected.dedup();
        let msg = match expected.len() {
            0 => format!("unexpected {found}"),
            1 => format!("expected {}, found {found}", expected[0]),
            _ => format!("expected one of {}, found {found}", expected.join(", ")),
        };
        let mut d = Diag::new(Stage::Syntax, "Syntax", msg, self.span());
        d.expected = expected;
        d
    }

    fn is_kw(&mut self, kw: &str) -> bool {
        self.expected.push(format!("`{kw}`"));
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn kw(&mut self, kw: &str) -> R<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    fn is(&mut self, t: Tok) -> bool {
        self.expected.push(format!("`{}`", punct(&t)));
        *self.peek() == t
    }

    fn eat(&mut self, t: Tok) -> bool {
        if self.is(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> R<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    fn ident(&mut self) -> R<Ident> {
        self.expected.push("identifier".into());
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let t = self.bump();
                Ok(Spanned::new(s, t.span))
            }
            _ => Err(self.error()),
        }
    }

    fn is_ident(&mut self) -> bool {
        self.expected.push("identifier".into());
        matches!(self.peek(), Tok::Ident(s) if !is_keyword(s))
    }

    fn decl(&mut self) -> R<Decl> {
        if self.eat_kw("import") {
            self.expected.push("string".into());
            let Tok::Str(path) = self.peek().clone() else { return Err(self.error()) };
            let t = self.bump();
            self.expect(Tok::Semi)?;
            return Ok(Decl::Import(Spanned::new(path, t.span)));
        }
        if self.eat_kw("schema") {
            return self.schema().map(Decl::Schema);
        }
        if self.eat_kw("mapping") {
            return self.mapping().map(Decl::Mapping);
        }
        if self.eat_kw("instance") {
            return self.instance().map(Decl::Instance);
        }
        if self.eat_kw("merge") {
            return self.merge().map(Decl::Merge);
        }
        if self.eat_kw("constant") {
            let name = self.ident()?;
            self.expect(Tok::Colon)?;
            let ty = self.ident()?;
            self.expect(Tok::Eq)?;
            let value = self.literal()?;
            self.expect(Tok::Semi)?;
            return Ok(Decl::Constant(ConstantDecl { name, ty, value }));
        }
        if self.eat_kw("filter") {
            return self.filter().map(Decl::Filter);
        }
        if self.eat_kw("migrate") {
            return self.migrate().map(Decl::Migrate);
        }
        Err(self.error())
    }

    fn path(&mut self) -> R<PathAst> {
        let start = self.ident()?;
        let mut steps = Vec::new();
        while self.eat(Tok::Dot) {
            if self.eat_kw("id") {
                continue;
            }
            steps.push(self.ident()?);
        }
        Ok(PathAst { start, steps })
    }

    fn at_section_end(&mut self) -> bool {
        if self.is(Tok::RBrace) {
            return true;
        }
        SECTIONS.iter().any(|s| self.is_kw(s))
    }

    fn schema(&mut self) -> R<SchemaDecl> {
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut d = SchemaDecl { name, entities: Vec::new(), fks: Vec::new(), attrs: Vec::new(), equations: Vec::new() };
        while !self.eat(Tok::RBrace) {
            if self.eat_kw("entities") {
                if self.eat(Tok::Semi) {
                    continue;
                }
                loop {
                    d.entities.push(self.ident()?);
                    if !self.eat(Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::Semi)?;
            } else if self.eat_kw("fks") {
                while !self.at_section_end() {
                    let name = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let source = self.ident()?;
                    self.expect(Tok::Arrow)?;
                    let target = self.ident()?;
                    self.expect(Tok::Semi)?;
                    d.fks.push(FkDecl { name, source, target });
                }
            } else if self.eat_kw("attrs") {
                while !self.at_section_end() {
                    let name = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let source = self.ident()?;
                    self.expect(Tok::Arrow)?;
                    let ty = self.ident()?;
                    self.expect(Tok::Semi)?;
                    d.attrs.push(AttrDecl { name, source, ty });
                }
            } else if self.eat_kw("equations") {
                while !self.at_section_end() {
                    let label = if self.is_ident() && *self.peek_at(1) == Tok::Colon {
                        let l = self.ident()?;
                        self.bump();
                        Some(l)
                    } else {
                        None
                    };
                    let lhs = self.path()?;
                    self.expect(Tok::Eq)?;
                    let rhs = self.path()?;
                    self.expect(Tok::Semi)?;
                    d.equations.push(EquationDecl { label, lhs, rhs });
                }
            } else {
                return Err(self.error());
            }
        }
        Ok(d)
    }

    fn gen_name(&mut self) -> R<GenName> {
        let first = self.ident()?;
        if self.eat(Tok::Dot) {
            let name = self.ident()?;
            return Ok(GenName { entity: Some(first), name });
        }
        Ok(GenName { entity: None, name: first })
    }

    fn mapping(&mut self) -> R<MappingDecl> {
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let source = self.ident()?;
        self.expect(Tok::Arrow)?;
        let target = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut d = MappingDecl { name, source, target, entities: Vec::new(), fks: Vec::new(), attrs: Vec::new() };
        while !self.eat(Tok::RBrace) {
            if self.eat_kw("entity") {
                let a = self.ident()?;
                self.expect(Tok::Arrow)?;
                let b = self.ident()?;
                d.entities.push((a, b));
            } else if self.eat_kw("fk") {
                let g = self.gen_name()?;
                self.expect(Tok::Arrow)?;
                d.fks.push((g, self.path()?));
            } else if self.eat_kw("attr") {
                let g = self.gen_name()?;
                self.expect(Tok::Arrow)?;
                d.attrs.push((g, self.expr()?));
            } else {
                return Err(self.error());
            }
            self.expect(Tok::Semi)?;
        }
        Ok(d)
    }

    fn literal(&mut self) -> R<Spanned<LitAst>> {
        self.expected.push("literal".into());
        let span = self.span();
        let lit = match self.peek().clone() {
            Tok::Int(s) => LitAst::Int(s),
            Tok::Float(s) => LitAst::Float(s),
            Tok::Str(s) => LitAst::Str(s),
            Tok::Ident(s) if s == "true" => LitAst::Bool(true),
            Tok::Ident(s) if s == "false" => LitAst::Bool(false),
            _ => return Err(self.error()),
        };
        self.bump();
        Ok(Spanned::new(lit, span))
    }

    fn at_literal(&mut self) -> bool {
        self.expected.push("literal".into());
        match self.peek() {
            Tok::Int(_) | Tok::Float(_) | Tok::Str(_) => true,
            Tok::Ident(s) => s == "true" || s == "false",
            _ => false,
        }
    }

    fn expr(&mut self) -> R<ExprAst> {
        let span = self.span();
        if self.eat_kw("null") {
            return Ok(ExprAst::Null(Spanned::new((), span)));
        }
        if self.at_literal() {
            return self.literal().map(ExprAst::Lit);
        }
        if self.is_ident() && *self.peek_at(1) == Tok::LParen {
            let f = self.ident()?;
            self.bump();
            let mut args = Vec::new();
            if !self.eat(Tok::RParen) {
                loop {
                    args.push(self.expr()?);
                    if !self.eat(Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
            }
            return Ok(ExprAst::Call(f, args));
        }
        self.path().map(ExprAst::Path)
    }

    fn row_id(&mut self) -> R<Spanned<String>> {
        self.expected.push("row id".into());
        let span = self.span();
        let id = match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => s,
            Tok::Int(s) | Tok::Str(s) => s,
            _ => return Err(self.error()),
        };
        self.bump();
        Ok(Spanned::new(id, span))
    }

    fn cell(&mut self) -> R<CellAst> {
        self.expected.push("null".into());
        if let Tok::Null(label) = self.peek().clone() {
            let t = self.bump();
            return Ok(CellAst::Null(Spanned::new(label, t.span)));
        }
        if self.at_literal() {
            return self.literal().map(CellAst::Lit);
        }
        let name = self.ident()?;
        if self.eat(Tok::LParen) {
            let mut args = Vec::new();
            if !self.eat(Tok::RParen) {
                loop {
                    args.push(self.cell()?);
                    if !self.eat(Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
            }
            return Ok(CellAst::Call(name, args));
        }
        Ok(CellAst::Ref(name))
    }

    fn instance(&mut self) -> R<InstanceDecl> {
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let schema = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut blocks = Vec::new();
        while !self.eat(Tok::RBrace) {
            let entity = self.ident()?;
            self.expect(Tok::LBrace)?;
            let mut rows = Vec::new();
            while !self.eat(Tok::RBrace) {
                self.kw("row")?;
                let id = self.row_id()?;
                self.expect(Tok::LBrace)?;
                let mut cells = Vec::new();
                while !self.eat(Tok::RBrace) {
                    let g = self.ident()?;
                    self.expect(Tok::Eq)?;
                    let c = self.cell()?;
                    self.expect(Tok::Semi)?;
                    cells.push((g, c));
                }
                rows.push(RowDecl { id, cells });
            }
            blocks.push(EntityRows { entity, rows });
        }
        Ok(InstanceDecl { name, schema, blocks })
    }

    fn merge(&mut self) -> R<MergeDecl> {
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        self.kw("overlap")?;
        let overlap = self.ident()?;
        self.expect(Tok::Semi)?;
        self.kw("left")?;
        let left = self.ident()?;
        self.expect(Tok::Semi)?;
        self.kw("right")?;
        let right = self.ident()?;
        self.expect(Tok::Semi)?;
        let mut keys = Vec::new();
        if self.eat_kw("keys") {
            while !self.is(Tok::RBrace) {
                let e = self.ident()?;
                self.expect(Tok::Colon)?;
                let mut paths = vec![self.path()?];
                while self.eat(Tok::Comma) {
                    paths.push(self.path()?);
                }
                self.expect(Tok::Semi)?;
                keys.push((e, paths));
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(MergeDecl { name, overlap, left, right, keys })
    }

    fn filter(&mut self) -> R<FilterDecl> {
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let schema = self.ident()?;
        self.expect(Tok::LBrace)?;
        let entity = self.ident()?;
        let mut clauses = Vec::new();
        if self.eat_kw("where") {
            loop {
                let attr = self.ident()?;
                let op = self.op()?;
                let value = self.literal()?;
                clauses.push((attr, op, value));
                if !self.eat_kw("and") {
                    break;
                }
            }
        }
        self.expect(Tok::Semi)?;
        self.expect(Tok::RBrace)?;
        Ok(FilterDecl { name, schema, entity, clauses })
    }

    fn op(&mut self) -> R<OpAst> {
        for (t, op) in
            [(Tok::Eq, OpAst::Eq), (Tok::Ne, OpAst::Ne), (Tok::Le, OpAst::Le), (Tok::Lt, OpAst::Lt), (Tok::Ge, OpAst::Ge), (Tok::Gt, OpAst::Gt)]
        {
            if self.eat(t) {
                return Ok(op);
            }
        }
        Err(self.error())
    }

    fn migrate(&mut self) -> R<MigrateDecl> {
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut steps = Vec::new();
        while !self.eat(Tok::RBrace) {
            let step = if self.eat_kw("delta") {
                StepAst::Delta(self.ident()?)
            } else if self.eat_kw("sigma") {
                StepAst::Sigma(self.ident()?)
            } else if self.eat_kw("filter") {
                StepAst::Filter(self.ident()?)
            } else {
                return Err(self.error());
            };
            self.expect(Tok::Semi)?;
            steps.push(step);
        }
        Ok(MigrateDecl { name, steps })
    }
}
