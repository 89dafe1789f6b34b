//! The `.fql` language: lexing, parsing, elaboration into engine objects
//! and pretty-printing.

pub mod ast;
pub mod elaborate;
pub mod lexer;
pub mod parser;
pub mod pretty;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

pub use ast::Decl;
pub use elaborate::{elaborate, Project};
pub use parser::parse;

/// 1-based line and column in file number `file` of a [`SourceMap`].
#[derive(Clone, Copy, Debug)]
pub struct Span {
    pub file: usize,
    pub line: u32,
    pub col: u32,
}

/// Which phase produced a diagnostic. Syntax and elaboration problems exit
/// with 1, schema validation problems with 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Syntax,
    Elaboration,
    Validation,
}

#[derive(Clone, Debug)]
pub struct Diag {
    pub stage: Stage,
    pub code: String,
    pub message: String,
    pub span: Span,
    /// Token descriptions accepted at the error position (syntax errors only).
    pub expected: Vec<String>,
}

impl Diag {
    pub fn new(stage: Stage, code: &str, message: impl Into<String>, span: Span) -> Diag {
        Diag { stage, code: code.into(), message: message.into(), span, expected: Vec::new() }
    }

    pub fn elab(code: &str, message: impl Into<String>, span: Span) -> Diag {
        Diag::new(Stage::Elaboration, code, message, span)
    }
}

/// Loaded files, indexed by the `file` field of spans.
#[derive(Clone, Debug, Default)]
pub struct SourceMap {
    pub files: Vec<(PathBuf, String)>,
}

impl SourceMap {
    pub fn add(&mut self, path: PathBuf, text: String) -> usize {
        self.files.push((path, text));
        self.files.len() - 1
    }

    pub fn path(&self, file: usize) -> &Path {
        &self.files[file].0
    }

    /// `file:line:col: error[Code]: message`
    pub fn render(&self, d: &Diag) -> String {
        let path = self.files.get(d.span.file).map(|f| f.0.display().to_string()).unwrap_or_else(|| "<input>".into());
        format!("{}:{}:{}: error[{}]: {}", path, d.span.line, d.span.col, d.code, d.message)
    }
}

impl fmt::Display for Diag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: error[{}]: {}", self.span.line, self.span.col, self.code, self.message)
    }
}

/// Reads `paths` and everything they import, depth first, returning the
/// declarations with imports resolved: an imported file's declarations come
/// before the importer's, and each file is read once.
pub fn load_files(sources: &mut SourceMap, paths: &[PathBuf]) -> Result<Vec<Decl>, Diag> {
    let mut loader = Loader { sources, done: BTreeSet::new(), stack: Vec::new(), decls: Vec::new() };
    for p in paths {
        loader.load(p, None)?;
    }
    Ok(loader.decls)
}

/// Parses source text held in memory as file `name`.
pub fn load_str(sources: &mut SourceMap, name: &str, text: &str) -> Result<Vec<Decl>, Diag> {
    let file = sources.add(PathBuf::from(name), text.to_string());
    let decls = parse(file, text)?;
    if let Some(Decl::Import(i)) = decls.iter().find(|d| matches!(d, Decl::Import(_))) {
        return Err(Diag::elab("Import", "imports need a file on disk", i.span));
    }
    Ok(decls)
}

struct Loader<'a> {
    sources: &'a mut SourceMap,
    done: BTreeSet<PathBuf>,
    stack: Vec<PathBuf>,
    decls: Vec<Decl>,
}

impl Loader<'_> {
    fn load(&mut self, path: &Path, from: Option<Span>) -> Result<(), Diag> {
        let key = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
        if self.stack.contains(&key) {
            let span = from.unwrap_or(Span { file: 0, line: 1, col: 1 });
            let cycle: Vec<String> = self.stack.iter().chain([&key]).map(|p| p.display().to_string()).collect();
            return Err(Diag::elab("ImportCycle", format!("import cycle: {}", cycle.join(" -> ")), span));
        }
        if self.done.contains(&key) {
            return Ok(());
        }
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                let span = match from {
                    Some(s) => s,
                    None => Span { file: self.sources.add(path.to_path_buf(), String::new()), line: 1, col: 1 },
                };
                return Err(Diag::elab("Io", format!("cannot read `{}`: {e}", path.display()), span));
            }
        };
        let file = self.sources.add(path.to_path_buf(), text);
        let decls = parse(file, &self.sources.files[file].1)?;
        self.stack.push(key.clone());
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for d in decls {
            match d {
                Decl::Import(i) => self.load(&base.join(&i.node), Some(i.span))?,
                d => self.decls.push(d),
            }
        }
        self.stack.pop();
        self.done.insert(key);
        Ok(())
    }
}
