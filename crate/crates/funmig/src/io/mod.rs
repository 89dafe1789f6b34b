//! CSV bundles: one `<entity>.csv` per entity with an `id` column followed
//! by one column per foreign key and attribute.
//!
//! Attribute cells hold a literal of the column's type, `?label` for a
//! labelled null, or `=expr` for a symbolic function application such as
//! `=json_extract(?p, "xc")`. A leading backslash escapes a string cell that
//! would otherwise start with `?`, `=` or `\`. Lineage tags live in an
//! optional `<entity>.provenance.csv` with columns `id,lineage`, one tag per
//! line.

mod fixtures;

pub use fixtures::{fixture, fixture_names, fixtures_dir, Fixture};

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use funmig_core::{BaseType, Instance, InstanceBuilder, InstanceError, Literal, Schema, UdfRegistry, Value};

use crate::dsl::elaborate::cell_value;
use crate::dsl::parser::parse_cell;

#[derive(Debug)]
pub enum IoError {
    MissingFile(PathBuf),
    HeaderMismatch { file: PathBuf, expected: Vec<String>, found: Vec<String> },
    UnparsableLiteral { file: PathBuf, line: u64, column: usize, message: String },
    DanglingForeignKey { file: PathBuf, line: u64, column: usize, target: String },
    DuplicateId { file: PathBuf, line: u64, id: String },
    Instance(InstanceError),
    Io { file: PathBuf, error: std::io::Error },
}

impl std::fmt::Display for IoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IoError::MissingFile(p) => write!(f, "{}: error[MissingFile]: file not found", p.display()),
            IoError::HeaderMismatch { file, expected, found } => write!(
                f,
                "{}:1:1: error[HeaderMismatch]: expected columns {}, found {}",
                file.display(),
                expected.join(","),
                found.join(",")
            ),
            IoError::UnparsableLiteral { file, line, column, message } => {
                write!(f, "{}:{line}:{column}: error[UnparsableLiteral]: {message}", file.display())
            }
            IoError::DanglingForeignKey { file, line, column, target } => {
                write!(f, "{}:{line}:{column}: error[DanglingForeignKey]: no row `{target}` in the referenced entity", file.display())
            }
            IoError::DuplicateId { file, line, id } => write!(f, "{}:{line}:1: error[DuplicateId]: id `{id}` appears twice", file.display()),
            IoError::Instance(e) => write!(f, "error[Instance]: {e}"),
            IoError::Io { file, error } => write!(f, "{}: error[Io]: {error}", file.display()),
        }
    }
}

impl std::error::Error for IoError {}

fn io_err(file: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |error| IoError::Io { file: file.to_path_buf(), error }
}

fn csv_err(file: &Path, e: csv::Error) -> IoError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(error) => IoError::Io { file: file.to_path_buf(), error },
        other => IoError::UnparsableLiteral { file: file.to_path_buf(), line, column: 1, message: format!("{other:?}") },
    }
}

/// Column names of `entity` in declaration order: `id`, fks, attributes.
pub fn columns(schema: &Schema, entity: &str) -> Vec<String> {
    let mut cols = vec!["id".to_string()];
    cols.extend(schema.fks_from(entity).map(|f| f.name.clone()));
    cols.extend(schema.attrs_from(entity).map(|a| a.name.clone()));
    cols
}

/// Orders ids so that digit runs compare numerically: `2 < 10 < a2 < a10`.
/// Ties fall back to plain string order, so the order is total.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    if a.is_empty() || b.is_empty() {
        return a.cmp(b);
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for ((da, x), (db, y)) in ca.iter().zip(&cb) {
        let ord = match (da, db) {
            (true, true) => {
                let (x, y) = (x.trim_start_matches('0'), y.trim_start_matches('0'));
                x.len().cmp(&y.len()).then_with(|| x.cmp(y))
            }
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => x.cmp(y),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

/// Parses one attribute cell of type `ty`.
pub fn parse_value(text: &str, ty: BaseType, udfs: &UdfRegistry) -> Result<Value, String> {
    if let Some(label) = text.strip_prefix('?') {
        if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
            return Err(format!("`{text}` is not a valid null label"));
        }
        return Ok(Value::null(label, ty));
    }
    if let Some(expr) = text.strip_prefix('=') {
        let cell = parse_cell(expr).map_err(|d| format!("bad term `{expr}`: {}", d.message))?;
        return cell_value(&cell, ty, udfs).map_err(|d| d.message);
    }
    let raw = text.strip_prefix('\\').unwrap_or(text);
    let lit = match ty {
        BaseType::String => Literal::Str(raw.to_string()),
        BaseType::Int => Literal::Int(raw.trim().parse().map_err(|_| format!("`{raw}` is not an Int"))?),
        BaseType::Float => Literal::Float(raw.trim().parse().map_err(|_| format!("`{raw}` is not a Float"))?),
        BaseType::Bool => match raw.trim() {
            "true" => Literal::Bool(true),
            "false" => Literal::Bool(false),
            _ => return Err(format!("`{raw}` is not a Bool")),
        },
    };
    Ok(Value::Lit(lit))
}

/// Text of an attribute cell; inverse of [`parse_value`].
pub fn format_value(v: &Value) -> String {
    match v {
        Value::Lit(Literal::Str(s)) if s.starts_with(['?', '=', '\\']) => format!("\\{s}"),
        Value::Lit(Literal::Str(s)) => s.clone(),
        Value::Lit(l) => l.to_string(),
        Value::Null { label, .. } => format!("?{label}"),
        Value::Term { .. } => format!("={v}"),
    }
}

struct PendingFk {
    file: PathBuf,
    line: u64,
    column: usize,
    entity: String,
    row: String,
    fk: String,
    target: String,
    target_entity: String,
}

/// Reads a bundle for `schema` from `dir`. Every entity needs its file.
/// Referential integrity is checked; equations are not.
pub fn load_csv(dir: &Path, schema: &Schema, udfs: &UdfRegistry) -> Result<Instance, IoError> {
    let mut b = InstanceBuilder::new(schema);
    let mut ids: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut fks = Vec::new();
    for entity in &schema.entities {
        let file = dir.join(format!("{entity}.csv"));
        if !file.is_file() {
            return Err(IoError::MissingFile(file));
        }
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(&file).map_err(|e| csv_err(&file, e))?;
        let header: Vec<String> = rdr.headers().map_err(|e| csv_err(&file, e))?.iter().map(String::from).collect();
        let expected = columns(schema, entity);
        let as_set = |v: &[String]| v.iter().cloned().collect::<BTreeSet<_>>();
        if header.len() != expected.len() || as_set(&header) != as_set(&expected) {
            return Err(IoError::HeaderMismatch { file, expected, found: header });
        }
        let seen = ids.entry(entity).or_default();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_err(&file, e))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let mut row = BTreeMap::new();
            for (i, h) in header.iter().enumerate() {
                row.insert(h.as_str(), (i + 1, rec.get(i).unwrap_or("")));
            }
            let id = row["id"].1.to_string();
            if !seen.insert(id.clone()) {
                return Err(IoError::DuplicateId { file, line, id });
            }
            b.add_row(entity, &id).map_err(IoError::Instance)?;
            for f in schema.fks_from(entity) {
                let (column, target) = row[f.name.as_str()];
                fks.push(PendingFk {
                    file: file.clone(),
                    line,
                    column,
                    entity: entity.clone(),
                    row: id.clone(),
                    fk: f.name.clone(),
                    target: target.to_string(),
                    target_entity: f.target.clone(),
                });
            }
            for a in schema.attrs_from(entity) {
                let (column, text) = row[a.name.as_str()];
                let v = parse_value(text, a.ty, udfs).map_err(|message| IoError::UnparsableLiteral {
                    file: file.clone(),
                    line,
                    column,
                    message,
                })?;
                b.set_attr(entity, &id, &a.name, v).map_err(IoError::Instance)?;
            }
        }
        let prov = dir.join(format!("{entity}.provenance.csv"));
        if prov.is_file() {
            let mut rdr = csv::Reader::from_path(&prov).map_err(|e| csv_err(&prov, e))?;
            for rec in rdr.records() {
                let rec = rec.map_err(|e| csv_err(&prov, e))?;
                let line = rec.position().map(|p| p.line()).unwrap_or(0);
                let (Some(id), Some(tag)) = (rec.get(0), rec.get(1)) else {
                    return Err(IoError::UnparsableLiteral { file: prov, line, column: 1, message: "expected `id,lineage`".into() });
                };
                if !seen.contains(id) {
                    return Err(IoError::DanglingForeignKey { file: prov, line, column: 1, target: id.into() });
                }
                b.add_lineage(entity, id, tag).map_err(IoError::Instance)?;
            }
        }
    }
    for p in fks {
        if !ids.get(p.target_entity.as_str()).is_some_and(|s| s.contains(&p.target)) {
            return Err(IoError::DanglingForeignKey { file: p.file, line: p.line, column: p.column, target: p.target });
        }
        b.set_fk(&p.entity, &p.row, &p.fk, &p.target).map_err(IoError::Instance)?;
    }
    b.finalize(udfs).map_err(IoError::Instance)
}

/// Row ids of `entity` in natural order.
pub fn sorted_ids(inst: &Instance, entity: &str) -> Vec<String> {
    let mut ids = inst.row_ids(entity).map(<[String]>::to_vec).unwrap_or_default();
    ids.sort_by(|a, b| natural_cmp(a, b));
    ids
}

fn write_records(file: &Path, rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(file).map_err(|e| csv_err(file, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(file, e))?;
    }
    w.flush().map_err(io_err(file))
}

/// Writes `inst` to `dir` (created if needed): rows in natural id order,
/// columns in declaration order.
pub fn export_csv(inst: &Instance, dir: &Path) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let schema = inst.schema();
    for entity in &schema.entities {
        let ids = sorted_ids(inst, entity);
        let mut rows = vec![columns(schema, entity)];
        let mut lineage = Vec::new();
        for id in &ids {
            let mut r = vec![id.clone()];
            for f in schema.fks_from(entity) {
                r.push(inst.fk(entity, &f.name, id).map_err(IoError::Instance)?.clone());
            }
            for a in schema.attrs_from(entity) {
                r.push(format_value(&inst.attr(entity, &a.name, id).map_err(IoError::Instance)?));
            }
            rows.push(r);
            for tag in inst.lineage(entity, id).map_err(IoError::Instance)? {
                lineage.push(vec![id.clone(), tag.clone()]);
            }
        }
        write_records(&dir.join(format!("{entity}.csv")), rows)?;
        if !lineage.is_empty() {
            let header = vec!["id".to_string(), "lineage".to_string()];
            write_records(&dir.join(format!("{entity}.provenance.csv")), std::iter::once(header).chain(lineage))?;
        }
    }
    Ok(())
}
