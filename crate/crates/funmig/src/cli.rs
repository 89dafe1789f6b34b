//! The `funmig` command line.
//!
//! Exit codes: 0 success, 1 usage, syntax, elaboration or IO error,
//! 2 schema validation error, 3 mapping rejected, 4 mapping check
//! inconclusive, 5 chase budget exceeded, contradiction or key conflict,
//! 6 instance violates its schema's equations.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use funmig_core::{
    check_mapping, delta, filter, merge, sigma, CheckOptions, Instance, MigrateError, MigrationContext, Overall,
    ValidationReport, DEFAULT_DEPTH_BOUND,
};
use serde_json::{json, Value as Json};

use crate::dsl::elaborate::{PipelineStep, Project};
use crate::dsl::{elaborate, load_files, pretty, Diag, SourceMap, Stage};
use crate::io::{export_csv, load_csv, IoError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_REJECTED: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;
pub const EXIT_CHASE: i32 = 5;
pub const EXIT_VIOLATIONS: i32 = 6;

#[derive(Parser, Debug)]
#[command(name = "funmig", version, about = "Validated data migration between categorical schemas")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Delta,
    Sigma,
}

#[derive(clap::Args, Debug)]
struct ChaseArgs {
    /// Bound on prover rewrite depth (default 64, or FUNMIG_DEPTH).
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    max_fresh_rows: usize,
    #[arg(long, default_value_t = 1_000)]
    max_rounds: usize,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse, elaborate and validate schema files.
    CheckSchema {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Check that a mapping preserves every source equation.
    CheckMapping {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        mapping: String,
        #[arg(long)]
        depth: Option<usize>,
        /// Accept mappings whose check is inconclusive.
        #[arg(long)]
        permissive: bool,
        #[arg(long)]
        json: bool,
    },
    /// Move a CSV bundle along a mapping or a declared pipeline.
    Migrate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, conflicts_with = "pipeline", requires = "mode")]
        mapping: Option<String>,
        #[arg(long, value_enum, requires = "mapping")]
        mode: Option<Mode>,
        #[arg(long, required_unless_present = "mapping")]
        pipeline: Option<String>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        chase: ChaseArgs,
    },
    /// Merge two bundles along a declared overlap.
    Merge {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        spec: String,
        #[arg(long)]
        left_data: PathBuf,
        #[arg(long)]
        right_data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        chase: ChaseArgs,
    },
    /// Check a CSV bundle against its schema's equations.
    CheckInstance {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Needed when the files declare more than one schema.
        #[arg(long)]
        schema: Option<String>,
        /// Absolute tolerance for comparing floats.
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
        #[arg(long)]
        json: bool,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn out(&mut self, s: &str) {
        let _ = writeln!(self.out, "{s}");
    }

    fn err(&mut self, s: &str) {
        let _ = writeln!(self.err, "{s}");
    }
}

/// Runs the command line `args` (program name first), writing the report to
/// `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut io = Io { out, err };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(io.out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(io.err, "{text}");
                    EXIT_INPUT
                }
            };
        }
    };
    match cli.cmd {
        Cmd::CheckSchema { files, json } => check_schema(&mut io, &files, json),
        Cmd::CheckMapping { files, mapping, depth, permissive, json } => {
            check_mapping_cmd(&mut io, &files, &mapping, depth_bound(depth), !permissive, json)
        }
        Cmd::Migrate { files, mapping, mode, pipeline, data, out, chase } => {
            let steps = match (mapping, mode, pipeline) {
                (Some(m), Some(Mode::Delta), None) => Target::Steps(vec![PipelineStep::Delta(m)]),
                (Some(m), Some(Mode::Sigma), None) => Target::Steps(vec![PipelineStep::Sigma(m)]),
                (None, None, Some(p)) => Target::Pipeline(p),
                _ => {
                    io.err("error: give either --mapping with --mode, or --pipeline");
                    return EXIT_INPUT;
                }
            };
            migrate_cmd(&mut io, &files, steps, &data, &out, &chase)
        }
        Cmd::Merge { files, spec, left_data, right_data, out, chase } => {
            merge_cmd(&mut io, &files, &spec, &left_data, &right_data, &out, &chase)
        }
        Cmd::CheckInstance { files, data, schema, tolerance, json } => {
            check_instance_cmd(&mut io, &files, &data, schema.as_deref(), tolerance, json)
        }
    }
}

/// Explicit flag, then `FUNMIG_DEPTH`, then the default.
fn depth_bound(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var("FUNMIG_DEPTH").ok().and_then(|v| v.trim().parse().ok())).unwrap_or(DEFAULT_DEPTH_BOUND)
}

fn diag_json(sources: &SourceMap, d: &Diag) -> Json {
    json!({
        "code": d.code,
        "stage": format!("{:?}", d.stage),
        "message": d.message,
        "file": sources.files.get(d.span.file).map(|f| f.0.display().to_string()),
        "line": d.span.line,
        "column": d.span.col,
        "expected": d.expected,
    })
}

fn exit_for(diags: &[Diag]) -> i32 {
    if diags.iter().any(|d| d.stage != Stage::Validation) {
        EXIT_INPUT
    } else {
        EXIT_VALIDATION
    }
}

/// Loads and elaborates `files`; any diagnostic is fatal.
fn load_project(io: &mut Io<'_>, files: &[PathBuf]) -> Result<Project, i32> {
    let mut sources = SourceMap::default();
    let decls = load_files(&mut sources, files).map_err(|d| {
        io.err(&sources.render(&d));
        EXIT_INPUT
    })?;
    let (project, diags) = elaborate(&decls);
    if diags.is_empty() {
        return Ok(project);
    }
    for d in &diags {
        io.err(&sources.render(d));
    }
    Err(exit_for(&diags))
}

fn print_json(io: &mut Io<'_>, v: &Json) {
    io.out(&serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn check_schema(io: &mut Io<'_>, files: &[PathBuf], json: bool) -> i32 {
    let mut sources = SourceMap::default();
    let (project, diags) = match load_files(&mut sources, files) {
        Ok(decls) => elaborate(&decls),
        Err(d) => (Project::default(), vec![d]),
    };
    for d in &diags {
        io.err(&sources.render(d));
    }
    let code = if diags.is_empty() { EXIT_OK } else { exit_for(&diags) };
    if json {
        let schemas: Vec<Json> = project
            .schemas
            .values()
            .map(|s| {
                json!({
                    "name": s.name,
                    "entities": s.entities.len(),
                    "foreign_keys": s.fks.len(),
                    "attributes": s.attrs.len(),
                    "equations": s.equations.len(),
                })
            })
            .collect();
        let diagnostics: Vec<Json> = diags.iter().map(|d| diag_json(&sources, d)).collect();
        print_json(io, &json!({ "ok": diags.is_empty(), "exit_code": code, "schemas": schemas, "diagnostics": diagnostics }));
    } else if diags.is_empty() {
        for s in project.schemas.values() {
            io.out(&format!(
                "schema {}: {} entities, {} foreign keys, {} attributes, {} equations",
                s.name,
                s.entities.len(),
                s.fks.len(),
                s.attrs.len(),
                s.equations.len()
            ));
        }
        io.out("ok");
    }
    code
}

fn overall_exit(o: Overall) -> i32 {
    match o {
        Overall::Valid => EXIT_OK,
        Overall::Rejected => EXIT_REJECTED,
        Overall::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Human-readable mapping report, one block per source equation.
pub fn mapping_report_text(r: &ValidationReport, source: &str, target: &str) -> String {
    let mut s = format!(
        "mapping {} : {source} -> {target}\ndepth bound {}, {}\n",
        r.mapping,
        r.depth_bound,
        if r.strict { "strict" } else { "permissive" }
    );
    for o in &r.outcomes {
        s.push_str(&format!("{}: {} = {}\n", o.label, o.equation.lhs, o.equation.rhs));
        s.push_str(&format!("  image: {} = {}\n", o.lhs, o.rhs));
        match o.result.verdict {
            funmig_core::Verdict::Provable => {
                s.push_str(&format!("  Provable in {} step(s)\n", o.result.trace.len()));
                for (i, st) in o.result.trace.iter().enumerate() {
                    s.push_str(&format!("    {}. {} {} at {}: {}\n", i + 1, st.label, st.direction.as_str(), st.position, st.result));
                }
            }
            funmig_core::Verdict::NotProvableWithinBound => s.push_str("  NotProvableWithinBound\n"),
        }
    }
    let unproven = r.unproven();
    if unproven.is_empty() {
        s.push_str(&format!("overall: {}\n", r.overall));
    } else {
        s.push_str(&format!("overall: {} (unproved: {})\n", r.overall, unproven.join(", ")));
    }
    s
}

pub fn mapping_report_json(r: &ValidationReport, source: &str, target: &str) -> Json {
    let equations: Vec<Json> = r
        .outcomes
        .iter()
        .map(|o| {
            let trace: Vec<Json> = o
                .result
                .trace
                .iter()
                .map(|st| {
                    json!({
                        "equation": st.label,
                        "direction": st.direction.as_str(),
                        "position": st.position,
                        "result": st.result.to_string(),
                    })
                })
                .collect();
            json!({
                "label": o.label,
                "lhs": o.equation.lhs.to_string(),
                "rhs": o.equation.rhs.to_string(),
                "lhs_image": o.lhs.to_string(),
                "rhs_image": o.rhs.to_string(),
                "verdict": o.result.verdict.as_str(),
                "trace": trace,
            })
        })
        .collect();
    json!({
        "mapping": r.mapping,
        "source": source,
        "target": target,
        "depth_bound": r.depth_bound,
        "strict": r.strict,
        "overall": r.overall.as_str(),
        "unproven": r.unproven(),
        "equations": equations,
    })
}

fn check_mapping_cmd(io: &mut Io<'_>, files: &[PathBuf], name: &str, depth: usize, strict: bool, json: bool) -> i32 {
    let project = match load_project(io, files) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let Some(m) = project.mappings.get(name) else {
        io.err(&format!("error[UnresolvedName]: no mapping `{name}`"));
        return EXIT_INPUT;
    };
    let report = match check_mapping(m, &project.udfs, depth, strict) {
        Ok(r) => r,
        Err(e) => {
            io.err(&format!("error[IllFormedMapping]: mapping `{name}`: {e}"));
            if json {
                print_json(io, &json!({ "mapping": name, "overall": "Rejected", "error": e.to_string() }));
            }
            return EXIT_REJECTED;
        }
    };
    if json {
        print_json(io, &mapping_report_json(&report, &m.source.name, &m.target.name));
    } else {
        let _ = write!(io.out, "{}", mapping_report_text(&report, &m.source.name, &m.target.name));
    }
    overall_exit(report.overall)
}

fn migrate_exit(e: &MigrateError) -> i32 {
    match e {
        MigrateError::IllFormedMapping(_) => EXIT_REJECTED,
        MigrateError::MappingRejected { overall: Overall::Inconclusive, .. } => EXIT_INCONCLUSIVE,
        MigrateError::MappingRejected { .. } => EXIT_REJECTED,
        MigrateError::InputViolatesConstraints { .. } => EXIT_VIOLATIONS,
        MigrateError::ChaseBudgetExceeded { .. } | MigrateError::Contradiction { .. } | MigrateError::KeyConflict(_) => EXIT_CHASE,
        _ => EXIT_INPUT,
    }
}

fn migrate_error(io: &mut Io<'_>, e: &MigrateError) -> i32 {
    let code = match e {
        MigrateError::IllFormedMapping(_) => "IllFormedMapping",
        MigrateError::MappingRejected { .. } => "MappingRejected",
        MigrateError::SchemaMismatch { .. } => "SchemaMismatch",
        MigrateError::InputViolatesConstraints { .. } => "InputViolatesConstraints",
        MigrateError::ChaseBudgetExceeded { .. } => "ChaseBudgetExceeded",
        MigrateError::Contradiction { .. } => "Contradiction",
        MigrateError::KeyConflict(_) => "KeyConflict",
        MigrateError::Pushout(_) => "Pushout",
        MigrateError::InvalidMergeSpec(_) => "InvalidMergeSpec",
        MigrateError::UnknownEntity(_) | MigrateError::UnknownAttribute { .. } => "UnresolvedName",
        MigrateError::Instance(_) => "Instance",
    };
    io.err(&format!("error[{code}]: {e}"));
    migrate_exit(e)
}

fn io_error(io: &mut Io<'_>, e: &IoError) -> i32 {
    io.err(&e.to_string());
    EXIT_INPUT
}

fn context<'a>(project: &'a Project, chase: &ChaseArgs) -> MigrationContext<'a> {
    let mut ctx = MigrationContext::new(&project.udfs);
    ctx.depth_bound = depth_bound(chase.depth);
    ctx.chase.max_fresh_rows = chase.max_fresh_rows;
    ctx.chase.max_rounds = chase.max_rounds;
    ctx
}

/// Writes into a fresh sibling of `out` and moves it into place only when
/// everything succeeded, so failures never leave partial output.
fn publish(out: &Path, write: impl FnOnce(&Path) -> Result<(), IoError>) -> Result<(), IoError> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent).map_err(|error| IoError::Io { file: parent.clone(), error })?;
    let staging = tempfile::Builder::new()
        .prefix(".funmig-")
        .tempdir_in(&parent)
        .map_err(|error| IoError::Io { file: parent.clone(), error })?;
    write(staging.path())?;
    if out.is_dir() {
        std::fs::remove_dir_all(out).map_err(|error| IoError::Io { file: out.to_path_buf(), error })?;
    }
    let staged = staging.keep();
    std::fs::rename(&staged, out).map_err(|error| IoError::Io { file: out.to_path_buf(), error })
}

fn row_summary(io: &mut Io<'_>, inst: &Instance) {
    for e in &inst.schema().entities {
        io.out(&format!("{e}: {} rows", inst.row_count(e)));
    }
}

enum Target {
    Steps(Vec<PipelineStep>),
    Pipeline(String),
}

fn migrate_cmd(io: &mut Io<'_>, files: &[PathBuf], target: Target, data: &Path, out: &Path, chase: &ChaseArgs) -> i32 {
    let project = match load_project(io, files) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let steps = match target {
        Target::Steps(s) => s,
        Target::Pipeline(p) => match project.pipelines.get(&p) {
            Some(p) => p.steps.clone(),
            None => {
                io.err(&format!("error[UnresolvedName]: no migration `{p}`"));
                return EXIT_INPUT;
            }
        },
    };
    let mut plan = Vec::new();
    for s in &steps {
        let (name, input) = match s {
            PipelineStep::Delta(m) | PipelineStep::Sigma(m) => match project.mappings.get(m) {
                Some(map) => (m, if matches!(s, PipelineStep::Delta(_)) { &map.target } else { &map.source }),
                None => {
                    io.err(&format!("error[UnresolvedName]: no mapping `{m}`"));
                    return EXIT_INPUT;
                }
            },
            PipelineStep::Filter(f) => match project.filters.get(f) {
                Some(def) => (f, &project.schemas[&def.schema]),
                None => {
                    io.err(&format!("error[UnresolvedName]: no filter `{f}`"));
                    return EXIT_INPUT;
                }
            },
        };
        plan.push((s, name, input));
    }
    let input_schema = plan[0].2;
    let mut inst = match load_csv(data, input_schema, &project.udfs) {
        Ok(i) => i,
        Err(e) => return io_error(io, &e),
    };
    let ctx = context(&project, chase);
    for (step, _, _) in &plan {
        let r = match step {
            PipelineStep::Delta(m) => delta(&ctx, &project.mappings[m], &inst),
            PipelineStep::Sigma(m) => sigma(&ctx, &project.mappings[m], &inst),
            PipelineStep::Filter(f) => {
                let def = &project.filters[f];
                let report = inst.check(&ctx.check);
                match report.violations.first() {
                    Some(v) => Err(MigrateError::InputViolatesConstraints {
                        schema: def.schema.clone(),
                        count: report.violations.len(),
                        first: v.to_string(),
                    }),
                    None => filter(&inst, &def.predicate),
                }
            }
        };
        inst = match r {
            Ok(i) => i,
            Err(e) => return migrate_error(io, &e),
        };
    }
    if let Err(e) = publish(out, |dir| export_csv(&inst, dir)) {
        return io_error(io, &e);
    }
    row_summary(io, &inst);
    EXIT_OK
}

fn merge_cmd(io: &mut Io<'_>, files: &[PathBuf], spec: &str, left: &Path, right: &Path, out: &Path, chase: &ChaseArgs) -> i32 {
    let project = match load_project(io, files) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let Some(spec) = project.merges.get(spec) else {
        io.err(&format!("error[UnresolvedName]: no merge `{spec}`"));
        return EXIT_INPUT;
    };
    let i1 = match load_csv(left, &spec.left.target, &project.udfs) {
        Ok(i) => i,
        Err(e) => return io_error(io, &e),
    };
    let i2 = match load_csv(right, &spec.right.target, &project.udfs) {
        Ok(i) => i,
        Err(e) => return io_error(io, &e),
    };
    let ctx = context(&project, chase);
    let result = match merge(&ctx, spec, &i1, &i2) {
        Ok(r) => r,
        Err(e) => return migrate_error(io, &e),
    };
    let text = format!(
        "-- merged schema with the inclusions of `{}` and `{}`\n{}\n{}\n{}",
        spec.left.target.name,
        spec.right.target.name,
        pretty::print_schema(&result.schema),
        pretty::print_mapping(&result.left),
        pretty::print_mapping(&result.right)
    );
    let fql = format!("{}.fql", spec.name);
    let written = publish(out, |dir| {
        std::fs::write(dir.join(&fql), &text).map_err(|error| IoError::Io { file: dir.join(&fql), error })?;
        export_csv(&result.instance, dir)
    });
    if let Err(e) = written {
        return io_error(io, &e);
    }
    io.out(&format!("schema {}", result.schema.name));
    row_summary(io, &result.instance);
    EXIT_OK
}

fn check_instance_cmd(io: &mut Io<'_>, files: &[PathBuf], data: &Path, schema: Option<&str>, tolerance: f64, json: bool) -> i32 {
    let project = match load_project(io, files) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let schema = match schema {
        Some(name) => match project.schemas.get(name) {
            Some(s) => s,
            None => {
                io.err(&format!("error[UnresolvedName]: no schema `{name}`"));
                return EXIT_INPUT;
            }
        },
        None if project.schemas.len() == 1 => project.schemas.values().next().expect("one schema"),
        None => {
            io.err("error: the files declare several schemas; choose one with --schema");
            return EXIT_INPUT;
        }
    };
    let inst = match load_csv(data, schema, &project.udfs) {
        Ok(i) => i,
        Err(e) => return io_error(io, &e),
    };
    let report = inst.check(&CheckOptions { float_tolerance: tolerance });
    if json {
        let violations: Vec<Json> = report
            .violations
            .iter()
            .map(|v| {
                json!({
                    "equation": v.equation,
                    "entity": v.entity,
                    "row": v.row,
                    "lhs": v.lhs.to_string(),
                    "rhs": v.rhs.to_string(),
                })
            })
            .collect();
        print_json(io, &json!({ "schema": schema.name, "ok": report.is_empty(), "violations": violations }));
    } else {
        for v in &report.violations {
            io.out(&format!("{}@{}:{}: {} vs {}", v.equation, v.entity, v.row, v.lhs, v.rhs));
        }
        io.out(&format!("{} violation(s)", report.violations.len()));
    }
    if report.is_empty() {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    }
}
