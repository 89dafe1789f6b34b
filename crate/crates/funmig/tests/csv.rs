#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use common::{random_instance, tame_schema};
use funmig::core::{sigma, BaseType, Instance, Literal, MigrationContext, Schema, UdfRegistry, Value};
use funmig::dsl::{elaborate, load_files, Project, SourceMap};
use funmig::io::{export_csv, fixture, fixture_names, format_value, load_csv, parse_value, IoError};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn project(files: &[PathBuf]) -> Project {
    let mut sources = SourceMap::default();
    let decls = load_files(&mut sources, files).unwrap();
    let (p, diags) = elaborate(&decls);
    assert!(diags.is_empty(), "{diags:?}");
    p
}

/// Entity names a bundle has files for.
fn bundle_entities(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv") && !n.ends_with(".provenance.csv"))
        .map(|n| n.trim_end_matches(".csv").to_string())
        .collect()
}

/// Every shipped bundle with the first schema of its fixture whose entities
/// match the bundle's files.
fn fixture_bundles() -> Vec<(PathBuf, Schema, Project)> {
    let mut out = Vec::new();
    for name in fixture_names() {
        let fx = fixture(&name).unwrap();
        for b in fx.bundles() {
            let dir = fx.bundle(&b);
            let p = project(&fx.files);
            let want = bundle_entities(&dir);
            let s = p
                .schemas
                .values()
                .find(|s| s.entities.iter().cloned().collect::<BTreeSet<_>>() == want)
                .unwrap_or_else(|| panic!("no schema for {}", dir.display()))
                .clone();
            out.push((dir, s, p));
        }
    }
    assert!(out.len() >= 7, "{}", out.len());
    out
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn copy_bundle(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        std::fs::copy(e.path(), to.join(e.file_name())).unwrap();
    }
}

#[test]
fn fixture_bundles_round_trip() {
    for (dir, schema, p) in fixture_bundles() {
        let first = load_csv(&dir, &schema, &p.udfs).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        export_csv(&first, tmp.path()).unwrap();
        let second = load_csv(tmp.path(), &schema, &p.udfs).unwrap();
        assert!(first.same_content(&second), "{}", dir.display());
        let tmp2 = tempfile::tempdir().unwrap();
        export_csv(&second, tmp2.path()).unwrap();
        assert_eq!(read_dir_bytes(tmp.path()), read_dir_bytes(tmp2.path()), "{}", dir.display());
        // The shipped files are already in canonical form.
        assert_eq!(read_dir_bytes(&dir), read_dir_bytes(tmp.path()), "{}", dir.display());
    }
}

#[test]
fn reaction_bundle_has_the_cited_rows() {
    let fx = fixture("rxnnet").unwrap();
    let p = project(&[fx.file("a.fql")]);
    let i = load_csv(&fx.bundle("a_data"), &p.schemas["A"], &p.udfs).unwrap();
    assert_eq!(i.row_count("Reaction"), 3);
    assert_eq!(i.row_count("Simulation"), 2);
    assert!(i.has_row("Reaction", "3") && i.has_row("Simulation", "2"));
}

fn oqmd() -> (PathBuf, Project) {
    let fx = fixture("oqmd_mini").unwrap();
    (fx.bundle("oqmd"), project(&[fx.file("oqmd.fql")]))
}

/// Copies the OQMD bundle, rewrites one file with `edit`, and loads it.
fn load_mutated(file: &str, edit: impl Fn(&str) -> String) -> Result<Instance, IoError> {
    let (dir, p) = oqmd();
    let tmp = tempfile::tempdir().unwrap();
    copy_bundle(&dir, tmp.path());
    let path = tmp.path().join(file);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, edit(&text)).unwrap();
    load_csv(tmp.path(), &p.schemas["OQMD"], &p.udfs)
}

#[test]
fn malformed_float_is_reported_at_its_cell() {
    // Row 2 of Structures is file line 3; y0 is the fourth column.
    let err = load_mutated("Structures.csv", |t| t.replacen("-1.435,1.435", "-1.435,1.4x35", 1)).unwrap_err();
    match &err {
        IoError::UnparsableLiteral { file, line, column, message } => {
            assert!(file.ends_with("Structures.csv"));
            assert_eq!((*line, *column), (3, 4));
            assert!(message.contains("1.4x35"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    assert!(err.to_string().contains("Structures.csv:3:4: error[UnparsableLiteral]"), "{err}");
}

#[test]
fn other_corruptions_are_caught() {
    let e = load_mutated("Calculation.csv", |t| t.replacen("c2,2,", "c2,9,", 1)).unwrap_err();
    assert!(matches!(e, IoError::DanglingForeignKey { line: 3, column: 2, ref target, .. } if target == "9"), "{e:?}");

    let e = load_mutated("Element.csv", |t| t.replacen("Fe,Fe", "Cu,Fe", 1)).unwrap_err();
    assert!(matches!(e, IoError::DuplicateId { line: 3, ref id, .. } if id == "Cu"), "{e:?}");

    let e = load_mutated("Element.csv", |t| t.replacen("atomic_number", "z", 1)).unwrap_err();
    assert!(matches!(e, IoError::HeaderMismatch { .. }), "{e:?}");

    let e = load_mutated("Element.csv", |t| t.replacen(",29", ",twenty-nine", 1)).unwrap_err();
    assert!(matches!(e, IoError::UnparsableLiteral { line: 2, column: 3, .. }), "{e:?}");

    let (dir, p) = oqmd();
    let tmp = tempfile::tempdir().unwrap();
    copy_bundle(&dir, tmp.path());
    std::fs::remove_file(tmp.path().join("Element.csv")).unwrap();
    let e = load_csv(tmp.path(), &p.schemas["OQMD"], &p.udfs).unwrap_err();
    assert!(matches!(e, IoError::MissingFile(ref f) if f.ends_with("Element.csv")), "{e:?}");
}

#[test]
fn column_order_is_free_on_load() {
    let i = load_mutated("Element.csv", |_| "symbol,id,atomic_number\nCu,Cu,29\nO,O,8\nFe,Fe,26\n".into()).unwrap();
    let (dir, p) = oqmd();
    assert!(i.same_content(&load_csv(&dir, &p.schemas["OQMD"], &p.udfs).unwrap()));
}

#[test]
fn empty_instance_exports_header_only_files() {
    let (_, p) = oqmd();
    let s = &p.schemas["OQMD"];
    let tmp = tempfile::tempdir().unwrap();
    export_csv(&Instance::empty(s), tmp.path()).unwrap();
    let files = read_dir_bytes(tmp.path());
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["Calculation.csv", "Element.csv", "Structures.csv"]);
    assert_eq!(files[1].1, b"id,symbol,atomic_number\n");
    assert!(load_csv(tmp.path(), s, &p.udfs).unwrap().same_content(&Instance::empty(s)));
}

#[test]
fn provenance_is_written_and_read_back() {
    let fx = fixture("oqmd_mini").unwrap();
    let p = project(&[fx.file("to_catalysis.fql")]);
    let ctx = MigrationContext::new(&p.udfs);
    let landed = funmig::core::delta(&ctx, &p.mappings["land"], &load_csv(&fx.bundle("oqmd"), &p.schemas["OQMD"], &p.udfs).unwrap()).unwrap();
    let out = sigma(&ctx, &p.mappings["to_catalysis"], &landed).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    export_csv(&out, tmp.path()).unwrap();
    let prov = std::fs::read_to_string(tmp.path().join("Structure.provenance.csv")).unwrap();
    assert!(prov.starts_with("id,lineage\n1,src:OQMD:Structures:1\n"), "{prov}");
    assert!(!tmp.path().join("Cell.provenance.csv").exists(), "fresh cells have no source rows");
    let back = load_csv(tmp.path(), &p.schemas["Catalysis"], &p.udfs).unwrap();
    assert!(back.same_content(&out));
    for e in &out.schema().entities {
        for r in out.row_ids(e).unwrap() {
            assert_eq!(back.lineage(e, r).unwrap(), out.lineage(e, r).unwrap());
        }
    }
}

#[test]
fn random_instances_round_trip() {
    let udfs = UdfRegistry::new();
    let mut rng = StdRng::seed_from_u64(11);
    let mut done = 0;
    while done < 100 {
        let t = tame_schema(&mut rng, "T", "T");
        let Some(i) = random_instance(&mut rng, &t.schema, &t.loops, 4, 0.3) else { continue };
        let tmp = tempfile::tempdir().unwrap();
        export_csv(&i, tmp.path()).unwrap();
        let back = load_csv(tmp.path(), &t.schema, &udfs).unwrap();
        assert!(back.same_content(&i));
        done += 1;
    }
}

proptest! {
    #[test]
    fn string_cells_round_trip(s in ".*") {
        let udfs = UdfRegistry::new();
        let v = Value::str(&s);
        prop_assert_eq!(parse_value(&format_value(&v), BaseType::String, &udfs).unwrap(), v);
    }

    #[test]
    fn float_cells_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let udfs = UdfRegistry::new();
        let v = Value::Lit(Literal::Float(x));
        prop_assert_eq!(parse_value(&format_value(&v), BaseType::Float, &udfs).unwrap(), v);
    }

    #[test]
    fn int_cells_round_trip(n in any::<i64>()) {
        let udfs = UdfRegistry::new();
        prop_assert_eq!(parse_value(&n.to_string(), BaseType::Int, &udfs).unwrap(), Value::int(n));
    }
}

