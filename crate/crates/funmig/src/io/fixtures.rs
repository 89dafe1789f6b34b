//! The shipped example projects under `fixtures/<name>/`, each a set of
//! `.fql` files plus CSV bundles under `csv/<bundle>/`.

use std::path::{Path, PathBuf};

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub dir: PathBuf,
    /// `.fql` files, sorted by name.
    pub files: Vec<PathBuf>,
}

impl Fixture {
    pub fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Directory of bundle `name` under `csv/`.
    pub fn bundle(&self, name: &str) -> PathBuf {
        self.dir.join("csv").join(name)
    }

    /// Names of the bundles under `csv/`, sorted.
    pub fn bundles(&self) -> Vec<String> {
        list(&self.dir.join("csv"), |p| p.is_dir())
    }
}

/// `fixtures/` at the workspace root; `FUNMIG_FIXTURES` overrides it.
pub fn fixtures_dir() -> PathBuf {
    match std::env::var_os("FUNMIG_FIXTURES") {
        Some(d) => PathBuf::from(d),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"),
    }
}

fn list(dir: &Path, keep: impl Fn(&Path) -> bool) -> Vec<String> {
    let mut out: Vec<String> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .map(|e| e.path())
        .filter(|p| keep(p))
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    out.sort();
    out
}

pub fn fixture_names() -> Vec<String> {
    list(&fixtures_dir(), |p| p.is_dir())
}

pub fn fixture(name: &str) -> Option<Fixture> {
    let dir = fixtures_dir().join(name);
    if !dir.is_dir() {
        return None;
    }
    let files = list(&dir, |p| p.extension().is_some_and(|e| e == "fql")).into_iter().map(|f| dir.join(f)).collect();
    Some(Fixture { name: name.into(), dir, files })
}
