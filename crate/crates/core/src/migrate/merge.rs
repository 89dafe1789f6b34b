use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::chase::{Cell, Chase};
use super::pushout::pushout;
use super::{require_instance, require_valid, MigrateError, MigrationContext};
use crate::catcore::{Path, Schema};
use crate::instance::{compile_path, Instance, Literal, Step};
use crate::mapping::{AttrExpr, Image, Mapping};

/// Two schemas glued along a shared overlap, with the paths that identify a
/// record of each overlap entity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeSpec {
    pub name: String,
    pub overlap: Schema,
    /// overlap → left schema
    pub left: Mapping,
    /// overlap → right schema
    pub right: Mapping,
    /// Identifying paths per overlap entity, each starting at that entity.
    pub keys: BTreeMap<String, Vec<Path>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeResult {
    pub schema: Schema,
    pub instance: Instance,
    /// left schema → merged schema
    pub left: Mapping,
    /// right schema → merged schema
    pub right: Mapping,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum KeyPart {
    Row(usize),
    Lit(Literal),
}

/// Key paths of one overlap entity, resolved in the merged schema.
struct Keyed {
    entity: usize,
    paths: Vec<Vec<Step>>,
}

impl MergeSpec {
    fn check(&self) -> Result<(), MigrateError> {
        if self.left.source != self.overlap || self.right.source != self.overlap {
            return Err(MigrateError::InvalidMergeSpec(format!(
                "`{}` and `{}` must both start at overlap schema `{}`",
                self.left.name, self.right.name, self.overlap.name
            )));
        }
        for (entity, paths) in &self.keys {
            if !self.overlap.has_entity(entity) {
                return Err(MigrateError::InvalidMergeSpec(format!("key entity `{entity}` is not in the overlap")));
            }
            for p in paths {
                if &p.start != entity {
                    return Err(MigrateError::InvalidMergeSpec(format!("key `{p}` does not start at `{entity}`")));
                }
                self.overlap
                    .codomain(p)
                    .map_err(|e| MigrateError::InvalidMergeSpec(format!("key `{p}`: {e}")))?;
            }
        }
        Ok(())
    }
}

/// Resolves an overlap key path to a path in the merged schema.
fn key_path(left: &Mapping, inclusion: &Mapping, p: &Path) -> Result<Path, MigrateError> {
    let in_left = match left.translate(p)? {
        Image::Entity(q) | Image::Value(AttrExpr::Path(q)) => q,
        Image::Value(e) => {
            return Err(MigrateError::InvalidMergeSpec(format!("key `{p}` maps to `{e}`, which is not a path")))
        }
    };
    match inclusion.translate(&in_left)? {
        Image::Entity(q) | Image::Value(AttrExpr::Path(q)) => Ok(q),
        Image::Value(e) => Err(MigrateError::InvalidMergeSpec(format!("key `{p}` maps to `{e}`"))),
    }
}

/// Merges two instances over the pushout of the spec's mappings.
///
/// Both sides are pushed into the merged schema, then rows of each keyed
/// entity whose key values are all equal non-null literals (or equal rows,
/// for fk keys) are identified, repeatedly, until nothing changes. Linked
/// rows that disagree on a literal are a [`MigrateError::KeyConflict`].
pub fn merge(ctx: &MigrationContext<'_>, spec: &MergeSpec, i1: &Instance, i2: &Instance) -> Result<MergeResult, MigrateError> {
    spec.check()?;
    require_valid(ctx, &spec.left)?;
    require_valid(ctx, &spec.right)?;
    require_instance(ctx, i1, &spec.left.target)?;
    require_instance(ctx, i2, &spec.right.target)?;
    let po = pushout(&spec.name, &spec.left, &spec.right)?;

    let mut keyed = Vec::new();
    for (entity, paths) in &spec.keys {
        let target = &po.left.entity_map[&spec.left.entity_map[entity]];
        let e = po.schema.entity_index(target).expect("pushout entity");
        let mut compiled = Vec::with_capacity(paths.len());
        for p in paths {
            let q = key_path(&spec.left, &po.left, p)?;
            let (_, steps) = compile_path(&po.schema, &q).map_err(|e| MigrateError::Instance(e.into()))?;
            compiled.push(steps);
        }
        keyed.push(Keyed { entity: e, paths: compiled });
    }

    let mut chase = Chase::new(&po.schema, ctx.udfs, ctx.chase);
    chase.seed(&po.left, i1, &spec.left.target.name)?;
    chase.seed(&po.right, i2, &spec.right.target.name)?;
    chase.run()?;
    loop {
        let mut changed = false;
        for k in &keyed {
            let mut first: BTreeMap<Vec<KeyPart>, usize> = BTreeMap::new();
            for r in 0..chase.row_count(k.entity) {
                if !chase.is_root(k.entity, r) {
                    continue;
                }
                let Some(key) = key_of(&chase, k, r) else { continue };
                match first.get(&key) {
                    Some(&other) => {
                        chase.linking = true;
                        chase.merge_rows(k.entity, other, r)?;
                        chase.linking = false;
                        changed = true;
                    }
                    None => {
                        first.insert(key, r);
                    }
                }
            }
        }
        if !changed {
            break;
        }
        chase.run()?;
    }
    let instance = chase.finish();
    Ok(MergeResult { schema: po.schema, instance, left: po.left, right: po.right })
}

fn key_of(chase: &Chase<'_>, k: &Keyed, r: usize) -> Option<Vec<KeyPart>> {
    k.paths
        .iter()
        .map(|steps| match chase.eval(k.entity, r, steps)? {
            Cell::Row(t) => Some(KeyPart::Row(t)),
            Cell::Node(n) => chase.values.literal(n).cloned().map(KeyPart::Lit),
        })
        .collect()
}
