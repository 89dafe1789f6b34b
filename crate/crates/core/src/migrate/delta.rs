use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{require_instance, require_valid, MigrateError, MigrationContext};
use crate::instance::{compile_path, fresh_label, Congruence, Ev, Instance, NodeId, Table};
use crate::mapping::{AttrExpr, GenRef, Mapping};
use crate::udf::UdfRegistry;

/// Pulls `j` back along `f`: each source entity gets the rows of its image,
/// fks follow their image paths and attributes evaluate their expressions.
pub fn delta(ctx: &MigrationContext<'_>, f: &Mapping, j: &Instance) -> Result<Instance, MigrateError> {
    require_valid(ctx, f)?;
    require_instance(ctx, j, &f.target)?;
    delta_unchecked(ctx.udfs, f, j)
}

struct Nulls {
    used: BTreeSet<String>,
    counters: BTreeMap<String, usize>,
}

fn eval_expr(
    j: &Instance,
    values: &mut Congruence,
    nulls: &mut Nulls,
    base: &str,
    row: usize,
    expr: &AttrExpr,
) -> Result<NodeId, MigrateError> {
    Ok(match expr {
        AttrExpr::Path(p) => {
            let (_, steps) = compile_path(&j.schema, p).map_err(|e| MigrateError::Instance(e.into()))?;
            match j.eval_compiled(row, &steps) {
                Ev::Node(n) => n,
                Ev::Row(_) => unreachable!("well-formed mapping"),
            }
        }
        AttrExpr::Const(l) => values.intern_lit(l),
        AttrExpr::Null(ty) => {
            let counter = nulls.counters.entry(String::from(base)).or_insert(0);
            let label = fresh_label(base, counter, &mut nulls.used);
            values.intern_null(&label, *ty)
        }
        AttrExpr::Apply { func, args } => {
            let args = args
                .iter()
                .map(|a| eval_expr(j, values, nulls, base, row, a))
                .collect::<Result<Vec<_>, _>>()?;
            values.intern_app_raw(func, args)
        }
    })
}

pub(crate) fn delta_unchecked(udfs: &UdfRegistry, f: &Mapping, j: &Instance) -> Result<Instance, MigrateError> {
    let src = &f.source;
    let image = |e: &str| f.target.entity_index(&f.entity_map[e]).expect("well-formed mapping");
    let mut tables = Vec::with_capacity(src.entities.len());
    for name in &src.entities {
        let t = image(name);
        let from = &j.tables[t];
        let mut table = Table::default();
        for (r, id) in from.ids.iter().enumerate() {
            let lineage = if from.lineage[r].is_empty() {
                vec![format!("src:{}:{}:{id}", j.schema.name, f.target.entities[t])]
            } else {
                from.lineage[r].clone()
            };
            table.push(id.clone(), lineage);
        }
        tables.push(table);
    }

    let mut fk_cols = Vec::with_capacity(src.fks.len());
    for fk in &src.fks {
        let img = &f.fk_map[&GenRef::new(&fk.source, &fk.name)];
        let (_, steps) = compile_path(&j.schema, img).map_err(|e| MigrateError::Instance(e.into()))?;
        let n = j.tables[image(&fk.source)].len();
        let col = (0..n)
            .map(|r| match j.eval_compiled(r, &steps) {
                Ev::Row(t) => t,
                Ev::Node(_) => unreachable!("well-formed mapping"),
            })
            .collect();
        fk_cols.push(col);
    }

    let mut values = j.values.clone();
    let mut nulls = Nulls { used: values.null_labels().map(String::from).collect(), counters: BTreeMap::new() };
    let mut attr_cols = Vec::with_capacity(src.attrs.len());
    for at in &src.attrs {
        let expr = &f.attr_map[&GenRef::new(&at.source, &at.name)];
        let base = format!("{}_{}", at.source, at.name);
        let n = j.tables[image(&at.source)].len();
        let mut col = Vec::with_capacity(n);
        for r in 0..n {
            col.push(eval_expr(j, &mut values, &mut nulls, &base, r, expr)?);
        }
        attr_cols.push(col);
    }
    values.close(udfs).map_err(super::chase::value_error)?;
    Ok(Instance { schema: src.clone(), tables, fk_cols, attr_cols, values })
}
