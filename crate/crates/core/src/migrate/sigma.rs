use super::chase::Chase;
use super::{require_instance, require_valid, MigrateError, MigrationContext};
use crate::instance::Instance;
use crate::mapping::Mapping;

/// Pushes `i` forward along `f` by the chase: every source row gets an image
/// row, structure the mapping does not cover is invented as fresh rows and
/// labelled nulls, and target equations identify whatever they force.
///
/// The result is the free solution; structurally identical fresh rows are
/// not merged.
pub fn sigma(ctx: &MigrationContext<'_>, f: &Mapping, i: &Instance) -> Result<Instance, MigrateError> {
    require_valid(ctx, f)?;
    require_instance(ctx, i, &f.source)?;
    sigma_unchecked(ctx, f, i)
}

pub(crate) fn sigma_unchecked(ctx: &MigrationContext<'_>, f: &Mapping, i: &Instance) -> Result<Instance, MigrateError> {
    let mut chase = Chase::new(&f.target, ctx.udfs, ctx.chase);
    chase.seed(f, i, &f.source.name)?;
    chase.run()?;
    Ok(chase.finish())
}
