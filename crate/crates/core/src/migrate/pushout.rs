use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::MigrateError;
use crate::catcore::{validate_schema, Equation, Path, Schema};
use crate::mapping::{translate_path, AttrExpr, GenRef, Image, Mapping};

/// The merged schema with the inclusions of both sides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pushout {
    pub schema: Schema,
    pub left: Mapping,
    pub right: Mapping,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// A name not in `taken`, preferring `name`, then `<prefix>_<name>`.
fn unique(name: &str, prefix: &str, taken: &BTreeSet<String>) -> String {
    if !taken.contains(name) {
        return name.into();
    }
    let base = format!("{prefix}_{name}");
    let mut out = base.clone();
    let mut n = 1;
    while taken.contains(&out) {
        n += 1;
        out = format!("{base}_{n}");
    }
    out
}

fn single_step(p: &Path) -> Option<&str> {
    (p.steps.len() == 1).then(|| p.steps[0].as_str())
}

/// Glues `left.target` and `right.target` along their shared source:
/// entities and generators with the same overlap preimage become one, and
/// overlap generators whose images are longer paths turn into equations.
pub fn pushout(name: &str, left: &Mapping, right: &Mapping) -> Result<Pushout, MigrateError> {
    if left.source != right.source {
        return Err(MigrateError::InvalidMergeSpec(format!(
            "`{}` and `{}` start at different schemas",
            left.name, right.name
        )));
    }
    let (s1, s2, overlap) = (&left.target, &right.target, &left.source);
    let n1 = s1.entities.len();

    // entities
    let mut parent: Vec<usize> = (0..n1 + s2.entities.len()).collect();
    for o in &overlap.entities {
        let a = s1.entity_index(&left.entity_map[o]).expect("well-formed mapping");
        let b = n1 + s2.entity_index(&right.entity_map[o]).expect("well-formed mapping");
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        // the smaller index wins, so classes with a left entity are named by it
        let (keep, gone) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[gone] = keep;
    }
    let mut t = Schema::new(name);
    let mut class_name: BTreeMap<usize, String> = BTreeMap::new();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    for i in 0..n1 + s2.entities.len() {
        let root = find(&mut parent, i);
        if class_name.contains_key(&root) {
            continue;
        }
        let (base, prefix) = if root < n1 { (&s1.entities[root], &s1.name) } else { (&s2.entities[root - n1], &s2.name) };
        let chosen = unique(base, prefix, &taken);
        taken.insert(chosen.clone());
        t = t.entity(&chosen);
        class_name.insert(root, chosen);
    }
    let mut e1 = BTreeMap::new();
    for (i, e) in s1.entities.iter().enumerate() {
        let root = find(&mut parent, i);
        e1.insert(e.clone(), class_name[&root].clone());
    }
    let mut e2 = BTreeMap::new();
    for (i, e) in s2.entities.iter().enumerate() {
        let root = find(&mut parent, n1 + i);
        e2.insert(e.clone(), class_name[&root].clone());
    }

    // generators of the left side, then identified or fresh ones of the right
    let mut gens_on: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut g1: BTreeMap<GenRef, String> = BTreeMap::new();
    let add_gen = |entity: &str, wanted: &str, prefix: &str, gens_on: &mut BTreeMap<String, BTreeSet<String>>| {
        let set = gens_on.entry(entity.into()).or_default();
        let chosen = unique(wanted, prefix, set);
        set.insert(chosen.clone());
        chosen
    };
    for f in &s1.fks {
        let n = add_gen(&e1[&f.source], &f.name, &s1.name, &mut gens_on);
        t = t.fk(&n, &e1[&f.source], &e1[&f.target]);
        g1.insert(GenRef::new(&f.source, &f.name), n);
    }
    for a in &s1.attrs {
        let n = add_gen(&e1[&a.source], &a.name, &s1.name, &mut gens_on);
        t = t.attr(&n, &e1[&a.source], a.ty);
        g1.insert(GenRef::new(&a.source, &a.name), n);
    }

    let mut g2: BTreeMap<GenRef, String> = BTreeMap::new();
    // overlap generators: (left image, right image)
    let mut glued: Vec<(Image, Image, String)> = Vec::new();
    for f in &overlap.fks {
        let g = GenRef::new(&f.source, &f.name);
        let (l, r) = (&left.fk_map[&g], &right.fk_map[&g]);
        if let (Some(a), Some(b)) = (single_step(l), single_step(r)) {
            let rb = GenRef::new(&r.start, b);
            if !g2.contains_key(&rb) {
                g2.insert(rb, g1[&GenRef::new(&l.start, a)].clone());
                continue;
            }
        }
        glued.push((Image::Entity(l.clone()), Image::Entity(r.clone()), format!("overlap_{}_{}", f.source, f.name)));
    }
    for a in &overlap.attrs {
        let g = GenRef::new(&a.source, &a.name);
        let (l, r) = match (&left.attr_map[&g], &right.attr_map[&g]) {
            (AttrExpr::Path(l), AttrExpr::Path(r)) => (l, r),
            _ => {
                return Err(MigrateError::Pushout(format!(
                    "overlap attribute `{g}` must map to a path on both sides"
                )))
            }
        };
        if let (Some(x), Some(y)) = (single_step(l), single_step(r)) {
            let rb = GenRef::new(&r.start, y);
            if !g2.contains_key(&rb) {
                g2.insert(rb, g1[&GenRef::new(&l.start, x)].clone());
                continue;
            }
        }
        glued.push((
            Image::Value(AttrExpr::Path(l.clone())),
            Image::Value(AttrExpr::Path(r.clone())),
            format!("overlap_{}_{}", a.source, a.name),
        ));
    }
    for f in &s2.fks {
        let key = GenRef::new(&f.source, &f.name);
        if !g2.contains_key(&key) {
            let n = add_gen(&e2[&f.source], &f.name, &s2.name, &mut gens_on);
            t = t.fk(&n, &e2[&f.source], &e2[&f.target]);
            g2.insert(key, n);
        }
    }
    for a in &s2.attrs {
        let key = GenRef::new(&a.source, &a.name);
        if !g2.contains_key(&key) {
            let n = add_gen(&e2[&a.source], &a.name, &s2.name, &mut gens_on);
            t = t.attr(&n, &e2[&a.source], a.ty);
            g2.insert(key, n);
        }
    }

    let inclusion = |name: String, s: &Schema, ents: &BTreeMap<String, String>, gens: &BTreeMap<GenRef, String>, t: &Schema| {
        let mut m = Mapping::new(&name, s, t);
        for (x, y) in ents {
            m.entity_map.insert(x.clone(), y.clone());
        }
        for f in &s.fks {
            let g = GenRef::new(&f.source, &f.name);
            let p = Path::new(&ents[&f.source], [gens[&g].as_str()]);
            m.fk_map.insert(g, p);
        }
        for a in &s.attrs {
            let g = GenRef::new(&a.source, &a.name);
            let p = Path::new(&ents[&a.source], [gens[&g].as_str()]);
            m.attr_map.insert(g, AttrExpr::Path(p));
        }
        m
    };
    let mut i1 = inclusion(format!("{}_to_{name}", s1.name), s1, &e1, &g1, &t);
    let mut i2 = inclusion(format!("{}_to_{name}", s2.name), s2, &e2, &g2, &t);
    if i1.name == i2.name {
        i2.name = format!("{}_right", i2.name);
    }

    // equations
    let mut labels: BTreeSet<String> = BTreeSet::new();
    let mut seen: BTreeSet<(Path, Path)> = BTreeSet::new();
    let mut equations: Vec<Equation> = Vec::new();
    let mut push = |label: Option<String>, prefix: &str, lhs: Path, rhs: Path| {
        if lhs == rhs || seen.contains(&(lhs.clone(), rhs.clone())) || seen.contains(&(rhs.clone(), lhs.clone())) {
            return;
        }
        seen.insert((lhs.clone(), rhs.clone()));
        let label = label.map(|l| {
            let chosen = unique(&l, prefix, &labels);
            labels.insert(chosen.clone());
            chosen
        });
        equations.push(Equation { label, lhs, rhs });
    };
    let image = |m: &Mapping, p: &Path| -> Result<Path, MigrateError> {
        match m.translate(p)? {
            Image::Entity(q) => Ok(q),
            Image::Value(AttrExpr::Path(q)) => Ok(q),
            Image::Value(_) => unreachable!("inclusions send attributes to attributes"),
        }
    };
    for eq in &s1.equations {
        push(eq.label.clone(), &s1.name, image(&i1, &eq.lhs)?, image(&i1, &eq.rhs)?);
    }
    for eq in &s2.equations {
        push(eq.label.clone(), &s2.name, image(&i2, &eq.lhs)?, image(&i2, &eq.rhs)?);
    }
    for (l, r, label) in glued {
        let (lhs, rhs) = match (l, r) {
            (Image::Entity(l), Image::Entity(r)) => (translate_path(&i1, &l)?, translate_path(&i2, &r)?),
            (Image::Value(AttrExpr::Path(l)), Image::Value(AttrExpr::Path(r))) => (image(&i1, &l)?, image(&i2, &r)?),
            _ => unreachable!(),
        };
        push(Some(label), "overlap", lhs, rhs);
    }
    t.equations = equations;
    i1.target = t.clone();
    i2.target = t.clone();

    if let Some(d) = validate_schema(&t).first() {
        return Err(MigrateError::Pushout(format!("{d}")));
    }
    Ok(Pushout { schema: t, left: i1, right: i2 })
}
