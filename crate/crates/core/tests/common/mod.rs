//! Independent reference implementations used to cross-check the engine.
//!
//! The oracles work on plain vectors and strings and never call the prover,
//! the chase or the migration code. The `run_*` harnesses at the bottom
//! drive the engine against them and are shared with the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use funmig_core::{
    decide_path_equality, translate_path, AttrExpr, BaseType, Instance, InstanceBuilder, Mapping, Path, Schema, Sort,
    UdfRegistry, Value,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------------------
// schemas and paths

/// Every entity-valued path from `start` with at most `max_len` steps.
pub fn paths_from(s: &Schema, start: &str, max_len: usize) -> Vec<Path> {
    let mut out = vec![Path::identity(start)];
    let mut frontier = vec![(Path::identity(start), start.to_string())];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (p, at) in &frontier {
            for f in s.fks_from(at) {
                let mut q = p.clone();
                q.steps.push(f.name.clone());
                out.push(q.clone());
                next.push((q, f.target.clone()));
            }
        }
        frontier = next;
    }
    out
}

pub fn end_entity(s: &Schema, p: &Path) -> String {
    match s.codomain(p).unwrap() {
        Sort::Entity(e) => e,
        Sort::Base(_) => panic!("attribute path"),
    }
}

/// Arbitrary small schema: up to 3 entities, 4 fks (cycles allowed) and two
/// entity-valued equations.
pub fn arbitrary_schema(rng: &mut StdRng, name: &str) -> Schema {
    let n = rng.gen_range(1..=3);
    let mut s = Schema::new(name);
    for i in 0..n {
        s = s.entity(&format!("E{i}"));
    }
    let fks = rng.gen_range(1..=4);
    for i in 0..fks {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        s = s.fk(&format!("f{i}"), &format!("E{a}"), &format!("E{b}"));
    }
    let eqs = rng.gen_range(0..=2);
    let mut added = 0;
    for _ in 0..20 {
        if added == eqs {
            break;
        }
        let start = format!("E{}", rng.gen_range(0..n));
        let all = paths_from(&s, &start, 3);
        let lhs = all.choose(rng).unwrap().clone();
        let end = end_entity(&s, &lhs);
        let same: Vec<&Path> = all.iter().filter(|p| **p != lhs && end_entity(&s, p) == end).collect();
        if let Some(rhs) = same.choose(rng) {
            let rhs = (*rhs).clone();
            s = s.equation(Some(&format!("q{added}")), lhs, rhs);
            added += 1;
        }
    }
    s
}

// ---------------------------------------------------------------------------
// bounded rewrite closure

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Oracle {
    Equal,
    NotEqual,
    Unknown,
}

fn codomain_of(s: &Schema, start: &str, steps: &[String]) -> String {
    let mut at = start.to_string();
    for st in steps {
        at = s.find_fk(&at, st).expect("well-typed word").target.clone();
    }
    at
}

/// One-step rewrites of a word by the schema's equations, in both directions.
pub fn rewrites(s: &Schema, start: &str, w: &[String]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for eq in &s.equations {
        for (from, to) in [(&eq.lhs, &eq.rhs), (&eq.rhs, &eq.lhs)] {
            let k = from.steps.len();
            if k > w.len() {
                continue;
            }
            for i in 0..=w.len() - k {
                if w[i..i + k] != from.steps[..] || codomain_of(s, start, &w[..i]) != from.start {
                    continue;
                }
                let mut v = w[..i].to_vec();
                v.extend(to.steps.iter().cloned());
                v.extend(w[i + k..].iter().cloned());
                out.push(v);
            }
        }
    }
    out
}

/// Explores the rewrite class of `p` through words of at most `max_len`
/// steps. `Equal` if `q` is reached; `NotEqual` if the whole class fits under
/// the bound and `q` is not in it; `Unknown` otherwise.
pub fn rewrite_closure(s: &Schema, p: &Path, q: &Path, max_len: usize) -> Oracle {
    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(p.steps.clone());
    queue.push_back(p.steps.clone());
    let mut closed = true;
    while let Some(w) = queue.pop_front() {
        if w == q.steps {
            return Oracle::Equal;
        }
        for v in rewrites(s, &p.start, &w) {
            if v.len() > max_len {
                closed = false;
                continue;
            }
            if seen.insert(v.clone()) {
                queue.push_back(v);
            }
        }
        if seen.len() > 200_000 {
            return Oracle::Unknown;
        }
    }
    if closed {
        Oracle::NotEqual
    } else {
        Oracle::Unknown
    }
}

// ---------------------------------------------------------------------------
// plain models: fk tables as vectors

#[derive(Clone, Debug)]
pub struct Model {
    pub rows: BTreeMap<String, usize>,
    pub fks: BTreeMap<(String, String), Vec<usize>>,
}

impl Model {
    pub fn eval(&self, s: &Schema, p: &Path, row: usize) -> usize {
        let mut at = p.start.clone();
        let mut r = row;
        for st in &p.steps {
            r = self.fks[&(at.clone(), st.clone())][r];
            at = s.find_fk(&at, st).unwrap().target.clone();
        }
        r
    }

    pub fn satisfies(&self, s: &Schema) -> bool {
        s.equations.iter().all(|eq| (0..self.rows[&eq.lhs.start]).all(|r| self.eval(s, &eq.lhs, r) == self.eval(s, &eq.rhs, r)))
    }
}

pub fn random_model(rng: &mut StdRng, s: &Schema, max_rows: usize) -> Model {
    let rows: BTreeMap<String, usize> = s.entities.iter().map(|e| (e.clone(), rng.gen_range(1..=max_rows))).collect();
    let fks = s
        .fks
        .iter()
        .map(|f| {
            let n = rows[&f.target];
            ((f.source.clone(), f.name.clone()), (0..rows[&f.source]).map(|_| rng.gen_range(0..n)).collect())
        })
        .collect();
    Model { rows, fks }
}

/// Up to `want` random models satisfying the equations, by rejection.
pub fn satisfying_models(rng: &mut StdRng, s: &Schema, want: usize, tries: usize) -> Vec<Model> {
    let mut out = Vec::new();
    for _ in 0..tries {
        let m = random_model(rng, s, 3);
        if m.satisfies(s) {
            out.push(m);
            if out.len() == want {
                break;
            }
        }
    }
    out
}

/// A countermodel separating `p` and `q`, if one of the sampled models is.
pub fn separated(models: &[Model], s: &Schema, p: &Path, q: &Path) -> bool {
    models.iter().any(|m| (0..m.rows[&p.start]).any(|r| m.eval(s, p, r) != m.eval(s, q, r)))
}

// ---------------------------------------------------------------------------
// tame schemas and mappings for migrations: acyclic fks plus at most one
// loop per entity, and that loop is idempotent or an involution, so the
// chase always terminates.

pub struct Tame {
    pub schema: Schema,
    /// (entity, loop fk, involution?)
    pub loops: Vec<(String, String, bool)>,
}

pub fn tame_schema(rng: &mut StdRng, name: &str, prefix: &str) -> Tame {
    let n = rng.gen_range(1..=3);
    let ent = |i: usize| format!("{prefix}{i}");
    let mut s = Schema::new(name);
    for i in 0..n {
        s = s.entity(&ent(i));
    }
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            for _ in 0..rng.gen_range(0..=1) {
                s = s.fk(&format!("g{k}"), &ent(i), &ent(j));
                k += 1;
            }
        }
    }
    let mut loops = Vec::new();
    for i in 0..n {
        if rng.gen_bool(0.3) {
            let name = format!("l{i}");
            let inv = rng.gen_bool(0.5);
            s = s.fk(&name, &ent(i), &ent(i));
            let rhs = if inv { Path::identity(&ent(i)) } else { Path::new(&ent(i), [name.as_str()]) };
            s = s.equation(Some(&format!("loop{i}")), Path::new(&ent(i), [name.as_str(), name.as_str()]), rhs);
            loops.push((ent(i), name, inv));
        }
    }
    for i in 0..n {
        if rng.gen_bool(0.6) {
            s = s.attr(&format!("v{i}"), &ent(i), BaseType::Int);
        }
    }
    // occasionally glue two parallel acyclic paths
    if rng.gen_bool(0.4) {
        let start = ent(rng.gen_range(0..n));
        let all: Vec<Path> = paths_from(&s, &start, 2)
            .into_iter()
            .filter(|p| p.steps.iter().all(|st| st.starts_with('g')) && !p.is_identity())
            .collect();
        if let Some(p) = all.choose(rng) {
            let end = end_entity(&s, p);
            let others: Vec<&Path> = all.iter().filter(|q| *q != p && end_entity(&s, q) == end).collect();
            if let Some(q) = others.choose(rng) {
                let (p, q) = (p.clone(), (*q).clone());
                s = s.equation(Some("glue"), p, q);
            }
        }
    }
    Tame { schema: s, loops }
}

/// Attribute-ending paths from `start` through at most one fk.
fn attr_paths(s: &Schema, start: &str) -> Vec<Path> {
    let mut out = Vec::new();
    for p in paths_from(s, start, 1) {
        let end = end_entity(s, &p);
        for a in s.attrs_from(&end) {
            let mut q = p.clone();
            q.steps.push(a.name.clone());
            out.push(q);
        }
    }
    out
}

/// A random functor into `t` whose source equations are all provable, so
/// it passes the mapping check. Attributes map to paths only.
pub fn random_mapping(rng: &mut StdRng, t: &Schema) -> Option<Mapping> {
    let n = rng.gen_range(1..=3);
    let mut s = Schema::new("Src");
    let mut image = BTreeMap::new();
    for i in 0..n {
        let x = format!("S{i}");
        s = s.entity(&x);
        image.insert(x, t.entities.choose(rng).unwrap().clone());
    }
    let mut fk_images = Vec::new();
    for k in 0..rng.gen_range(0..=3) {
        let x = format!("S{}", rng.gen_range(0..n));
        let y = format!("S{}", rng.gen_range(0..n));
        let candidates: Vec<Path> =
            paths_from(t, &image[&x], 2).into_iter().filter(|p| end_entity(t, p) == image[&y]).collect();
        if let Some(p) = candidates.choose(rng) {
            let name = format!("h{k}");
            s = s.fk(&name, &x, &y);
            fk_images.push((x, name, p.clone()));
        }
    }
    let mut attr_images = Vec::new();
    for i in 0..n {
        let x = format!("S{i}");
        let cands = attr_paths(t, &image[&x]);
        if rng.gen_bool(0.7) {
            if let Some(p) = cands.choose(rng) {
                let name = format!("w{i}");
                s = s.attr(&name, &x, BaseType::Int);
                attr_images.push((x, name, p.clone()));
            }
        }
    }
    let mut m = Mapping::new("F", &s, t);
    for (x, y) in &image {
        m = m.entity(x, y);
    }
    for (x, name, p) in &fk_images {
        m = m.fk(x, name, p.clone());
    }
    for (x, name, p) in &attr_images {
        m = m.attr(x, name, AttrExpr::Path(p.clone()));
    }
    // equations: random parallel pairs that happen to hold in the target
    for k in 0..rng.gen_range(0..=2) {
        let x = format!("S{}", rng.gen_range(0..n));
        let all = paths_from(&s, &x, 2);
        let p = all.choose(rng).unwrap().clone();
        let end = end_entity(&s, &p);
        let others: Vec<&Path> = all.iter().filter(|q| **q != p && end_entity(&s, q) == end).collect();
        let Some(q) = others.choose(rng) else { continue };
        let q = (*q).clone();
        m.source = s.clone();
        let (fp, fq) = (translate_path(&m, &p).ok()?, translate_path(&m, &q).ok()?);
        if decide_path_equality(t, &fp, &fq, 64).ok()?.is_provable() {
            s = s.equation(Some(&format!("e{k}")), p, q);
        }
    }
    m.source = s;
    Some(m)
}

// ---------------------------------------------------------------------------
// random instances through the public builder

fn fill_loop(rng: &mut StdRng, n: usize, involution: bool) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    if involution {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let mut f: Vec<usize> = (0..n).collect();
        let mut i = 0;
        while i + 1 < idx.len() {
            if rng.gen_bool(0.6) {
                f[idx[i]] = idx[i + 1];
                f[idx[i + 1]] = idx[i];
                i += 2;
            } else {
                i += 1;
            }
        }
        f
    } else {
        // idempotent: pick fixed points, send everything else to one of them
        let fixed: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        let fixed = if fixed.is_empty() { vec![rng.gen_range(0..n)] } else { fixed };
        (0..n).map(|i| if fixed.contains(&i) { i } else { *fixed.choose(rng).unwrap() }).collect()
    }
}

/// A random instance satisfying the equations, built by rejection on
/// the fk tables; loops listed in `loops` are drawn from their equation's
/// solutions directly. Attribute cells are 0, 1 or (sometimes) a null.
pub fn random_instance(
    rng: &mut StdRng,
    s: &Schema,
    loops: &[(String, String, bool)],
    max_rows: usize,
    null_rate: f64,
) -> Option<Instance> {
    for _ in 0..300 {
        let rows: BTreeMap<String, usize> =
            s.entities.iter().map(|e| (e.clone(), rng.gen_range(0..=max_rows))).collect();
        // every fk target must be inhabited when its source is
        if s.fks.iter().any(|f| rows[&f.source] > 0 && rows[&f.target] == 0) {
            continue;
        }
        let mut fks = BTreeMap::new();
        for f in &s.fks {
            let n = rows[&f.source];
            let col = match loops.iter().find(|(e, l, _)| *e == f.source && *l == f.name) {
                Some((_, _, inv)) => fill_loop(rng, n, *inv),
                None => (0..n).map(|_| rng.gen_range(0..rows[&f.target])).collect(),
            };
            fks.insert((f.source.clone(), f.name.clone()), col);
        }
        let model = Model { rows: rows.clone(), fks };
        if !model.satisfies(s) {
            continue;
        }
        let mut b = InstanceBuilder::new(s);
        for e in &s.entities {
            for r in 0..rows[e] {
                b.add_row(e, &format!("{r}")).unwrap();
            }
        }
        for f in &s.fks {
            for (r, t) in model.fks[&(f.source.clone(), f.name.clone())].iter().enumerate() {
                b.set_fk(&f.source, &format!("{r}"), &f.name, &format!("{t}")).unwrap();
            }
        }
        for a in &s.attrs {
            for r in 0..rows[&a.source] {
                if rng.gen_bool(null_rate) {
                    continue; // left unset: a fresh null
                }
                b.set_attr(&a.source, &format!("{r}"), &a.name, Value::int(rng.gen_range(0..2))).unwrap();
            }
        }
        return Some(b.finalize(&UdfRegistry::new()).unwrap());
    }
    None
}

// ---------------------------------------------------------------------------
// homomorphism counting

/// Number of homomorphisms from `a` to `b` (same schema): row maps that
/// commute with every fk, together with an assignment of `a`'s nulls that
/// sends every cell of `a` to the corresponding cell of `b`. Literals are
/// fixed. Values are compared in displayed form, which is the same for
/// every member of a class.
pub fn count_homs(a: &Instance, b: &Instance) -> u128 {
    let s = a.schema();
    assert_eq!(s, b.schema());
    // domain rows as (entity, id)
    let mut rows: Vec<(String, String)> = Vec::new();
    let mut index: BTreeMap<(String, String), usize> = BTreeMap::new();
    for e in &s.entities {
        for id in a.row_ids(e).unwrap() {
            index.insert((e.clone(), id.clone()), rows.len());
            rows.push((e.clone(), id.clone()));
        }
    }
    // fk edges and cell values of each domain row
    let mut edges: Vec<Vec<(String, usize)>> = vec![Vec::new(); rows.len()];
    let mut cells: Vec<Vec<(String, Value)>> = vec![Vec::new(); rows.len()];
    for (i, (e, id)) in rows.iter().enumerate() {
        for f in s.fks_from(e) {
            let t = a.fk(e, &f.name, id).unwrap();
            edges[i].push((f.name.clone(), index[&(f.target.clone(), t.clone())]));
        }
        for at in s.attrs_from(e) {
            cells[i].push((at.name.clone(), a.attr(e, &at.name, id).unwrap()));
        }
    }
    // connected components over fk edges and shared nulls
    let mut parent: Vec<usize> = (0..rows.len()).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut by_null: BTreeMap<String, usize> = BTreeMap::new();
    for i in 0..rows.len() {
        for (_, j) in edges[i].clone() {
            let (x, y) = (root(&mut parent, i), root(&mut parent, j));
            parent[x] = y;
        }
        for (_, v) in &cells[i] {
            if let Value::Null { label, .. } = v {
                if let Some(&j) = by_null.get(label) {
                    let (x, y) = (root(&mut parent, i), root(&mut parent, j));
                    parent[x] = y;
                } else {
                    by_null.insert(label.clone(), i);
                }
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..rows.len() {
        let r = root(&mut parent, i);
        comps.entry(r).or_default().push(i);
    }
    let targets: BTreeMap<String, Vec<String>> =
        s.entities.iter().map(|e| (e.clone(), b.row_ids(e).unwrap().to_vec())).collect();

    let mut total: u128 = 1;
    for members in comps.values() {
        let mut assign: BTreeMap<usize, String> = BTreeMap::new();
        let n = count_component(members, 0, &rows, &edges, &cells, &targets, b, &mut assign, &BTreeMap::new());
        total *= n;
        if total == 0 {
            return 0;
        }
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn count_component(
    members: &[usize],
    k: usize,
    rows: &[(String, String)],
    edges: &[Vec<(String, usize)>],
    cells: &[Vec<(String, Value)>],
    targets: &BTreeMap<String, Vec<String>>,
    b: &Instance,
    assign: &mut BTreeMap<usize, String>,
    nulls: &BTreeMap<String, Value>,
) -> u128 {
    if k == members.len() {
        return 1;
    }
    let i = members[k];
    let (e, _) = &rows[i];
    let mut count = 0;
    'choice: for cand in &targets[e] {
        // fks out of i whose target is assigned, and fks into i
        for (fk, j) in &edges[i] {
            let img = b.fk(e, fk, cand).unwrap();
            if *j == i {
                if img != cand {
                    continue 'choice;
                }
            } else if let Some(hj) = assign.get(j) {
                if img != hj {
                    continue 'choice;
                }
            }
        }
        for (&j, hj) in assign.iter() {
            for (fk, t) in &edges[j] {
                if *t == i && b.fk(&rows[j].0, fk, hj).unwrap() != cand {
                    continue 'choice;
                }
            }
        }
        let mut bound = nulls.clone();
        for (attr, v) in &cells[i] {
            let w = b.attr(e, attr, cand).unwrap();
            match v {
                Value::Lit(_) => {
                    if *v != w {
                        continue 'choice;
                    }
                }
                Value::Null { label, .. } => match bound.get(label) {
                    Some(prev) if *prev != w => continue 'choice,
                    Some(_) => {}
                    None => {
                        bound.insert(label.clone(), w);
                    }
                },
                Value::Term { .. } => panic!("terms are not used in hom counting"),
            }
        }
        assign.insert(i, cand.clone());
        count += count_component(members, k + 1, rows, edges, cells, targets, b, assign, &bound);
        assign.remove(&i);
    }
    count
}

// ---------------------------------------------------------------------------
// naive pullback

/// Expected delta, computed by evaluating every image path row by row:
/// (entity, id) → (fk values, attribute values).
pub type Table = BTreeMap<(String, String), (Vec<String>, Vec<Value>)>;

pub fn naive_delta(f: &Mapping, j: &Instance) -> Table {
    let mut out = BTreeMap::new();
    for x in &f.source.entities {
        let img = &f.entity_map[x];
        for id in j.row_ids(img).unwrap() {
            let fks = f
                .source
                .fks_from(x)
                .map(|fk| {
                    let p = &f.fk_map[&funmig_core::GenRef::new(x, &fk.name)];
                    match j.evaluate_path(id, p).unwrap() {
                        funmig_core::Evaluated::Row(r) => r,
                        other => panic!("fk image evaluated to {other}"),
                    }
                })
                .collect();
            let attrs = f
                .source
                .attrs_from(x)
                .map(|at| match &f.attr_map[&funmig_core::GenRef::new(x, &at.name)] {
                    AttrExpr::Path(p) => match j.evaluate_path(id, p).unwrap() {
                        funmig_core::Evaluated::Value(v) => v,
                        other => panic!("attribute image evaluated to {other}"),
                    },
                    AttrExpr::Const(l) => Value::Lit(l.clone()),
                    other => panic!("unsupported in the oracle: {other}"),
                })
                .collect();
            out.insert((x.clone(), id.clone()), (fks, attrs));
        }
    }
    out
}

pub fn tabulate(i: &Instance) -> Table {
    let s = i.schema();
    let mut out = BTreeMap::new();
    for x in &s.entities {
        for id in i.row_ids(x).unwrap() {
            let fks = s.fks_from(x).map(|f| i.fk(x, &f.name, id).unwrap().clone()).collect();
            let attrs = s.attrs_from(x).map(|a| i.attr(x, &a.name, id).unwrap()).collect();
            out.insert((x.clone(), id.clone()), (fks, attrs));
        }
    }
    out
}

/// Independent constraint check on displayed values.
pub fn naive_violations(i: &Instance) -> usize {
    let s = i.schema();
    let mut n = 0;
    for eq in &s.equations {
        for id in i.row_ids(&eq.lhs.start).unwrap() {
            if i.evaluate_path(id, &eq.lhs).unwrap() != i.evaluate_path(id, &eq.rhs).unwrap() {
                n += 1;
            }
        }
    }
    n
}

// ---------------------------------------------------------------------------
// harnesses

#[derive(Clone, Debug, Default)]
pub struct ProverStats {
    pub schemas: usize,
    pub pairs: usize,
    pub oracle_equal: usize,
    pub oracle_not_equal: usize,
    pub oracle_unknown: usize,
    /// Oracle and prover disagree.
    pub mismatches: Vec<String>,
    /// Provable pairs separated by a satisfying model.
    pub unsound: Vec<String>,
    pub replay_failures: Vec<String>,
}

/// Random schemas with random parallel path pairs of length at most 4,
/// checked against the bounded rewrite closure (words up to 8 steps) and
/// against sampled satisfying models.
pub fn run_prover_agreement(seed: u64, schemas: usize) -> ProverStats {
    let mut rng = <StdRng as rand::SeedableRng>::seed_from_u64(seed);
    let mut st = ProverStats { schemas, ..Default::default() };
    for n in 0..schemas {
        let s = arbitrary_schema(&mut rng, &format!("R{n}"));
        let models = satisfying_models(&mut rng, &s, 8, 400);
        for _ in 0..6 {
            let start = s.entities.choose(&mut rng).unwrap().clone();
            let all = paths_from(&s, &start, 4);
            let p = all.choose(&mut rng).unwrap().clone();
            let end = end_entity(&s, &p);
            let same: Vec<&Path> = all.iter().filter(|q| end_entity(&s, q) == end).collect();
            let q = (*same.choose(&mut rng).unwrap()).clone();
            st.pairs += 1;
            let res = decide_path_equality(&s, &p, &q, 64).expect("well-typed pair");
            let case = || format!("{s:?}: {p} vs {q}");
            if res.is_provable() {
                if !res.replay(&s, &p, &q) {
                    st.replay_failures.push(case());
                }
                if separated(&models, &s, &p, &q) {
                    st.unsound.push(case());
                }
            }
            match rewrite_closure(&s, &p, &q, 8) {
                Oracle::Equal => {
                    st.oracle_equal += 1;
                    if !res.is_provable() {
                        st.mismatches.push(format!("oracle Equal, prover gave up: {}", case()));
                    }
                }
                Oracle::NotEqual => {
                    st.oracle_not_equal += 1;
                    if res.is_provable() {
                        st.mismatches.push(format!("oracle NotEqual, prover Provable: {}", case()));
                    }
                }
                Oracle::Unknown => st.oracle_unknown += 1,
            }
        }
    }
    st
}

#[derive(Clone, Debug, Default)]
pub struct AdjunctionStats {
    pub cases: usize,
    pub compared: usize,
    /// Sigma failed with a contradiction and the right side had no homs.
    pub contradictions: usize,
    pub skipped: usize,
    pub nonzero: usize,
    pub mismatches: Vec<String>,
}

/// |Hom(sigma(F, I), J)| against |Hom(I, delta(F, J))| on tame schemas.
pub fn run_adjunction(seed: u64, cases: usize) -> AdjunctionStats {
    use funmig_core::{delta, sigma, MigrateError, MigrationContext};
    let mut rng = <StdRng as rand::SeedableRng>::seed_from_u64(seed);
    let udfs = UdfRegistry::new();
    let ctx = MigrationContext::new(&udfs);
    let mut st = AdjunctionStats::default();
    while st.compared + st.contradictions < cases {
        st.cases += 1;
        if st.cases > cases * 20 {
            break;
        }
        let tame = tame_schema(&mut rng, "T", "T");
        let Some(f) = random_mapping(&mut rng, &tame.schema) else {
            st.skipped += 1;
            continue;
        };
        let (Some(i), Some(j)) = (
            random_instance(&mut rng, &f.source, &[], 3, 0.3),
            random_instance(&mut rng, &tame.schema, &tame.loops, 3, 0.2),
        ) else {
            st.skipped += 1;
            continue;
        };
        let dj = match delta(&ctx, &f, &j) {
            Ok(d) => d,
            Err(e) => {
                st.mismatches.push(format!("delta failed: {e}"));
                continue;
            }
        };
        let right = count_homs(&i, &dj);
        match sigma(&ctx, &f, &i) {
            Ok(si) => {
                let left = count_homs(&si, &j);
                st.compared += 1;
                if left > 0 {
                    st.nonzero += 1;
                }
                if left != right {
                    st.mismatches.push(format!("{left} != {right} for {f:?}"));
                }
            }
            Err(MigrateError::Contradiction { .. }) => {
                st.contradictions += 1;
                if right != 0 {
                    st.mismatches.push(format!("sigma contradicts but Hom(I, delta J) = {right}"));
                }
            }
            Err(MigrateError::ChaseBudgetExceeded { .. }) => st.skipped += 1,
            Err(e) => st.mismatches.push(format!("sigma failed: {e}")),
        }
    }
    st
}
