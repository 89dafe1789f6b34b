//! Bounded path-equality search.
//!
//! Paths are words over generators. An equation `l = r` rewrites any subword
//! `l` sitting at a position typed by `l`'s start entity into `r`, and back.
//! Equality of two paths is searched for by breadth-first rewriting from both
//! ends at once; `depth_bound` caps the total number of rewrite applications
//! in a proof. The search never claims that two paths differ.

use alloc::collections::BTreeMap;

use hashbrown::HashMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::path::Path;
use super::schema::{Schema, SchemaError, Sort};

pub const DEFAULT_DEPTH_BOUND: usize = 64;
pub const DEFAULT_MAX_STATES: usize = 250_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProverLimits {
    /// Maximum number of rewrite applications in a proof.
    pub depth_bound: usize,
    /// Maximum number of distinct words visited across both searches.
    pub max_states: usize,
}

impl ProverLimits {
    pub fn with_depth(depth_bound: usize) -> Self {
        ProverLimits { depth_bound, ..Default::default() }
    }
}

impl Default for ProverLimits {
    fn default() -> Self {
        ProverLimits { depth_bound: DEFAULT_DEPTH_BOUND, max_states: DEFAULT_MAX_STATES }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Provable,
    NotProvableWithinBound,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Provable => "Provable",
            Verdict::NotProvableWithinBound => "NotProvableWithinBound",
        }
    }
}

/// Orientation in which an equation was used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

impl Direction {
    pub fn flip(self) -> Direction {
        match self {
            Direction::LeftToRight => Direction::RightToLeft,
            Direction::RightToLeft => Direction::LeftToRight,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::LeftToRight => "->",
            Direction::RightToLeft => "<-",
        }
    }
}

/// One rewrite: equation `equation` (declaration index) applied at step
/// offset `position`, producing `result`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteStep {
    pub equation: usize,
    pub label: String,
    pub direction: Direction,
    pub position: usize,
    pub result: Path,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofResult {
    pub verdict: Verdict,
    pub trace: Vec<RewriteStep>,
}

impl ProofResult {
    pub fn provable(trace: Vec<RewriteStep>) -> Self {
        ProofResult { verdict: Verdict::Provable, trace }
    }

    pub fn unproven() -> Self {
        ProofResult { verdict: Verdict::NotProvableWithinBound, trace: Vec::new() }
    }

    pub fn is_provable(&self) -> bool {
        self.verdict == Verdict::Provable
    }

    /// Re-applies every step of the trace by name and checks that it turns
    /// `lhs` into `rhs`.
    pub fn replay(&self, schema: &Schema, lhs: &Path, rhs: &Path) -> bool {
        if !self.is_provable() {
            return false;
        }
        let mut current = lhs.clone();
        for step in &self.trace {
            let Some(eq) = schema.equations.get(step.equation) else { return false };
            let (from, to) = match step.direction {
                Direction::LeftToRight => (&eq.lhs, &eq.rhs),
                Direction::RightToLeft => (&eq.rhs, &eq.lhs),
            };
            let pos = step.position;
            if pos + from.steps.len() > current.steps.len() {
                return false;
            }
            if current.steps[pos..pos + from.steps.len()] != from.steps[..] {
                return false;
            }
            let prefix = Path::new(&current.start, current.steps[..pos].iter().cloned());
            match schema.codomain(&prefix) {
                Ok(Sort::Entity(e)) if e == from.start => {}
                _ => return false,
            }
            let mut steps: Vec<String> = current.steps[..pos].to_vec();
            steps.extend(to.steps.iter().cloned());
            steps.extend(current.steps[pos + from.steps.len()..].iter().cloned());
            current = Path { start: current.start.clone(), steps };
            if current != step.result || schema.codomain(&current).is_err() {
                return false;
            }
        }
        &current == rhs
    }
}

/// Decides `lhs = rhs` under the schema's equations with the default state cap.
pub fn decide_path_equality(
    schema: &Schema,
    lhs: &Path,
    rhs: &Path,
    depth_bound: usize,
) -> Result<ProofResult, SchemaError> {
    decide_with_limits(schema, lhs, rhs, ProverLimits::with_depth(depth_bound))
}

pub fn decide_with_limits(
    schema: &Schema,
    lhs: &Path,
    rhs: &Path,
    limits: ProverLimits,
) -> Result<ProofResult, SchemaError> {
    let l_cod = schema.codomain(lhs)?;
    let r_cod = schema.codomain(rhs)?;
    if lhs.start != rhs.start {
        return Err(SchemaError::TypeMismatch {
            expected: Sort::Entity(lhs.start.clone()),
            found: Sort::Entity(rhs.start.clone()),
        });
    }
    if l_cod != r_cod {
        return Err(SchemaError::TypeMismatch { expected: l_cod, found: r_cod });
    }
    if lhs == rhs {
        return Ok(ProofResult::provable(Vec::new()));
    }
    let sys = RewriteSystem::compile(schema);
    let start = sys.entity(&lhs.start);
    let l = sys.encode(lhs);
    let r = sys.encode(rhs);
    Ok(Search::new(&sys, start, limits).run(l, r).map_or_else(ProofResult::unproven, |steps| {
        ProofResult::provable(
            steps
                .into_iter()
                .map(|(rule, direction, position, word)| {
                    let eq = sys.rules[rule as usize].equation;
                    RewriteStep {
                        equation: eq,
                        label: schema.equations[eq].display_label(eq),
                        direction,
                        position,
                        result: sys.decode(start, &word),
                    }
                })
                .collect(),
        )
    }))
}

type Word = Vec<u32>;

struct Gen {
    name: String,
    /// `None` for attributes.
    target: Option<u32>,
}

struct Rule {
    equation: usize,
    start: u32,
    lhs: Word,
    rhs: Word,
}

/// Integer-coded view of a schema's generators and equations.
struct RewriteSystem {
    entities: BTreeMap<String, u32>,
    gens: Vec<Gen>,
    gen_index: BTreeMap<(u32, String), u32>,
    rules: Vec<Rule>,
}

impl RewriteSystem {
    fn compile(schema: &Schema) -> Self {
        let entities: BTreeMap<String, u32> =
            schema.entities.iter().enumerate().map(|(i, e)| (e.clone(), i as u32)).collect();
        let mut gens = Vec::new();
        let mut gen_index = BTreeMap::new();
        for f in &schema.fks {
            if let (Some(&s), Some(&t)) = (entities.get(&f.source), entities.get(&f.target)) {
                gen_index.entry((s, f.name.clone())).or_insert_with(|| {
                    gens.push(Gen { name: f.name.clone(), target: Some(t) });
                    (gens.len() - 1) as u32
                });
            }
        }
        for a in &schema.attrs {
            if let Some(&s) = entities.get(&a.source) {
                gen_index.entry((s, a.name.clone())).or_insert_with(|| {
                    gens.push(Gen { name: a.name.clone(), target: None });
                    (gens.len() - 1) as u32
                });
            }
        }
        let mut sys = RewriteSystem { entities, gens, gen_index, rules: Vec::new() };
        for (i, eq) in schema.equations.iter().enumerate() {
            // Ill-typed equations are skipped: proving with fewer equations stays sound.
            let ok = eq.lhs.start == eq.rhs.start
                && matches!((schema.codomain(&eq.lhs), schema.codomain(&eq.rhs)), (Ok(a), Ok(b)) if a == b);
            if !ok || eq.lhs == eq.rhs {
                continue;
            }
            let rule = Rule {
                equation: i,
                start: sys.entity(&eq.lhs.start),
                lhs: sys.encode(&eq.lhs),
                rhs: sys.encode(&eq.rhs),
            };
            sys.rules.push(rule);
        }
        sys
    }

    fn entity(&self, name: &str) -> u32 {
        self.entities[name]
    }

    /// Callers guarantee `path` type-checks.
    fn encode(&self, path: &Path) -> Word {
        let mut current = self.entity(&path.start);
        let mut out = Vec::with_capacity(path.steps.len());
        for step in &path.steps {
            let g = self.gen_index[&(current, step.clone())];
            out.push(g);
            if let Some(t) = self.gens[g as usize].target {
                current = t;
            }
        }
        out
    }

    fn decode(&self, start: u32, word: &[u32]) -> Path {
        let name = self.entities.iter().find(|(_, &i)| i == start).map(|(n, _)| n.clone()).unwrap_or_default();
        Path { start: name, steps: word.iter().map(|&g| self.gens[g as usize].name.clone()).collect() }
    }

    /// Entity at each offset `0..=len`; `None` after an attribute.
    fn sorts(&self, start: u32, word: &[u32], out: &mut Vec<Option<u32>>) {
        out.clear();
        let mut current = Some(start);
        out.push(current);
        for &g in word {
            current = self.gens[g as usize].target;
            out.push(current);
        }
    }

    fn neighbours(&self, start: u32, word: &[u32], sorts: &mut Vec<Option<u32>>, out: &mut Vec<(u32, Direction, usize, Word)>) {
        out.clear();
        self.sorts(start, word, sorts);
        for (ri, rule) in self.rules.iter().enumerate() {
            for dir in [Direction::LeftToRight, Direction::RightToLeft] {
                let (from, to) = match dir {
                    Direction::LeftToRight => (&rule.lhs, &rule.rhs),
                    Direction::RightToLeft => (&rule.rhs, &rule.lhs),
                };
                if from.len() > word.len() {
                    continue;
                }
                for pos in 0..=word.len() - from.len() {
                    if sorts[pos] != Some(rule.start) || word[pos..pos + from.len()] != from[..] {
                        continue;
                    }
                    let mut next = Vec::with_capacity(word.len() - from.len() + to.len());
                    next.extend_from_slice(&word[..pos]);
                    next.extend_from_slice(to);
                    next.extend_from_slice(&word[pos + from.len()..]);
                    out.push((ri as u32, dir, pos, next));
                }
            }
        }
    }
}

struct Node {
    word: Word,
    /// Parent node and the step that produced this node from it.
    parent: Option<(usize, u32, Direction, usize)>,
}

struct Tree {
    nodes: Vec<Node>,
    index: HashMap<Word, usize>,
    frontier: Vec<usize>,
    depth: usize,
}

impl Tree {
    fn new(root: Word) -> Self {
        let mut index = HashMap::new();
        index.insert(root.clone(), 0);
        Tree { nodes: alloc::vec![Node { word: root, parent: None }], index, frontier: alloc::vec![0], depth: 0 }
    }

    /// Steps from the root to `node`, in order.
    fn steps_to(&self, mut node: usize) -> Vec<(u32, Direction, usize, Word)> {
        let mut out = Vec::new();
        while let Some((p, rule, dir, pos)) = self.nodes[node].parent {
            out.push((rule, dir, pos, self.nodes[node].word.clone()));
            node = p;
        }
        out.reverse();
        out
    }
}

struct Search<'a> {
    sys: &'a RewriteSystem,
    start: u32,
    limits: ProverLimits,
}

impl<'a> Search<'a> {
    fn new(sys: &'a RewriteSystem, start: u32, limits: ProverLimits) -> Self {
        Search { sys, start, limits }
    }

    /// Returns the rewrite steps turning `lhs` into `rhs`, if found.
    fn run(&self, lhs: Word, rhs: Word) -> Option<Vec<(u32, Direction, usize, Word)>> {
        let mut fwd = Tree::new(lhs);
        let mut bwd = Tree::new(rhs);
        let mut sorts = Vec::new();
        let mut buf = Vec::new();
        let mut states = 2;
        while fwd.depth + bwd.depth < self.limits.depth_bound {
            let forward = fwd.frontier.len() <= bwd.frontier.len();
            let (grow, other) = if forward { (&mut fwd, &bwd) } else { (&mut bwd, &fwd) };
            if grow.frontier.is_empty() {
                return None;
            }
            let frontier = core::mem::take(&mut grow.frontier);
            let mut meet = None;
            'expand: for &n in &frontier {
                let word = grow.nodes[n].word.clone();
                self.sys.neighbours(self.start, &word, &mut sorts, &mut buf);
                for (rule, dir, pos, next) in buf.drain(..) {
                    if grow.index.contains_key(&next) {
                        continue;
                    }
                    let id = grow.nodes.len();
                    grow.index.insert(next.clone(), id);
                    let hit = other.index.get(&next).copied();
                    grow.nodes.push(Node { word: next, parent: Some((n, rule, dir, pos)) });
                    grow.frontier.push(id);
                    if let Some(o) = hit {
                        meet = Some((id, o));
                        break 'expand;
                    }
                    states += 1;
                    if states > self.limits.max_states {
                        return None;
                    }
                }
            }
            grow.depth += 1;
            if let Some((mine, theirs)) = meet {
                let (f_node, b_node) = if forward { (mine, theirs) } else { (theirs, mine) };
                return Some(self.join(&fwd, f_node, &bwd, b_node));
            }
        }
        None
    }

    fn join(&self, fwd: &Tree, f_node: usize, bwd: &Tree, b_node: usize) -> Vec<(u32, Direction, usize, Word)> {
        let mut steps = fwd.steps_to(f_node);
        // Walk back up the backward tree, inverting each step.
        let mut node = b_node;
        while let Some((p, rule, dir, pos)) = bwd.nodes[node].parent {
            steps.push((rule, dir.flip(), pos, bwd.nodes[p].word.clone()));
            node = p;
        }
        steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catcore::BaseType;

    fn schema_a() -> Schema {
        Schema::new("A")
            .entity("Reaction")
            .entity("Simulation")
            .fk("rev", "Reaction", "Reaction")
            .fk("sim", "Reaction", "Simulation")
            .fk("rds", "Simulation", "Reaction")
            .equation(Some("A1"), Path::new("Reaction", ["rev", "sim"]), Path::new("Reaction", ["sim"]))
            .equation(Some("A2"), Path::new("Simulation", ["rds", "sim"]), Path::identity("Simulation"))
            .equation(Some("A3"), Path::new("Reaction", ["rev", "rev"]), Path::identity("Reaction"))
    }

    #[test]
    fn involution_is_provable() {
        let s = schema_a();
        let lhs = Path::new("Reaction", ["rev", "rev"]);
        let rhs = Path::identity("Reaction");
        let r = decide_path_equality(&s, &lhs, &rhs, 64).unwrap();
        assert_eq!(r.verdict, Verdict::Provable);
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.trace[0].label, "A3");
        assert!(r.replay(&s, &lhs, &rhs));
    }

    #[test]
    fn reflexivity_has_empty_trace() {
        let s = schema_a();
        let p = Path::new("Reaction", ["rev", "sim", "rds"]);
        let r = decide_path_equality(&s, &p, &p, 1).unwrap();
        assert!(r.is_provable());
        assert!(r.trace.is_empty());
    }

    #[test]
    fn longer_chain() {
        let s = schema_a();
        // rev.rev.rev.sim = sim via A3 then A1
        let lhs = Path::new("Reaction", ["rev", "rev", "rev", "sim"]);
        let rhs = Path::new("Reaction", ["sim"]);
        let r = decide_path_equality(&s, &lhs, &rhs, 64).unwrap();
        assert!(r.is_provable());
        assert!(r.replay(&s, &lhs, &rhs));
        let r = decide_path_equality(&s, &lhs, &rhs, 1).unwrap();
        assert!(!r.is_provable());
    }

    #[test]
    fn unprovable_without_equation() {
        let s = Schema::new("C").entity("Reaction").fk("rev", "Reaction", "Reaction");
        let r = decide_path_equality(&s, &Path::new("Reaction", ["rev", "rev"]), &Path::identity("Reaction"), 64).unwrap();
        assert_eq!(r.verdict, Verdict::NotProvableWithinBound);
    }

    #[test]
    fn endpoint_mismatch_is_an_error() {
        let s = schema_a();
        let e = decide_path_equality(&s, &Path::new("Reaction", ["sim"]), &Path::identity("Reaction"), 8);
        assert!(matches!(e, Err(SchemaError::TypeMismatch { .. })));
    }

    #[test]
    fn attribute_equations() {
        let s = Schema::new("S")
            .entity("Structure")
            .entity("Species")
            .fk("gen", "Structure", "Species")
            .attr("kind", "Structure", BaseType::String)
            .attr("kind", "Species", BaseType::String)
            .equation(Some("k"), Path::new("Structure", ["gen", "kind"]), Path::new("Structure", ["kind"]));
        let r = decide_path_equality(&s, &Path::new("Structure", ["kind"]), &Path::new("Structure", ["gen", "kind"]), 4).unwrap();
        assert!(r.is_provable());
        assert_eq!(r.trace[0].direction, Direction::RightToLeft);
    }

    #[test]
    fn replay_rejects_forged_traces() {
        let s = schema_a();
        let lhs = Path::new("Reaction", ["rev", "rev"]);
        let rhs = Path::identity("Reaction");
        let mut r = decide_path_equality(&s, &lhs, &rhs, 64).unwrap();
        r.trace[0].position = 1;
        assert!(!r.replay(&s, &lhs, &rhs));
    }
}
