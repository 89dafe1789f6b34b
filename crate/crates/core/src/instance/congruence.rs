//! Congruence closure over attribute values.
//!
//! Every literal, labelled null and function application seen by an
//! instance is a node. Nodes are grouped into classes by a union-find; a
//! class holds at most one literal, and two applications of the same
//! function to equal arguments are always in the same class. An application
//! whose arguments all have literal values is evaluated and joined with the
//! resulting literal.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::value::{Literal, Value};
use super::InstanceError;
use crate::catcore::BaseType;
use crate::udf::UdfRegistry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    Lit(Literal),
    Null(String, BaseType),
    App(String, Vec<NodeId>),
}

#[derive(Clone, Debug, Default)]
pub struct Congruence {
    nodes: Vec<Node>,
    parent: Vec<u32>,
    size: Vec<u32>,
    /// Literal member of each root's class.
    lit: Vec<Option<NodeId>>,
    /// Preferred member for display: literal, then oldest null, then oldest term.
    best: Vec<u32>,
    lits: BTreeMap<Literal, NodeId>,
    nulls: BTreeMap<String, NodeId>,
    app_memo: BTreeMap<(String, Vec<NodeId>), NodeId>,
    apps: Vec<NodeId>,
}

impl Congruence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, node: Node) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        let is_lit = matches!(node, Node::Lit(_));
        self.nodes.push(node);
        self.parent.push(id.0);
        self.size.push(1);
        self.lit.push(is_lit.then_some(id));
        self.best.push(id.0);
        id
    }

    pub fn intern_lit(&mut self, l: &Literal) -> NodeId {
        if let Some(&id) = self.lits.get(l) {
            return id;
        }
        let id = self.push(Node::Lit(l.clone()));
        self.lits.insert(l.clone(), id);
        id
    }

    /// Same label, same null.
    pub fn intern_null(&mut self, label: &str, ty: BaseType) -> NodeId {
        if let Some(&id) = self.nulls.get(label) {
            return id;
        }
        let id = self.push(Node::Null(label.into(), ty));
        self.nulls.insert(label.into(), id);
        id
    }

    /// Interns an application; call [`close`](Self::close) before comparing.
    pub fn intern_app_raw(&mut self, func: &str, args: Vec<NodeId>) -> NodeId {
        let key = (String::from(func), args);
        if let Some(&id) = self.app_memo.get(&key) {
            return id;
        }
        let id = self.push(Node::App(key.0.clone(), key.1.clone()));
        self.app_memo.insert(key, id);
        self.apps.push(id);
        id
    }

    fn intern_raw(&mut self, v: &Value) -> NodeId {
        match v {
            Value::Lit(l) => self.intern_lit(l),
            Value::Null { label, ty } => self.intern_null(label, *ty),
            Value::Term { func, args } => {
                let args = args.iter().map(|a| self.intern_raw(a)).collect();
                self.intern_app_raw(func, args)
            }
        }
    }

    /// Interns `v` and restores the closure invariants.
    pub fn intern(&mut self, v: &Value, udfs: &UdfRegistry) -> Result<NodeId, InstanceError> {
        let id = self.intern_raw(v);
        if matches!(v, Value::Term { .. }) {
            self.close(udfs)?;
        }
        Ok(id)
    }

    pub fn has_null(&self, label: &str) -> bool {
        self.nulls.contains_key(label)
    }

    pub fn null_labels(&self) -> impl Iterator<Item = &str> {
        self.nulls.keys().map(String::as_str)
    }

    pub fn find(&self, id: NodeId) -> NodeId {
        let mut x = id.0;
        while self.parent[x as usize] != x {
            x = self.parent[x as usize];
        }
        NodeId(x)
    }

    pub fn equal(&self, a: NodeId, b: NodeId) -> bool {
        self.find(a) == self.find(b)
    }

    /// The literal value of `id`'s class, if it has one.
    pub fn literal(&self, id: NodeId) -> Option<&Literal> {
        let root = self.find(id);
        self.lit[root.index()].map(|l| match &self.nodes[l.index()] {
            Node::Lit(l) => l,
            _ => unreachable!("literal slot holds a literal node"),
        })
    }

    fn rank(&self, id: u32) -> (u8, u32) {
        let kind = match self.nodes[id as usize] {
            Node::Lit(_) => 0,
            Node::Null(..) => 1,
            Node::App(..) => 2,
        };
        (kind, id)
    }

    /// Joins two classes without re-establishing congruence.
    fn union_raw(&mut self, a: NodeId, b: NodeId) -> Result<bool, InstanceError> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(false);
        }
        let (la, lb) = (self.lit[ra.index()], self.lit[rb.index()]);
        if let (Some(x), Some(y)) = (la, lb) {
            let (Node::Lit(x), Node::Lit(y)) = (&self.nodes[x.index()], &self.nodes[y.index()]) else {
                unreachable!()
            };
            return Err(InstanceError::Contradiction { left: x.clone(), right: y.clone() });
        }
        let (big, small) = if self.size[ra.index()] >= self.size[rb.index()] { (ra, rb) } else { (rb, ra) };
        self.parent[small.index()] = big.0;
        self.size[big.index()] += self.size[small.index()];
        self.lit[big.index()] = la.or(lb);
        let (ba, bb) = (self.best[big.index()], self.best[small.index()]);
        self.best[big.index()] = if self.rank(ba) <= self.rank(bb) { ba } else { bb };
        Ok(true)
    }

    /// Joins the classes of `a` and `b` and propagates congruence.
    ///
    /// Fails with [`InstanceError::Contradiction`] when two different
    /// literals would end up in one class; the structure is then left in an
    /// unspecified state, so callers work on a copy.
    pub fn union(&mut self, a: NodeId, b: NodeId, udfs: &UdfRegistry) -> Result<bool, InstanceError> {
        let changed = self.union_raw(a, b)?;
        if changed && !self.apps.is_empty() {
            self.close(udfs)?;
        }
        Ok(changed)
    }

    /// Re-establishes congruence and evaluates fully-literal applications.
    /// Idempotent.
    pub fn close(&mut self, udfs: &UdfRegistry) -> Result<(), InstanceError> {
        loop {
            let mut changed = false;
            let mut sigs: BTreeMap<(String, Vec<NodeId>), NodeId> = BTreeMap::new();
            let apps = self.apps.clone();
            for app in apps {
                let Node::App(func, args) = &self.nodes[app.index()] else { unreachable!() };
                let func = func.clone();
                let canon: Vec<NodeId> = args.iter().map(|&a| self.find(a)).collect();
                if self.lit[self.find(app).index()].is_none() && udfs.contains(&func) {
                    let lits: Option<Vec<Literal>> = canon.iter().map(|&a| self.literal(a).cloned()).collect();
                    if let Some(lits) = lits {
                        let value = udfs.eval(&func, &lits).map_err(InstanceError::Udf)?;
                        let l = self.intern_lit(&value);
                        changed |= self.union_raw(app, l)?;
                    }
                }
                match sigs.get(&(func.clone(), canon.clone())) {
                    Some(&other) => changed |= self.union_raw(app, other)?,
                    None => {
                        sigs.insert((func, canon), app);
                    }
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }

    /// The display form of `id`'s class.
    pub fn value(&self, id: NodeId) -> Value {
        let best = self.best[self.find(id).index()];
        match &self.nodes[best as usize] {
            Node::Lit(l) => Value::Lit(l.clone()),
            Node::Null(label, ty) => Value::Null { label: label.clone(), ty: *ty },
            // Arguments were interned before the application and a class
            // without nulls or literals displays its oldest term, so this
            // recursion strictly descends in node id.
            Node::App(func, args) => Value::Term { func: func.clone(), args: args.iter().map(|&a| self.value(a)).collect() },
        }
    }

    /// Finds the class of an already-interned value, matching terms up to
    /// congruence.
    pub fn lookup(&self, v: &Value) -> Option<NodeId> {
        match v {
            Value::Lit(l) => self.lits.get(l).copied(),
            Value::Null { label, .. } => self.nulls.get(label).copied(),
            Value::Term { func, args } => {
                let want: Option<Vec<NodeId>> = args.iter().map(|a| self.lookup(a).map(|n| self.find(n))).collect();
                let want = want?;
                self.apps.iter().copied().find(|&app| match &self.nodes[app.index()] {
                    Node::App(f, a) => f == func && a.len() == want.len() && a.iter().zip(&want).all(|(&x, &y)| self.find(x) == y),
                    _ => false,
                })
            }
        }
    }

    /// Copies every node and equality of `other` into `self`. Null labels
    /// pass through `rename`. Returns the image of each node of `other`.
    pub fn import(
        &mut self,
        other: &Congruence,
        mut rename: impl FnMut(&str) -> String,
        udfs: &UdfRegistry,
    ) -> Result<Vec<NodeId>, InstanceError> {
        let mut map: Vec<NodeId> = Vec::with_capacity(other.nodes.len());
        for node in &other.nodes {
            let id = match node {
                Node::Lit(l) => self.intern_lit(l),
                Node::Null(label, ty) => {
                    let label = rename(label);
                    self.intern_null(&label, *ty)
                }
                Node::App(func, args) => {
                    let args = args.iter().map(|a| map[a.index()]).collect();
                    self.intern_app_raw(func, args)
                }
            };
            map.push(id);
        }
        for i in 0..other.nodes.len() {
            let root = other.find(NodeId(i as u32));
            self.union_raw(map[i], map[root.index()])?;
        }
        self.close(udfs)?;
        Ok(map)
    }

    /// Members of every class with more than one node, for inspection.
    pub fn classes(&self) -> Vec<Vec<Value>> {
        let mut by_root: BTreeMap<NodeId, Vec<Value>> = BTreeMap::new();
        for i in 0..self.nodes.len() {
            let id = NodeId(i as u32);
            by_root.entry(self.find(id)).or_default().push(self.node_value(id));
        }
        by_root.into_values().filter(|c| c.len() > 1).collect()
    }

    /// The node itself (not its class representative) as a value.
    fn node_value(&self, id: NodeId) -> Value {
        match &self.nodes[id.index()] {
            Node::Lit(l) => Value::Lit(l.clone()),
            Node::Null(label, ty) => Value::Null { label: label.clone(), ty: *ty },
            Node::App(func, args) => Value::Term { func: func.clone(), args: args.iter().map(|&a| self.node_value(a)).collect() },
        }
    }

    /// Every node as written, for oracles that re-derive the closure.
    pub fn node_values(&self) -> Vec<Value> {
        (0..self.nodes.len()).map(|i| self.node_value(NodeId(i as u32))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn null(l: &str) -> Value {
        Value::null(l, BaseType::String)
    }

    #[test]
    fn literal_contradiction() {
        let udfs = UdfRegistry::new();
        let mut c = Congruence::new();
        let a = c.intern(&null("a"), &udfs).unwrap();
        let five = c.intern(&Value::int(5), &udfs).unwrap();
        let six = c.intern(&Value::int(6), &udfs).unwrap();
        c.union(a, five, &udfs).unwrap();
        assert!(matches!(c.union(a, six, &udfs), Err(InstanceError::Contradiction { .. })));
    }

    #[test]
    fn congruent_terms_merge() {
        let udfs = UdfRegistry::with_builtins();
        let mut c = Congruence::new();
        let t1 = c.intern(&Value::Term { func: "concat".into(), args: vec![null("a"), Value::str("x")] }, &udfs).unwrap();
        let t2 = c.intern(&Value::Term { func: "concat".into(), args: vec![null("b"), Value::str("x")] }, &udfs).unwrap();
        assert!(!c.equal(t1, t2));
        let a = c.lookup(&null("a")).unwrap();
        let b = c.lookup(&null("b")).unwrap();
        c.union(a, b, &udfs).unwrap();
        assert!(c.equal(t1, t2));
    }

    #[test]
    fn substitution_evaluates_terms() {
        let udfs = UdfRegistry::with_builtins();
        let mut c = Congruence::new();
        let t = c.intern(&Value::Term { func: "parse_int".into(), args: vec![null("a")] }, &udfs).unwrap();
        let a = c.lookup(&null("a")).unwrap();
        let lit = c.intern(&Value::str("42"), &udfs).unwrap();
        c.union(a, lit, &udfs).unwrap();
        assert_eq!(c.literal(t), Some(&Literal::Int(42)));
        assert_eq!(c.value(t), Value::int(42));
    }

    #[test]
    fn display_prefers_literals_then_old_nulls() {
        let udfs = UdfRegistry::new();
        let mut c = Congruence::new();
        let a = c.intern(&null("a"), &udfs).unwrap();
        let b = c.intern(&null("b"), &udfs).unwrap();
        c.union(b, a, &udfs).unwrap();
        assert_eq!(c.value(b), null("a"));
        let s = c.intern(&Value::str("s"), &udfs).unwrap();
        c.union(s, b, &udfs).unwrap();
        assert_eq!(c.value(a), Value::str("s"));
    }
}
