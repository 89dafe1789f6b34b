use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use super::MigrateError;
use crate::instance::{Instance, Literal, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub attr: String,
    pub op: CmpOp,
    pub value: Literal,
}

/// Conjunction of attribute comparisons on one entity.
#[derive(Clone, Debug, PartialEq)]
pub struct Predicate {
    pub entity: String,
    pub clauses: Vec<Clause>,
}

impl Predicate {
    pub fn new(entity: &str) -> Self {
        Predicate { entity: entity.into(), clauses: Vec::new() }
    }

    pub fn and(mut self, attr: &str, op: CmpOp, value: Literal) -> Self {
        self.clauses.push(Clause { attr: attr.into(), op, value });
        self
    }
}

/// Keeps the rows of `pred.entity` that satisfy `pred`.
///
/// A clause over a null or a symbolic value is false. Failing rows still
/// referenced from a kept row survive, so the result stays referentially
/// closed; rows elsewhere that point at a dropped row are dropped too.
pub fn filter(inst: &Instance, pred: &Predicate) -> Result<Instance, MigrateError> {
    let schema = inst.schema();
    let e = schema.entity_index(&pred.entity).ok_or_else(|| MigrateError::UnknownEntity(pred.entity.clone()))?;
    let mut cols = Vec::with_capacity(pred.clauses.len());
    for c in &pred.clauses {
        let a = schema.attr_index(&pred.entity, &c.attr).ok_or_else(|| MigrateError::UnknownAttribute {
            entity: pred.entity.clone(),
            attribute: c.attr.clone(),
        })?;
        cols.push(a);
    }

    let n_ent = schema.entities.len();
    let fk_src: Vec<usize> = schema.fks.iter().map(|f| schema.entity_index(&f.source).unwrap()).collect();
    let fk_tgt: Vec<usize> = schema.fks.iter().map(|f| schema.entity_index(&f.target).unwrap()).collect();

    let matches = |r: usize| {
        pred.clauses.iter().zip(&cols).all(|(c, &a)| match inst.values().literal(inst.attr_cols[a][r]) {
            Some(l) if l.ty() == c.value.ty() => c.op.holds(l.cmp(&c.value)),
            _ => false,
        })
    };

    // rows reachable from the matching ones must stay
    let mut protected: Vec<Vec<bool>> = (0..n_ent).map(|x| vec![false; inst.tables[x].len()]).collect();
    let mut stack: Vec<(usize, usize)> = (0..inst.tables[e].len()).filter(|&r| matches(r)).map(|r| (e, r)).collect();
    while let Some((x, r)) = stack.pop() {
        if core::mem::replace(&mut protected[x][r], true) {
            continue;
        }
        for (f, &s) in fk_src.iter().enumerate() {
            if s == x {
                stack.push((fk_tgt[f], inst.fk_cols[f][r]));
            }
        }
    }

    let mut keep: Vec<Vec<bool>> = (0..n_ent).map(|x| vec![true; inst.tables[x].len()]).collect();
    for (r, k) in keep[e].iter_mut().enumerate() {
        *k = protected[e][r];
    }
    // cascade: drop whatever points at a dropped row
    loop {
        let mut changed = false;
        for (f, (&s, &t)) in fk_src.iter().zip(&fk_tgt).enumerate() {
            for r in 0..inst.tables[s].len() {
                if keep[s][r] && !keep[t][inst.fk_cols[f][r]] {
                    keep[s][r] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut remap: Vec<Vec<usize>> = Vec::with_capacity(n_ent);
    let mut tables = Vec::with_capacity(n_ent);
    for x in 0..n_ent {
        let mut table = Table::default();
        let mut idx = vec![usize::MAX; inst.tables[x].len()];
        for r in 0..inst.tables[x].len() {
            if keep[x][r] {
                idx[r] = table.push(inst.tables[x].ids[r].clone(), inst.tables[x].lineage[r].clone());
            }
        }
        remap.push(idx);
        tables.push(table);
    }
    let fk_cols = (0..schema.fks.len())
        .map(|f| {
            (0..inst.tables[fk_src[f]].len())
                .filter(|&r| keep[fk_src[f]][r])
                .map(|r| remap[fk_tgt[f]][inst.fk_cols[f][r]])
                .collect()
        })
        .collect();
    let attr_cols = schema
        .attrs
        .iter()
        .enumerate()
        .map(|(a, at)| {
            let x = schema.entity_index(&at.source).unwrap();
            (0..inst.tables[x].len()).filter(|&r| keep[x][r]).map(|r| inst.attr_cols[a][r]).collect()
        })
        .collect();
    Ok(Instance { schema: schema.clone(), tables, fk_cols, attr_cols, values: inst.values.clone() })
}
