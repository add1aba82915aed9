//! String graph rewrite rules and concrete double-pushout rewriting.

mod bangbox;
mod rules;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::data::Substitution;
use crate::stringgraph::{verify_matching, Edge, MatchError, Matching, StringGraph, VertexId};

pub use bangbox::{bb_instantiate, BangBox, BangOp};
pub use rules::{
    eval_template, goal_list_rule, make_eval_rule, make_merge_rule, merge_fusion_rule, EVAL_GOAL, EVAL_INPUT,
    EVAL_TACTIC,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("invalid matching: {0}")]
    InvalidMatch(#[from] MatchError),
    #[error("free variables remain after substitution: {0:?}")]
    PartialInstantiation(Vec<String>),
    #[error("sides of the rule do not share a boundary: {0}")]
    BoundaryMismatch(String),
    #[error("no !-box named {0}")]
    UnknownBangBox(String),
    #[error("!-box {0} has no counterpart on the other side")]
    MismatchedCorrespondence(String),
}

/// A rule `L ~> R`. Both sides share their boundary by vertex id; a vertex
/// of `R`'s interior with the same id as one of `L`'s interior is carried
/// over to the same host vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteRule {
    pub name: String,
    pub lhs: StringGraph,
    pub rhs: StringGraph,
    pub lhs_boxes: Vec<BangBox>,
    pub rhs_boxes: Vec<BangBox>,
}

impl RewriteRule {
    pub fn new(name: impl Into<String>, lhs: StringGraph, rhs: StringGraph) -> Result<Self, RewriteError> {
        let rule = RewriteRule { name: name.into(), lhs, rhs, lhs_boxes: vec![], rhs_boxes: vec![] };
        rule.validate()?;
        Ok(rule)
    }

    /// Inputs map to inputs and outputs to outputs, with equal wire data.
    pub fn validate(&self) -> Result<(), RewriteError> {
        let (li, lo) = (self.lhs.inputs(), self.lhs.outputs());
        let (ri, ro) = (self.rhs.inputs(), self.rhs.outputs());
        if li != ri {
            return Err(RewriteError::BoundaryMismatch(format!("inputs {li:?} vs {ri:?}")));
        }
        if lo != ro {
            return Err(RewriteError::BoundaryMismatch(format!("outputs {lo:?} vs {ro:?}")));
        }
        for v in li.union(&lo) {
            if self.lhs.wire_type(v) != self.rhs.wire_type(v) {
                return Err(RewriteError::BoundaryMismatch(format!("wire type of {v}")));
            }
        }
        Ok(())
    }

    pub fn reversed(&self) -> RewriteRule {
        RewriteRule {
            name: format!("{}^-1", self.name),
            lhs: self.rhs.clone(),
            rhs: self.lhs.clone(),
            lhs_boxes: self.rhs_boxes.clone(),
            rhs_boxes: self.lhs_boxes.clone(),
        }
    }

    pub fn boundary(&self) -> BTreeSet<VertexId> {
        self.lhs.boundary()
    }
}

/// The rewritten graph plus the matching of the instantiated `R` into it.
#[derive(Clone, Debug)]
pub struct Rewritten {
    pub graph: StringGraph,
    pub comatch: Matching,
}

/// Rewrites `g` at `m`.
///
/// `m` must match `lhs` (its own substitution is combined with `subst`).
/// 1. Both sides are instantiated and `R`'s interior is renamed fresh.
/// 2. The image of `L`'s interior and of every `L` edge is deleted.
/// 3. `R` is glued in along the boundary.
pub fn apply_rewrite(
    g: &StringGraph,
    rule: &RewriteRule,
    m: &Matching,
    subst: &Substitution,
) -> Result<Rewritten, RewriteError> {
    let s = m.subst.union(subst);
    let lhs = rule.lhs.substitute(&s);
    let rhs = rule.rhs.substitute(&s);
    let free: Vec<String> = rhs.free_vars().into_iter().collect();
    if !free.is_empty() {
        return Err(RewriteError::PartialInstantiation(free));
    }
    let ground = Matching { vertices: m.vertices.clone(), edges: m.edges.clone(), subst: Substitution::new() };
    verify_matching(&lhs, g, &ground)?;

    let interior = lhs.interior_vertices();
    let mut out = g.clone();
    let doomed: BTreeSet<usize> = m.edges.values().copied().collect();
    out.remove_edges(&doomed);
    for v in &interior {
        out.remove_vertex(&m.vertices[v]);
    }

    let mut placed: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    for v in rhs.boundary() {
        placed.insert(v.clone(), m.vertices[&v].clone());
    }
    for v in rhs.interior_vertices() {
        let id = match m.vertices.get(&v) {
            Some(host) if interior.contains(&v) => host.clone(),
            _ => out.fresh_id(v.base()),
        };
        out.add_vertex(id.clone(), rhs.vertex(&v).cloned().expect("rhs vertex"));
        placed.insert(v, id);
    }

    let mut edges = BTreeMap::new();
    let base = out.edge_count();
    for (i, e) in rhs.edges().iter().enumerate() {
        out.push_edge(Edge {
            source: placed[&e.source].clone(),
            target: placed[&e.target].clone(),
            port: e.port.clone(),
        });
        edges.insert(i, base + i);
    }
    Ok(Rewritten { graph: out, comatch: Matching { vertices: placed, edges, subst: s } })
}
