use std::collections::{BTreeMap, BTreeSet};

use super::{RewriteError, RewriteRule};
use crate::stringgraph::{Edge, StringGraph, VertexId};

/// A marked region of one side of a rule standing for any number of copies.
/// Variables in `fresh` are renamed in each copy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BangBox {
    pub name: String,
    pub contents: BTreeSet<VertexId>,
    pub fresh: BTreeSet<String>,
    /// Number of copies made so far; drives the copy suffixes.
    pub copies: usize,
}

impl BangBox {
    pub fn new(name: impl Into<String>, contents: impl IntoIterator<Item = VertexId>, fresh: &[&str]) -> Self {
        BangBox {
            name: name.into(),
            contents: contents.into_iter().collect(),
            fresh: fresh.iter().map(|s| s.to_string()).collect(),
            copies: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BangOp {
    /// Adds one unboxed copy of the contents, leaving the box in place.
    Copy(String),
    /// Deletes the box and its contents.
    Drop(String),
    /// Deletes the box, keeping its contents.
    Kill(String),
    /// Replaces the two boxes by one holding both contents.
    Merge(String, String),
}

/// Applies `ops` to the named boxes of both sides of `rule` in lockstep.
pub fn bb_instantiate(rule: &RewriteRule, ops: &[BangOp]) -> Result<RewriteRule, RewriteError> {
    let mut r = rule.clone();
    for op in ops {
        let names: Vec<&String> = match op {
            BangOp::Copy(n) | BangOp::Drop(n) | BangOp::Kill(n) => vec![n],
            BangOp::Merge(a, b) => vec![a, b],
        };
        for n in &names {
            let in_l = r.lhs_boxes.iter().any(|b| &&b.name == n);
            let in_r = r.rhs_boxes.iter().any(|b| &&b.name == n);
            match (in_l, in_r) {
                (false, false) => return Err(RewriteError::UnknownBangBox((*n).clone())),
                (true, true) => {}
                _ => return Err(RewriteError::MismatchedCorrespondence((*n).clone())),
            }
        }
        apply_op(&mut r.lhs, &mut r.lhs_boxes, op);
        apply_op(&mut r.rhs, &mut r.rhs_boxes, op);
    }
    Ok(r)
}

fn apply_op(g: &mut StringGraph, boxes: &mut Vec<BangBox>, op: &BangOp) {
    let pos = |boxes: &[BangBox], n: &str| boxes.iter().position(|b| b.name == n).expect("checked");
    match op {
        BangOp::Copy(n) => {
            let i = pos(boxes, n);
            boxes[i].copies += 1;
            let b = boxes[i].clone();
            copy_contents(g, &b, &format!("_{}", b.copies));
        }
        BangOp::Drop(n) => {
            let b = boxes.remove(pos(boxes, n));
            for v in &b.contents {
                g.remove_vertex(v);
            }
        }
        BangOp::Kill(n) => {
            boxes.remove(pos(boxes, n));
        }
        BangOp::Merge(a, b) => {
            let other = boxes.remove(pos(boxes, b));
            let i = pos(boxes, a);
            boxes[i].contents.extend(other.contents);
            boxes[i].fresh.extend(other.fresh);
            boxes[i].copies = boxes[i].copies.max(other.copies);
        }
    }
}

/// Copies the contents of `b` with vertex ids and fresh variables suffixed.
/// Edges leaving the box are copied too, attached to the same outside vertex.
fn copy_contents(g: &mut StringGraph, b: &BangBox, suffix: &str) {
    let ids: BTreeMap<VertexId, VertexId> =
        b.contents.iter().map(|v| (v.clone(), VertexId::new(format!("{v}{suffix}")))).collect();
    let rename = |x: &str| b.fresh.contains(x).then(|| format!("{x}{suffix}"));
    let region = g.induced(&b.contents).rename_vars(&rename);
    for (v, k) in region.vertices() {
        g.add_vertex(ids[v].clone(), k.clone());
    }
    let copied: Vec<Edge> = g
        .edges()
        .iter()
        .filter(|e| b.contents.contains(&e.source) || b.contents.contains(&e.target))
        .map(|e| {
            let port = e.port.clone().map(|mut p| {
                p.index = p.index.rename_vars(&rename);
                p
            });
            let end = |v: &VertexId| ids.get(v).cloned().unwrap_or_else(|| v.clone());
            Edge { source: end(&e.source), target: end(&e.target), port }
        })
        .collect();
    for e in copied {
        g.push_edge(e);
    }
}
