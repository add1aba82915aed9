//! Injective, data-preserving matchings of a pattern graph into a host graph.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{Edge, NodeData, Port, StringGraph, VertexId, VertexKind};
use crate::data::Substitution;

/// A matching `m: L -> G`: a vertex map, an edge map (by edge index) and the
/// substitution that unifies the data of `L` against `G`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub vertices: BTreeMap<VertexId, VertexId>,
    pub edges: BTreeMap<usize, usize>,
    pub subst: Substitution,
}

impl Matching {
    pub fn image(&self, v: &VertexId) -> Option<&VertexId> {
        self.vertices.get(v)
    }

    pub fn image_vertices(&self) -> BTreeSet<VertexId> {
        self.vertices.values().cloned().collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("pattern vertex {0} is not mapped")]
    Unmapped(VertexId),
    #[error("pattern vertex {0} maps to a vertex missing from the host")]
    MissingImage(VertexId),
    #[error("vertices {0} and {1} share an image")]
    NotInjective(VertexId, VertexId),
    #[error("data of pattern vertex {0} does not agree with its image")]
    DataMismatch(VertexId),
    #[error("pattern edge {0} is not mapped onto a matching host edge")]
    EdgeMismatch(usize),
    #[error("host edge {0} is the image of two pattern edges")]
    EdgeNotInjective(usize),
    #[error("host edge {edge} touches the interior image of {vertex} from outside the match")]
    Boundary { vertex: VertexId, edge: usize },
}

/// All matchings of `pattern` into `host`.
pub fn find_matchings(pattern: &StringGraph, host: &StringGraph) -> Vec<Matching> {
    find_matchings_seeded(pattern, host, &[], usize::MAX)
}

/// The first matching (in search order) extending `seed`, if any.
pub fn find_first_matching(
    pattern: &StringGraph,
    host: &StringGraph,
    seed: &[(VertexId, VertexId)],
) -> Option<Matching> {
    find_matchings_seeded(pattern, host, seed, 1).into_iter().next()
}

/// Matchings that extend the partial vertex assignment `seed`, at most
/// `limit` of them.
pub fn find_matchings_seeded(
    pattern: &StringGraph,
    host: &StringGraph,
    seed: &[(VertexId, VertexId)],
    limit: usize,
) -> Vec<Matching> {
    let order = search_order(pattern, seed);
    let interior = pattern.interior_vertices();
    let mut search = Search {
        pattern,
        host,
        order,
        interior,
        seed: seed.iter().cloned().collect(),
        vertices: BTreeMap::new(),
        used: BTreeSet::new(),
        edges: BTreeMap::new(),
        used_edges: BTreeSet::new(),
        results: Vec::new(),
        limit,
    };
    if limit > 0 {
        search.place(0, Substitution::new());
    }
    search.results
}

/// Seeds first, then a traversal that prefers vertices adjacent to ones
/// already placed.
fn search_order(pattern: &StringGraph, seed: &[(VertexId, VertexId)]) -> Vec<VertexId> {
    let mut order: Vec<VertexId> = Vec::new();
    let mut placed: BTreeSet<VertexId> = BTreeSet::new();
    for (v, _) in seed {
        if pattern.contains(v) && placed.insert(v.clone()) {
            order.push(v.clone());
        }
    }
    while placed.len() < pattern.vertex_count() {
        let next = pattern
            .vertex_ids()
            .filter(|v| !placed.contains(*v))
            .find(|v| pattern.incident(v).any(|(_, e)| placed.contains(&e.source) || placed.contains(&e.target)))
            .or_else(|| pattern.vertex_ids().find(|v| !placed.contains(*v)))
            .cloned()
            .expect("unplaced vertex exists");
        placed.insert(next.clone());
        order.push(next);
    }
    order
}

struct Search<'a> {
    pattern: &'a StringGraph,
    host: &'a StringGraph,
    order: Vec<VertexId>,
    interior: BTreeSet<VertexId>,
    seed: BTreeMap<VertexId, VertexId>,
    vertices: BTreeMap<VertexId, VertexId>,
    used: BTreeSet<VertexId>,
    edges: BTreeMap<usize, usize>,
    used_edges: BTreeSet<usize>,
    results: Vec<Matching>,
    limit: usize,
}

impl Search<'_> {
    fn done(&self) -> bool {
        self.results.len() >= self.limit
    }

    fn candidates(&self, v: &VertexId) -> Vec<VertexId> {
        if let Some(s) = self.seed.get(v) {
            return vec![s.clone()];
        }
        // Follow an edge from an already placed neighbour when there is one.
        for (_, e) in self.pattern.incident(v) {
            if e.source == *v && e.target != *v {
                if let Some(t) = self.vertices.get(&e.target) {
                    return self.host.in_edges(t).map(|(_, he)| he.source.clone()).collect();
                }
            } else if e.target == *v && e.source != *v {
                if let Some(s) = self.vertices.get(&e.source) {
                    return self.host.out_edges(s).map(|(_, he)| he.target.clone()).collect();
                }
            }
        }
        self.host.vertex_ids().cloned().collect()
    }

    fn place(&mut self, depth: usize, subst: Substitution) {
        if self.done() {
            return;
        }
        let Some(v) = self.order.get(depth).cloned() else {
            self.results.push(Matching {
                vertices: self.vertices.clone(),
                edges: self.edges.clone(),
                subst,
            });
            return;
        };
        let pk = self.pattern.vertex(&v).expect("ordered vertex exists");
        let mut cands = self.candidates(&v);
        cands.sort();
        cands.dedup();
        for c in cands {
            if self.used.contains(&c) {
                continue;
            }
            let Some(hk) = self.host.vertex(&c) else { continue };
            let mut s = subst.clone();
            if !unify_kind(&mut s, pk, hk) {
                continue;
            }
            if self.interior.contains(&v) {
                let deg_l = self.pattern.incident(&v).count();
                let deg_g = self.host.incident(&c).count();
                if deg_l != deg_g {
                    continue;
                }
            }
            self.vertices.insert(v.clone(), c.clone());
            self.used.insert(c.clone());
            let pending: Vec<usize> = self
                .pattern
                .incident(&v)
                .filter(|(_, e)| self.vertices.contains_key(&e.source) && self.vertices.contains_key(&e.target))
                .map(|(i, _)| i)
                .collect();
            self.place_edges(depth, &pending, 0, s);
            self.used.remove(&c);
            self.vertices.remove(&v);
            if self.done() {
                return;
            }
        }
    }

    fn place_edges(&mut self, depth: usize, pending: &[usize], k: usize, subst: Substitution) {
        if self.done() {
            return;
        }
        let Some(&li) = pending.get(k) else {
            self.place(depth + 1, subst);
            return;
        };
        let le = &self.pattern.edges()[li];
        let hs = self.vertices[&le.source].clone();
        let ht = self.vertices[&le.target].clone();
        let cands: Vec<usize> = self
            .host
            .out_edges(&hs)
            .filter(|(hi, he)| he.target == ht && !self.used_edges.contains(hi))
            .map(|(hi, _)| hi)
            .collect();
        for hi in cands {
            let mut s = subst.clone();
            if !unify_port(&mut s, &le.port, &self.host.edges()[hi].port) {
                continue;
            }
            self.edges.insert(li, hi);
            self.used_edges.insert(hi);
            self.place_edges(depth, pending, k + 1, s);
            self.used_edges.remove(&hi);
            self.edges.remove(&li);
            if self.done() {
                return;
            }
        }
    }
}

fn unify_kind(s: &mut Substitution, p: &VertexKind, h: &VertexKind) -> bool {
    match (p, h) {
        (VertexKind::Wire(a), VertexKind::Wire(b)) => s.match_datum(a, b),
        (VertexKind::Node(NodeData::Merge), VertexKind::Node(NodeData::Merge)) => true,
        (VertexKind::Node(NodeData::Tactic(a)), VertexKind::Node(NodeData::Tactic(b))) => s.match_datum(a, b),
        (VertexKind::Node(NodeData::Goals(a)), VertexKind::Node(NodeData::Goals(b))) => s.match_datum(a, b),
        _ => false,
    }
}

fn unify_port(s: &mut Substitution, p: &Option<Port>, h: &Option<Port>) -> bool {
    match (p, h) {
        (None, None) => true,
        (Some(p), Some(h)) => p.dir == h.dir && s.match_datum(&p.index, &h.index),
        _ => false,
    }
}

fn same_port(s: &Substitution, p: &Option<Port>, h: &Option<Port>) -> bool {
    match (p, h) {
        (None, None) => true,
        (Some(p), Some(h)) => p.dir == h.dir && s.apply(&p.index) == h.index,
        _ => false,
    }
}

/// Checks a matching from first principles: totality, injectivity on
/// vertices and edges, data and structure preservation under `m.subst`, and
/// the boundary condition that no host edge outside the match touches the
/// image of the pattern's interior.
pub fn verify_matching(pattern: &StringGraph, host: &StringGraph, m: &Matching) -> Result<(), MatchError> {
    let mut seen: BTreeMap<&VertexId, &VertexId> = BTreeMap::new();
    for (v, pk) in pattern.vertices() {
        let img = m.vertices.get(v).ok_or_else(|| MatchError::Unmapped(v.clone()))?;
        let hk = host.vertex(img).ok_or_else(|| MatchError::MissingImage(v.clone()))?;
        if let Some(prev) = seen.insert(img, v) {
            return Err(MatchError::NotInjective(prev.clone(), v.clone()));
        }
        let pk_inst = {
            let mut g = StringGraph::new();
            g.add_vertex(v.clone(), pk.clone());
            g.substitute(&m.subst).vertex(v).cloned().expect("just inserted")
        };
        if &pk_inst != hk {
            return Err(MatchError::DataMismatch(v.clone()));
        }
    }

    let mut edge_images: BTreeSet<usize> = BTreeSet::new();
    for (li, le) in pattern.edges().iter().enumerate() {
        let hi = *m.edges.get(&li).ok_or(MatchError::EdgeMismatch(li))?;
        let he: &Edge = host.edges().get(hi).ok_or(MatchError::EdgeMismatch(li))?;
        if he.source != m.vertices[&le.source] || he.target != m.vertices[&le.target] {
            return Err(MatchError::EdgeMismatch(li));
        }
        if !same_port(&m.subst, &le.port, &he.port) {
            return Err(MatchError::EdgeMismatch(li));
        }
        if !edge_images.insert(hi) {
            return Err(MatchError::EdgeNotInjective(hi));
        }
    }

    for v in pattern.interior_vertices() {
        let img = &m.vertices[&v];
        for (hi, _) in host.incident(img) {
            if !edge_images.contains(&hi) {
                return Err(MatchError::Boundary { vertex: v.clone(), edge: hi });
            }
        }
    }
    Ok(())
}
