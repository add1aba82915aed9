//! Typed string graphs.
//!
//! A string graph has two kinds of vertices. Node-vertices are the boxes of a
//! string diagram (tactics, merges and goal nodes); wire-vertices carry the
//! wire type and have at most one in-edge and one out-edge. Port labels live
//! on the node-vertex end of an edge.
//!
//! Graphs are kept in a normal form with a single wire-vertex per connection;
//! [`StringGraph::normalize`] fuses longer chains.

mod iso;
mod matching;
mod plug;
mod wellformed;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{Datum, Substitution};

pub use iso::{find_isomorphism, is_isomorphic};
pub use matching::{find_first_matching, find_matchings, find_matchings_seeded, verify_matching, Matching, MatchError};
pub use plug::{disjoint_union, plug, PlugError};
pub use wellformed::{check_well_formed, Signature, Violation};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(String);

impl VertexId {
    pub fn new(s: impl Into<String>) -> Self {
        VertexId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The id with any freshening suffix removed.
    pub fn base(&self) -> &str {
        match self.0.rsplit_once('~') {
            Some((base, n)) if !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) => base,
            _ => &self.0,
        }
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId(s.to_owned())
    }
}

impl From<String> for VertexId {
    fn from(s: String) -> Self {
        VertexId(s)
    }
}

impl From<&VertexId> for VertexId {
    fn from(v: &VertexId) -> Self {
        v.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeData {
    /// A tactic box, named by its data.
    Tactic(Datum),
    Merge,
    /// A goal node holding a goal list.
    Goals(Datum),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Wire(Datum),
    Node(NodeData),
}

impl VertexKind {
    pub fn is_wire(&self) -> bool {
        matches!(self, VertexKind::Wire(_))
    }

    fn map_data(&self, f: &impl Fn(&Datum) -> Datum) -> VertexKind {
        match self {
            VertexKind::Wire(d) => VertexKind::Wire(f(d)),
            VertexKind::Node(NodeData::Tactic(d)) => VertexKind::Node(NodeData::Tactic(f(d))),
            VertexKind::Node(NodeData::Goals(d)) => VertexKind::Node(NodeData::Goals(f(d))),
            VertexKind::Node(NodeData::Merge) => VertexKind::Node(NodeData::Merge),
        }
    }

    fn data(&self) -> Option<&Datum> {
        match self {
            VertexKind::Wire(d)
            | VertexKind::Node(NodeData::Tactic(d))
            | VertexKind::Node(NodeData::Goals(d)) => Some(d),
            VertexKind::Node(NodeData::Merge) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortDir {
    In,
    Out,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Port {
    pub dir: PortDir,
    pub index: Datum,
}

impl Port {
    pub fn input(i: usize) -> Self {
        Port { dir: PortDir::In, index: Datum::Int(i) }
    }

    pub fn output(i: usize) -> Self {
        Port { dir: PortDir::Out, index: Datum::Int(i) }
    }

    /// Parses `in1`, `out3`.
    pub fn parse(s: &str) -> Option<Port> {
        let (dir, rest) = if let Some(r) = s.strip_prefix("in") {
            (PortDir::In, r)
        } else if let Some(r) = s.strip_prefix("out") {
            (PortDir::Out, r)
        } else {
            return None;
        };
        let i: usize = rest.parse().ok()?;
        (i >= 1).then_some(Port { dir, index: Datum::Int(i) })
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.dir {
            PortDir::In => "in",
            PortDir::Out => "out",
        };
        match &self.index {
            Datum::Int(i) => write!(f, "{dir}{i}"),
            other => write!(f, "{dir}[{other}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub source: VertexId,
    pub target: VertexId,
    pub port: Option<Port>,
}

impl Edge {
    pub fn touches(&self, v: &VertexId) -> bool {
        &self.source == v || &self.target == v
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StringGraph {
    vertices: BTreeMap<VertexId, VertexKind>,
    edges: Vec<Edge>,
    fresh: u64,
}

impl StringGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a vertex, replacing any existing vertex with the same id.
    pub fn add_vertex(&mut self, id: impl Into<VertexId>, kind: VertexKind) -> VertexId {
        let id = id.into();
        self.vertices.insert(id.clone(), kind);
        id
    }

    pub fn add_wire(&mut self, id: impl Into<VertexId>, ty: impl Into<String>) -> VertexId {
        self.add_vertex(id, VertexKind::Wire(Datum::Sym(ty.into())))
    }

    pub fn add_tactic(&mut self, id: impl Into<VertexId>, name: impl Into<String>) -> VertexId {
        self.add_vertex(id, VertexKind::Node(NodeData::Tactic(Datum::Sym(name.into()))))
    }

    pub fn add_merge(&mut self, id: impl Into<VertexId>) -> VertexId {
        self.add_vertex(id, VertexKind::Node(NodeData::Merge))
    }

    pub fn add_edge(
        &mut self,
        source: impl Into<VertexId>,
        target: impl Into<VertexId>,
        port: Option<Port>,
    ) {
        self.edges.push(Edge { source: source.into(), target: target.into(), port });
    }

    /// Edge from a wire into input port `i` of a node.
    pub fn connect_in(&mut self, wire: impl Into<VertexId>, node: impl Into<VertexId>, i: usize) {
        self.add_edge(wire, node, Some(Port::input(i)));
    }

    /// Edge from output port `i` of a node to a wire.
    pub fn connect_out(&mut self, node: impl Into<VertexId>, i: usize, wire: impl Into<VertexId>) {
        self.add_edge(node, wire, Some(Port::output(i)));
    }

    pub fn push_edge(&mut self, e: Edge) {
        self.edges.push(e);
    }

    pub fn contains(&self, id: &VertexId) -> bool {
        self.vertices.contains_key(id)
    }

    pub fn vertex(&self, id: &VertexId) -> Option<&VertexKind> {
        self.vertices.get(id)
    }

    pub fn vertex_mut(&mut self, id: &VertexId) -> Option<&mut VertexKind> {
        self.vertices.get_mut(id)
    }

    pub fn vertices(&self) -> impl Iterator<Item = (&VertexId, &VertexKind)> {
        self.vertices.iter()
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = &VertexId> {
        self.vertices.keys()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_wire(&self, id: &VertexId) -> bool {
        self.vertices.get(id).is_some_and(VertexKind::is_wire)
    }

    pub fn wire_type(&self, id: &VertexId) -> Option<&Datum> {
        match self.vertices.get(id) {
            Some(VertexKind::Wire(d)) => Some(d),
            _ => None,
        }
    }

    pub fn node_data(&self, id: &VertexId) -> Option<&NodeData> {
        match self.vertices.get(id) {
            Some(VertexKind::Node(n)) => Some(n),
            _ => None,
        }
    }

    pub fn in_edges<'a>(&'a self, v: &'a VertexId) -> impl Iterator<Item = (usize, &'a Edge)> + 'a {
        self.edges.iter().enumerate().filter(move |(_, e)| &e.target == v)
    }

    pub fn out_edges<'a>(&'a self, v: &'a VertexId) -> impl Iterator<Item = (usize, &'a Edge)> + 'a {
        self.edges.iter().enumerate().filter(move |(_, e)| &e.source == v)
    }

    /// Edges incident to `v`, self-loops counted once.
    pub fn incident<'a>(&'a self, v: &'a VertexId) -> impl Iterator<Item = (usize, &'a Edge)> + 'a {
        self.edges.iter().enumerate().filter(move |(_, e)| e.touches(v))
    }

    pub fn in_degree(&self, v: &VertexId) -> usize {
        self.in_edges(v).count()
    }

    pub fn out_degree(&self, v: &VertexId) -> usize {
        self.out_edges(v).count()
    }

    /// The single predecessor of a wire-vertex, if any.
    pub fn predecessor(&self, v: &VertexId) -> Option<&Edge> {
        self.edges.iter().find(|e| &e.target == v)
    }

    /// The single successor of a wire-vertex, if any.
    pub fn successor(&self, v: &VertexId) -> Option<&Edge> {
        self.edges.iter().find(|e| &e.source == v)
    }

    /// Wire-vertices with no in-edges.
    pub fn inputs(&self) -> BTreeSet<VertexId> {
        self.vertices
            .iter()
            .filter(|(id, k)| k.is_wire() && self.in_degree(id) == 0)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Wire-vertices with no out-edges.
    pub fn outputs(&self) -> BTreeSet<VertexId> {
        self.vertices
            .iter()
            .filter(|(id, k)| k.is_wire() && self.out_degree(id) == 0)
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn boundary(&self) -> BTreeSet<VertexId> {
        let mut b = self.inputs();
        b.extend(self.outputs());
        b
    }

    pub fn interior_vertices(&self) -> BTreeSet<VertexId> {
        let b = self.boundary();
        self.vertices.keys().filter(|v| !b.contains(*v)).cloned().collect()
    }

    /// Wires attached to the ports of a node, sorted by port index.
    pub fn ports(&self, node: &VertexId, dir: PortDir) -> Vec<(usize, VertexId)> {
        let mut out: Vec<(usize, VertexId)> = self
            .incident(node)
            .filter_map(|(_, e)| {
                let p = e.port.as_ref()?;
                if p.dir != dir {
                    return None;
                }
                let i = p.index.as_int()?;
                let wire = if &e.source == node { &e.target } else { &e.source };
                Some((i, wire.clone()))
            })
            .collect();
        out.sort();
        out
    }

    /// Wires feeding a node, ignoring port labels, in edge order.
    pub fn in_wires(&self, node: &VertexId) -> Vec<VertexId> {
        self.in_edges(node).map(|(_, e)| e.source.clone()).collect()
    }

    pub fn out_wires(&self, node: &VertexId) -> Vec<VertexId> {
        self.out_edges(node).map(|(_, e)| e.target.clone()).collect()
    }

    /// Removes a vertex and every incident edge.
    pub fn remove_vertex(&mut self, v: &VertexId) -> Option<VertexKind> {
        let kind = self.vertices.remove(v)?;
        self.edges.retain(|e| !e.touches(v));
        Some(kind)
    }

    pub fn remove_edges(&mut self, indices: &BTreeSet<usize>) {
        let mut i = 0;
        self.edges.retain(|_| {
            let keep = !indices.contains(&i);
            i += 1;
            keep
        });
    }

    /// A vertex id not yet used, built from `base` plus a monotonic counter.
    pub fn fresh_id(&mut self, base: &str) -> VertexId {
        let base = VertexId::new(base).base().to_owned();
        loop {
            self.fresh += 1;
            let id = VertexId(format!("{base}~{}", self.fresh));
            if !self.vertices.contains_key(&id) {
                return id;
            }
        }
    }

    pub(crate) fn fresh_counter(&self) -> u64 {
        self.fresh
    }

    pub(crate) fn bump_fresh(&mut self, at_least: u64) {
        self.fresh = self.fresh.max(at_least);
    }

    /// Fuses chains of wire-vertices so that each connection carries one.
    ///
    /// For an edge `a -> b` between two wire-vertices of the same type, `a`
    /// is removed and its in-edge redirected to `b`.
    pub fn normalize(&mut self) {
        loop {
            let fusible = self.edges.iter().position(|e| {
                e.source != e.target
                    && matches!(
                        (self.wire_type(&e.source), self.wire_type(&e.target)),
                        (Some(a), Some(b)) if a == b
                    )
            });
            let Some(idx) = fusible else { break };
            let Edge { source: a, target: b, .. } = self.edges.remove(idx);
            for e in self.edges.iter_mut() {
                if e.target == a {
                    e.target = b.clone();
                }
                if e.source == a {
                    e.source = b.clone();
                }
            }
            self.vertices.remove(&a);
        }
    }

    /// Applies a substitution to all vertex data and port indices.
    pub fn substitute(&self, s: &Substitution) -> StringGraph {
        let f = |d: &Datum| s.apply(d);
        StringGraph {
            vertices: self.vertices.iter().map(|(k, v)| (k.clone(), v.map_data(&f))).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    source: e.source.clone(),
                    target: e.target.clone(),
                    port: e.port.as_ref().map(|p| Port { dir: p.dir, index: s.apply(&p.index) }),
                })
                .collect(),
            fresh: self.fresh,
        }
    }

    pub fn rename_vars(&self, f: &impl Fn(&str) -> Option<String>) -> StringGraph {
        let g = |d: &Datum| d.rename_vars(f);
        StringGraph {
            vertices: self.vertices.iter().map(|(k, v)| (k.clone(), v.map_data(&g))).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    source: e.source.clone(),
                    target: e.target.clone(),
                    port: e.port.as_ref().map(|p| Port { dir: p.dir, index: p.index.rename_vars(f) }),
                })
                .collect(),
            fresh: self.fresh,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for k in self.vertices.values() {
            if let Some(d) = k.data() {
                d.collect_vars(&mut out);
            }
        }
        for e in &self.edges {
            if let Some(p) = &e.port {
                p.index.collect_vars(&mut out);
            }
        }
        out
    }

    /// Renames vertex ids through `f`.
    pub fn rename_vertices(&self, f: impl Fn(&VertexId) -> VertexId) -> StringGraph {
        StringGraph {
            vertices: self.vertices.iter().map(|(k, v)| (f(k), v.clone())).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge { source: f(&e.source), target: f(&e.target), port: e.port.clone() })
                .collect(),
            fresh: self.fresh,
        }
    }

    /// Sorts edges so that equal graphs compare equal regardless of the order
    /// in which edges were added.
    pub fn canonicalize(&mut self) {
        self.edges.sort();
    }

    pub fn canonical(&self) -> StringGraph {
        let mut g = self.clone();
        g.canonicalize();
        g.fresh = 0;
        g
    }

    /// The subgraph induced by `keep`.
    pub fn induced(&self, keep: &BTreeSet<VertexId>) -> StringGraph {
        StringGraph {
            vertices: self
                .vertices
                .iter()
                .filter(|(k, _)| keep.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| keep.contains(&e.source) && keep.contains(&e.target))
                .cloned()
                .collect(),
            fresh: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_has_no_boundary() {
        let g = StringGraph::new();
        assert!(g.inputs().is_empty());
        assert!(g.outputs().is_empty());
    }

    #[test]
    fn isolated_wire_is_input_and_output() {
        let mut g = StringGraph::new();
        let w = g.add_wire("w", "any");
        assert_eq!(g.inputs(), BTreeSet::from([w.clone()]));
        assert_eq!(g.outputs(), BTreeSet::from([w]));
    }

    #[test]
    fn boundary_is_union() {
        let mut g = StringGraph::new();
        g.add_wire("a", "any");
        g.add_tactic("t", "id");
        g.add_wire("b", "any");
        g.connect_in("a", "t", 1);
        g.connect_out("t", 1, "b");
        assert_eq!(g.inputs(), BTreeSet::from(["a".into()]));
        assert_eq!(g.outputs(), BTreeSet::from(["b".into()]));
        assert_eq!(g.boundary().len(), 2);
        assert_eq!(g.interior_vertices(), BTreeSet::from(["t".into()]));
    }

    #[test]
    fn normalize_keeps_downstream_vertex() {
        let mut g = StringGraph::new();
        g.add_tactic("s", "f");
        g.add_wire("x", "any");
        g.add_wire("y", "any");
        g.add_wire("z", "any");
        g.add_tactic("t", "g");
        g.connect_out("s", 1, "x");
        g.add_edge("x", "y", None);
        g.add_edge("y", "z", None);
        g.connect_in("z", "t", 1);
        g.normalize();
        assert!(!g.contains(&"x".into()));
        assert!(!g.contains(&"y".into()));
        assert_eq!(g.ports(&"s".into(), PortDir::Out), vec![(1, "z".into())]);
        assert_eq!(g.ports(&"t".into(), PortDir::In), vec![(1, "z".into())]);
    }

    #[test]
    fn fresh_ids_are_monotonic() {
        let mut g = StringGraph::new();
        g.add_wire("w~2", "any");
        let a = g.fresh_id("w");
        let b = g.fresh_id("w~1");
        assert_eq!(a.as_str(), "w~1");
        assert_eq!(b.as_str(), "w~3");
        assert_eq!(b.base(), "w");
    }

    #[test]
    fn port_parsing() {
        assert_eq!(Port::parse("in2"), Some(Port::input(2)));
        assert_eq!(Port::parse("out1"), Some(Port::output(1)));
        assert_eq!(Port::parse("out0"), None);
        assert_eq!(Port::parse("left"), None);
        assert_eq!(Port::output(3).to_string(), "out3");
    }
}
