use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{NodeData, PortDir, StringGraph, VertexId, VertexKind};
use crate::data::Datum;

/// Declared maps (tactic names) with their input and output wire types.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub types: BTreeSet<String>,
    maps: BTreeMap<String, (Vec<String>, Vec<String>)>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_type(&mut self, ty: impl Into<String>) {
        self.types.insert(ty.into());
    }

    /// Declares a map. Types used by `dom`/`cod` are added to the type set.
    pub fn add_map(&mut self, name: impl Into<String>, dom: Vec<String>, cod: Vec<String>) {
        self.types.extend(dom.iter().cloned());
        self.types.extend(cod.iter().cloned());
        self.maps.insert(name.into(), (dom, cod));
    }

    pub fn dom(&self, name: &str) -> Option<&[String]> {
        self.maps.get(name).map(|(d, _)| d.as_slice())
    }

    pub fn cod(&self, name: &str) -> Option<&[String]> {
        self.maps.get(name).map(|(_, c)| c.as_slice())
    }

    pub fn maps(&self) -> impl Iterator<Item = &String> {
        self.maps.keys()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DanglingEdge { source: VertexId, target: VertexId },
    NodeToNode { source: VertexId, target: VertexId },
    FanIn { wire: VertexId, count: usize },
    FanOut { wire: VertexId, count: usize },
    ChainType { from: VertexId, to: VertexId },
    Circle { wire: VertexId },
    MissingPortLabel { node: VertexId, wire: VertexId },
    UnexpectedPortLabel { source: VertexId, target: VertexId },
    PortDirection { node: VertexId, wire: VertexId },
    DuplicatePort { node: VertexId, port: String },
    Arity { node: VertexId, dir: PortDir, expected: usize, found: usize },
    MissingPort { node: VertexId, port: String },
    PortType { node: VertexId, port: String, expected: String, found: String },
    UnknownMap { node: VertexId, name: String },
    UnknownType { wire: VertexId, ty: String },
    MergeShape { node: VertexId },
    GoalNodeShape { node: VertexId },
}

impl Violation {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::DanglingEdge { .. } => "dangling-edge",
            Violation::NodeToNode { .. } => "node-to-node",
            Violation::FanIn { .. } => "fan-in",
            Violation::FanOut { .. } => "fan-out",
            Violation::ChainType { .. } => "chain-type",
            Violation::Circle { .. } => "circle",
            Violation::MissingPortLabel { .. } => "missing-port-label",
            Violation::UnexpectedPortLabel { .. } => "unexpected-port-label",
            Violation::PortDirection { .. } => "port-direction",
            Violation::DuplicatePort { .. } => "duplicate-port",
            Violation::Arity { .. } => "arity",
            Violation::MissingPort { .. } => "missing-port",
            Violation::PortType { .. } => "port-type",
            Violation::UnknownMap { .. } => "unknown-map",
            Violation::UnknownType { .. } => "unknown-type",
            Violation::MergeShape { .. } => "merge-shape",
            Violation::GoalNodeShape { .. } => "goal-node-shape",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.kind())?;
        match self {
            Violation::DanglingEdge { source, target } => {
                write!(f, "edge {source} -> {target} refers to a missing vertex")
            }
            Violation::NodeToNode { source, target } => {
                write!(f, "edge {source} -> {target} joins two node-vertices")
            }
            Violation::FanIn { wire, count } => write!(f, "wire {wire} has {count} in-edges"),
            Violation::FanOut { wire, count } => write!(f, "wire {wire} has {count} out-edges"),
            Violation::ChainType { from, to } => {
                write!(f, "wire chain {from} -> {to} changes type")
            }
            Violation::Circle { wire } => write!(f, "closed wire loop through {wire}"),
            Violation::MissingPortLabel { node, wire } => {
                write!(f, "edge between {node} and {wire} has no port label")
            }
            Violation::UnexpectedPortLabel { source, target } => {
                write!(f, "edge {source} -> {target} between wires carries a port label")
            }
            Violation::PortDirection { node, wire } => {
                write!(f, "port on edge between {node} and {wire} points the wrong way")
            }
            Violation::DuplicatePort { node, port } => write!(f, "{node} uses port {port} twice"),
            Violation::Arity { node, dir, expected, found } => {
                let d = if *dir == PortDir::In { "inputs" } else { "outputs" };
                write!(f, "{node} has {found} {d}, signature expects {expected}")
            }
            Violation::MissingPort { node, port } => write!(f, "{node} has nothing on {port}"),
            Violation::PortType { node, port, expected, found } => {
                write!(f, "{node}.{port} is wired to {found}, signature expects {expected}")
            }
            Violation::UnknownMap { node, name } => write!(f, "{node} uses undeclared tactic {name}"),
            Violation::UnknownType { wire, ty } => write!(f, "wire {wire} has undeclared type {ty}"),
            Violation::MergeShape { node } => {
                write!(f, "merge {node} needs at least one input and exactly one output")
            }
            Violation::GoalNodeShape { node } => {
                write!(f, "goal node {node} needs one input and one output wire of equal type")
            }
        }
    }
}

/// Checks every string graph invariant plus port arity and typing of tactic
/// nodes against `sig`. Returns all violations found; an empty list means the
/// graph is well formed.
pub fn check_well_formed(g: &StringGraph, sig: &Signature) -> Vec<Violation> {
    let mut out = Vec::new();

    for e in g.edges() {
        let (Some(sk), Some(tk)) = (g.vertex(&e.source), g.vertex(&e.target)) else {
            out.push(Violation::DanglingEdge { source: e.source.clone(), target: e.target.clone() });
            continue;
        };
        match (sk, tk) {
            (VertexKind::Node(_), VertexKind::Node(_)) => {
                out.push(Violation::NodeToNode { source: e.source.clone(), target: e.target.clone() })
            }
            (VertexKind::Wire(a), VertexKind::Wire(b)) => {
                if e.port.is_some() {
                    out.push(Violation::UnexpectedPortLabel {
                        source: e.source.clone(),
                        target: e.target.clone(),
                    });
                }
                if a != b {
                    out.push(Violation::ChainType { from: e.source.clone(), to: e.target.clone() });
                }
            }
            (VertexKind::Node(n), VertexKind::Wire(_)) | (VertexKind::Wire(_), VertexKind::Node(n)) => {
                let node_is_target = !tk.is_wire();
                let (node, wire) = if node_is_target {
                    (&e.target, &e.source)
                } else {
                    (&e.source, &e.target)
                };
                match &e.port {
                    None => {
                        if matches!(n, NodeData::Tactic(_)) {
                            out.push(Violation::MissingPortLabel { node: node.clone(), wire: wire.clone() });
                        }
                    }
                    Some(p) => {
                        let expected = if node_is_target { PortDir::In } else { PortDir::Out };
                        if p.dir != expected {
                            out.push(Violation::PortDirection { node: node.clone(), wire: wire.clone() });
                        }
                    }
                }
            }
        }
    }

    for (id, kind) in g.vertices() {
        match kind {
            VertexKind::Wire(ty) => {
                let ins = g.in_degree(id);
                let outs = g.out_degree(id);
                if ins > 1 {
                    out.push(Violation::FanIn { wire: id.clone(), count: ins });
                }
                if outs > 1 {
                    out.push(Violation::FanOut { wire: id.clone(), count: outs });
                }
                if let Datum::Sym(t) = ty {
                    if !sig.types.contains(t) {
                        out.push(Violation::UnknownType { wire: id.clone(), ty: t.clone() });
                    }
                }
            }
            VertexKind::Node(NodeData::Merge) => {
                if g.in_degree(id) == 0 || g.out_degree(id) != 1 {
                    out.push(Violation::MergeShape { node: id.clone() });
                }
            }
            VertexKind::Node(NodeData::Goals(_)) => {
                let ins = g.in_wires(id);
                let outs = g.out_wires(id);
                let ok = ins.len() == 1
                    && outs.len() == 1
                    && g.wire_type(&ins[0]).is_some()
                    && g.wire_type(&ins[0]) == g.wire_type(&outs[0]);
                if !ok {
                    out.push(Violation::GoalNodeShape { node: id.clone() });
                }
            }
            VertexKind::Node(NodeData::Tactic(name)) => {
                check_tactic_ports(g, sig, id, name, &mut out);
            }
        }
    }

    out.extend(find_circles(g));
    out
}

fn check_tactic_ports(
    g: &StringGraph,
    sig: &Signature,
    node: &VertexId,
    name: &Datum,
    out: &mut Vec<Violation>,
) {
    let declared = match name {
        Datum::Sym(n) => match (sig.dom(n), sig.cod(n)) {
            (Some(d), Some(c)) => Some((d, c)),
            _ => {
                out.push(Violation::UnknownMap { node: node.clone(), name: n.clone() });
                None
            }
        },
        _ => None,
    };

    for dir in [PortDir::In, PortDir::Out] {
        let edges: Vec<_> = match dir {
            PortDir::In => g.in_edges(node).map(|(_, e)| (e, &e.source)).collect(),
            PortDir::Out => g.out_edges(node).map(|(_, e)| (e, &e.target)).collect(),
        };
        let mut seen: BTreeMap<String, &VertexId> = BTreeMap::new();
        for (e, wire) in &edges {
            if let Some(p) = &e.port {
                let label = p.to_string();
                if seen.insert(label.clone(), wire).is_some() {
                    out.push(Violation::DuplicatePort { node: node.clone(), port: label });
                }
            }
        }
        let Some((dom, cod)) = declared else { continue };
        let expected = if dir == PortDir::In { dom } else { cod };
        if edges.len() != expected.len() {
            out.push(Violation::Arity { node: node.clone(), dir, expected: expected.len(), found: edges.len() });
        }
        for (i, ty) in expected.iter().enumerate() {
            let port = super::Port { dir, index: Datum::Int(i + 1) }.to_string();
            match seen.get(&port) {
                None => {
                    if edges.len() == expected.len() {
                        out.push(Violation::MissingPort { node: node.clone(), port });
                    }
                }
                Some(wire) => match g.wire_type(wire) {
                    Some(Datum::Sym(found)) if found != ty => out.push(Violation::PortType {
                        node: node.clone(),
                        port,
                        expected: ty.clone(),
                        found: found.clone(),
                    }),
                    _ => {}
                },
            }
        }
    }
}

/// Closed loops made only of wire-vertices and goal nodes.
fn find_circles(g: &StringGraph) -> Vec<Violation> {
    let on_wire = |v: &VertexId| {
        matches!(g.vertex(v), Some(VertexKind::Wire(_)) | Some(VertexKind::Node(NodeData::Goals(_))))
    };
    let mut reported: BTreeSet<VertexId> = BTreeSet::new();
    let mut out = Vec::new();
    for start in g.vertex_ids().filter(|v| g.is_wire(v)) {
        if reported.contains(start) {
            continue;
        }
        let mut path = vec![start.clone()];
        let mut cur = start.clone();
        let closed = loop {
            let next = g.out_edges(&cur).map(|(_, e)| e.target.clone()).find(|t| on_wire(t));
            match next {
                Some(n) if &n == start => break true,
                Some(n) if path.contains(&n) || path.len() > g.vertex_count() => break false,
                Some(n) => {
                    path.push(n.clone());
                    cur = n;
                }
                None => break false,
            }
        };
        if closed {
            let wire = path.iter().filter(|v| g.is_wire(v)).min().cloned().unwrap_or_else(|| start.clone());
            reported.extend(path);
            out.push(Violation::Circle { wire });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stringgraph::Port;

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.add_map("f", vec!["any".into()], vec!["any".into()]);
        s
    }

    fn simple() -> StringGraph {
        let mut g = StringGraph::new();
        g.add_wire("a", "any");
        g.add_tactic("t", "f");
        g.add_wire("b", "any");
        g.connect_in("a", "t", 1);
        g.connect_out("t", 1, "b");
        g
    }

    #[test]
    fn simple_graph_is_well_formed() {
        assert_eq!(check_well_formed(&simple(), &sig()), vec![]);
    }

    #[test]
    fn fan_in_is_reported() {
        let mut g = simple();
        g.add_tactic("u", "f");
        g.add_wire("c", "any");
        g.connect_in("c", "u", 1);
        g.connect_out("u", 1, "b");
        let v = check_well_formed(&g, &sig());
        assert!(v.iter().any(|v| matches!(v, Violation::FanIn { wire, count: 2 } if wire.as_str() == "b")), "{v:?}");
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let mut g = simple();
        g.add_wire("c", "any");
        g.connect_in("c", "t", 2);
        let v = check_well_formed(&g, &sig());
        assert!(v.iter().any(|v| matches!(v, Violation::Arity { dir: PortDir::In, expected: 1, found: 2, .. })), "{v:?}");
    }

    #[test]
    fn wrong_port_type_is_reported() {
        let mut s = sig();
        s.add_type("imp");
        let mut g = simple();
        g.add_wire("a", "imp");
        let v = check_well_formed(&g, &s);
        assert!(v.iter().any(|v| v.kind() == "port-type"), "{v:?}");
    }

    #[test]
    fn node_to_node_edge_is_reported() {
        let mut g = simple();
        g.add_tactic("u", "f");
        g.add_edge("t", "u", Some(Port::output(2)));
        let v = check_well_formed(&g, &sig());
        assert!(v.iter().any(|v| v.kind() == "node-to-node"));
    }

    #[test]
    fn circles_are_rejected() {
        let mut g = StringGraph::new();
        g.add_wire("a", "any");
        g.add_wire("b", "any");
        g.add_edge("a", "b", None);
        g.add_edge("b", "a", None);
        let v = check_well_formed(&g, &sig());
        assert_eq!(v.iter().filter(|v| v.kind() == "circle").count(), 1);
    }

    #[test]
    fn feedback_through_a_merge_is_not_a_circle() {
        let mut g = StringGraph::new();
        g.add_wire("in", "any");
        g.add_merge("m");
        g.add_wire("w", "any");
        g.add_tactic("t", "f");
        g.add_wire("back", "any");
        g.add_edge("in", "m", None);
        g.add_edge("back", "m", None);
        g.add_edge("m", "w", None);
        g.connect_in("w", "t", 1);
        g.connect_out("t", 1, "back");
        assert_eq!(check_well_formed(&g, &sig()), vec![]);
    }

    #[test]
    fn goal_node_shape() {
        let mut g = StringGraph::new();
        g.add_wire("a", "any");
        g.add_vertex("h", VertexKind::Node(NodeData::Goals(Datum::List(vec![]))));
        g.add_edge("a", "h", None);
        let v = check_well_formed(&g, &sig());
        assert!(v.iter().any(|v| v.kind() == "goal-node-shape"));
    }
}
