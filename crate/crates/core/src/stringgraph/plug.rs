use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{StringGraph, VertexId};
use crate::data::Datum;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlugError {
    #[error("cannot plug output of type {output} into input of type {input}")]
    TypeMismatch { output: Datum, input: Datum },
    #[error("pairing is not a bijection between boundary wires: {0}")]
    ArityMismatch(String),
}

/// Result of plugging two graphs together.
#[derive(Clone, Debug)]
pub struct Plugged {
    pub graph: StringGraph,
    /// Ids of the second graph's vertices inside the result.
    pub renaming: BTreeMap<VertexId, VertexId>,
    /// Where each fused output of the first graph ended up.
    pub fused: BTreeMap<VertexId, VertexId>,
}

/// Disjoint union of `g` and `h`; vertices of `h` whose ids clash with `g`
/// are freshened. Returns the union and the renaming applied to `h`.
pub fn disjoint_union(g: &StringGraph, h: &StringGraph) -> (StringGraph, BTreeMap<VertexId, VertexId>) {
    let mut out = g.clone();
    out.bump_fresh(h.fresh_counter());
    let mut renaming = BTreeMap::new();
    for id in h.vertex_ids() {
        let new = if out.contains(id) {
            out.fresh_id(id.as_str())
        } else {
            id.clone()
        };
        out.add_vertex(new.clone(), h.vertex(id).cloned().expect("vertex exists"));
        renaming.insert(id.clone(), new);
    }
    for e in h.edges() {
        let mut e = e.clone();
        e.source = renaming[&e.source].clone();
        e.target = renaming[&e.target].clone();
        out.push_edge(e);
    }
    (out, renaming)
}

/// Plugs outputs of `g` into inputs of `h` along `pairing`, fusing each
/// paired output wire-vertex with its input wire-vertex. Wire types must be
/// identical.
pub fn plug(g: &StringGraph, h: &StringGraph, pairing: &[(VertexId, VertexId)]) -> Result<Plugged, PlugError> {
    let g_out = g.outputs();
    let h_in = h.inputs();
    let mut seen_out = BTreeSet::new();
    let mut seen_in = BTreeSet::new();
    for (o, i) in pairing {
        if !g_out.contains(o) {
            return Err(PlugError::ArityMismatch(format!("{o} is not an output")));
        }
        if !h_in.contains(i) {
            return Err(PlugError::ArityMismatch(format!("{i} is not an input")));
        }
        if !seen_out.insert(o) || !seen_in.insert(i) {
            return Err(PlugError::ArityMismatch(format!("{o} -> {i} reuses a boundary wire")));
        }
        let (ot, it) = (g.wire_type(o).expect("output is a wire"), h.wire_type(i).expect("input is a wire"));
        if ot != it {
            return Err(PlugError::TypeMismatch { output: ot.clone(), input: it.clone() });
        }
    }

    let (mut graph, renaming) = disjoint_union(g, h);
    let mut fused = BTreeMap::new();
    for (o, i) in pairing {
        let target = renaming[i].clone();
        graph.add_edge(o.clone(), target.clone(), None);
        fused.insert(o.clone(), target);
    }
    graph.normalize();
    Ok(Plugged { graph, renaming, fused })
}
