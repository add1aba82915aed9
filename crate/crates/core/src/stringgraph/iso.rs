use super::{find_first_matching, Matching, StringGraph};

/// A data-preserving bijection between two graphs, ignoring vertex ids.
///
/// Equal vertex and edge counts plus an injective matching (which maps
/// every edge) make the matching a bijection.
pub fn find_isomorphism(a: &StringGraph, b: &StringGraph) -> Option<Matching> {
    if a.vertex_count() != b.vertex_count() || a.edge_count() != b.edge_count() {
        return None;
    }
    find_first_matching(a, b, &[])
}

pub fn is_isomorphic(a: &StringGraph, b: &StringGraph) -> bool {
    find_isomorphism(a, b).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(ids: [&str; 3], tactic: &str) -> StringGraph {
        let mut g = StringGraph::new();
        g.add_wire(ids[0], "any");
        g.add_tactic(ids[1], tactic);
        g.add_wire(ids[2], "any");
        g.connect_in(ids[0], ids[1], 1);
        g.connect_out(ids[1], 1, ids[2]);
        g
    }

    #[test]
    fn renaming_preserves_isomorphism() {
        assert!(is_isomorphic(&chain(["a", "t", "b"], "f"), &chain(["x", "y", "z"], "f")));
    }

    #[test]
    fn data_breaks_isomorphism() {
        assert!(!is_isomorphic(&chain(["a", "t", "b"], "f"), &chain(["a", "t", "b"], "g")));
    }
}
