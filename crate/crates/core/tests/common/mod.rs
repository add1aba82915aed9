//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Deserialize;
use serde_json::value::RawValue;

use psgraph::session::DebugSession;
use psgraph::stringgraph::{NodeData, Signature, StringGraph, VertexId, VertexKind};

/// The parts of a protocol reply the drivers look at; trace records are
/// kept as the exact bytes sent.
#[derive(Deserialize)]
pub struct Reply {
    pub error: Option<String>,
    pub is_enf: Option<bool>,
    pub open_branches: Option<usize>,
    pub trace_tail: Option<Vec<Box<RawValue>>>,
}

pub fn send(session: &mut DebugSession, line: &str) -> (String, Reply) {
    let raw = session.handle_line(line);
    let reply: Reply = serde_json::from_str(&raw).expect("replies are JSON");
    (raw, reply)
}

fn last_record(r: &Reply) -> String {
    r.trace_tail.as_ref().and_then(|t| t.last()).expect("a step adds a trace record").get().to_owned()
}

/// Depth-first search for an ENF driven purely through protocol lines:
/// branch 0 first, backtracking out of dead ends. Returns the trace
/// records received on the way to the first ENF, or `None` when there is
/// none. Every reply's `trace_tail` is checked against the records so far.
pub fn first_enf_over_protocol(session: &mut DebugSession) -> Option<Vec<String>> {
    let mut records: Vec<String> = Vec::new();
    // Next branch to try and number of branches, per state on the path.
    let mut frames: Vec<(usize, usize)> = Vec::new();
    let (_, mut reply) = send(session, r#"{"cmd":"snapshot"}"#);
    loop {
        check_tail(&reply, &records);
        if reply.is_enf == Some(true) {
            return Some(records);
        }
        let open = reply.open_branches.expect("snapshot has open_branches");
        if open > 0 {
            frames.push((1, open));
            let (_, r) = send(session, r#"{"cmd":"step","branch":0}"#);
            assert!(r.error.is_none(), "step failed");
            records.push(last_record(&r));
            reply = r;
            continue;
        }
        // Dead end: back up to the nearest state with an untried branch.
        loop {
            let (next, open) = frames.last_mut()?;
            let (k, open) = (*next, *open);
            *next += 1;
            let (_, r) = send(session, r#"{"cmd":"backtrack"}"#);
            assert!(r.error.is_none(), "backtrack failed");
            records.pop();
            if k < open {
                let (_, r) = send(session, &format!(r#"{{"cmd":"step","branch":{k}}}"#));
                assert!(r.error.is_none(), "step to branch {k} failed");
                records.push(last_record(&r));
                reply = r;
                break;
            }
            frames.pop();
            if frames.is_empty() {
                return None;
            }
        }
    }
}

fn check_tail(r: &Reply, records: &[String]) {
    let tail: Vec<&str> = r.trace_tail.as_ref().map(|t| t.iter().map(|x| x.get()).collect()).unwrap_or_default();
    let from = records.len().saturating_sub(psgraph::session::TRACE_TAIL);
    let want: Vec<&str> = records[from..].iter().map(String::as_str).collect();
    assert_eq!(tail, want, "trace_tail disagrees with the records received");
}

// --- random string graphs --------------------------------------------------

pub const TYPES: [&str; 2] = ["a", "b"];

pub fn tactic_name(prefix: &str, ins: &[String], outs: &[String]) -> String {
    format!("{prefix}_{}_{}", ins.concat(), outs.concat())
}

/// Signature with every tactic name the generator can produce, decoded from
/// the name itself.
pub fn signature_for(graphs: &[&StringGraph]) -> Signature {
    let mut sig = Signature::new();
    for t in TYPES {
        sig.add_type(t);
    }
    for g in graphs {
        for (_, k) in g.vertices() {
            if let VertexKind::Node(NodeData::Tactic(d)) = k {
                let name = d.to_string();
                let parts: Vec<&str> = name.split('_').collect();
                let decode = |p: &str| p.chars().map(|c| c.to_string()).collect::<Vec<_>>();
                sig.add_map(name.clone(), decode(parts[1]), decode(parts[2]));
            }
        }
    }
    sig
}

/// A random acyclic string graph of tactic nodes over wire types a and b,
/// with an occasional two-vertex wire chain.
pub fn random_host(rng: &mut StdRng) -> StringGraph {
    let mut g = StringGraph::new();
    let mut open: Vec<VertexId> = Vec::new();
    let mut wire = 0;
    let mut new_wire = |g: &mut StringGraph, ty: &str| {
        wire += 1;
        g.add_wire(format!("w{wire}"), ty)
    };
    for k in 0..rng.gen_range(1..=5) {
        let (ni, no) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let mut ins = Vec::new();
        for _ in 0..ni {
            let reuse = !open.is_empty() && rng.gen_bool(0.6);
            let w = if reuse {
                open.remove(rng.gen_range(0..open.len()))
            } else {
                new_wire(&mut g, TYPES.choose(rng).unwrap())
            };
            ins.push(w);
        }
        let mut in_tys: Vec<String> = ins.iter().map(|w| g.wire_type(w).unwrap().to_string()).collect();
        let out_tys: Vec<String> = (0..no).map(|_| TYPES.choose(rng).unwrap().to_string()).collect();
        let node = g.add_tactic(format!("n{k}"), tactic_name("f", &in_tys, &out_tys));
        for (i, w) in ins.iter().enumerate() {
            g.connect_in(w.clone(), node.clone(), i + 1);
        }
        in_tys.clear();
        for (i, ty) in out_tys.iter().enumerate() {
            let mut w = new_wire(&mut g, ty);
            g.connect_out(node.clone(), i + 1, w.clone());
            if rng.gen_bool(0.15) {
                let next = new_wire(&mut g, ty);
                g.add_edge(w.clone(), next.clone(), None);
                w = next;
            }
            open.push(w);
        }
    }
    g
}

/// Tactic nodes plus the wires touching them, ids prefixed with `p_`.
pub fn pattern_around(host: &StringGraph, nodes: &BTreeSet<VertexId>) -> StringGraph {
    let mut keep = nodes.clone();
    for n in nodes {
        for (_, e) in host.incident(n) {
            keep.insert(e.source.clone());
            keep.insert(e.target.clone());
        }
    }
    host.induced(&keep).rename_vertices(|v| VertexId::new(format!("p_{v}")))
}
