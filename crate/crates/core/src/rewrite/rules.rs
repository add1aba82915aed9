//! Rules generated on the fly for evaluation: the eval template and its
//! concrete instances, goal-list unfolding, merge forwarding and fusion.

use super::{bb_instantiate, BangBox, BangOp, RewriteRule};
use crate::data::{Datum, Substitution};
use crate::stringgraph::{Port, PortDir, StringGraph, VertexId, VertexKind};

/// Vertex ids used by eval rules: the consumed goal node, the wire it feeds
/// into and the tactic node.
pub const EVAL_GOAL: &str = "g";
pub const EVAL_INPUT: &str = "b";
pub const EVAL_TACTIC: &str = "t";

fn var_wire(g: &mut StringGraph, id: &str, var: &str) {
    g.add_vertex(id, VertexKind::Wire(Datum::var(var)));
}

fn goal_node(g: &mut StringGraph, id: &str, goals: Datum) {
    g.add_vertex(id, VertexKind::Node(crate::stringgraph::NodeData::Goals(goals)));
}

fn var_port(dir: PortDir, var: &str) -> Option<Port> {
    Some(Port { dir, index: Datum::var(var) })
}

/// The eval meta-rule with `!`-boxes `ins` (the other inputs of `t`) and
/// `outs` (its outputs).
///
/// ```text
///   a -> [g] -> b -in(i)-> t -out(k)-> o      ~>     a -> b -in(i)-> t -out(k)-> x -> [gs] -> o
///              v -in(j)-> t                                 v -in(j)-> t
/// ```
pub fn eval_template() -> RewriteRule {
    let mut l = StringGraph::new();
    var_wire(&mut l, "a", "alpha");
    goal_node(&mut l, EVAL_GOAL, Datum::List(vec![Datum::var("g")]));
    var_wire(&mut l, EVAL_INPUT, "alpha");
    l.add_vertex(EVAL_TACTIC, VertexKind::Node(crate::stringgraph::NodeData::Tactic(Datum::var("t"))));
    var_wire(&mut l, "v", "alpha_j");
    var_wire(&mut l, "o", "beta");
    l.add_edge("a", EVAL_GOAL, None);
    l.add_edge(EVAL_GOAL, EVAL_INPUT, None);
    l.add_edge(EVAL_INPUT, EVAL_TACTIC, var_port(PortDir::In, "i"));
    l.add_edge("v", EVAL_TACTIC, var_port(PortDir::In, "j"));
    l.add_edge(EVAL_TACTIC, "o", var_port(PortDir::Out, "k"));

    let mut r = StringGraph::new();
    var_wire(&mut r, "a", "alpha");
    var_wire(&mut r, EVAL_INPUT, "alpha");
    r.add_vertex(EVAL_TACTIC, VertexKind::Node(crate::stringgraph::NodeData::Tactic(Datum::var("t"))));
    var_wire(&mut r, "v", "alpha_j");
    var_wire(&mut r, "x", "beta");
    goal_node(&mut r, "h", Datum::var("gs"));
    var_wire(&mut r, "o", "beta");
    r.add_edge("a", EVAL_INPUT, None);
    r.add_edge(EVAL_INPUT, EVAL_TACTIC, var_port(PortDir::In, "i"));
    r.add_edge("v", EVAL_TACTIC, var_port(PortDir::In, "j"));
    r.add_edge(EVAL_TACTIC, "x", var_port(PortDir::Out, "k"));
    r.add_edge("x", "h", None);
    r.add_edge("h", "o", None);

    let mut rule = RewriteRule::new("eval", l, r).expect("template shares its boundary");
    rule.lhs_boxes = vec![
        BangBox::new("ins", ["v".into()], &["alpha_j", "j"]),
        BangBox::new("outs", ["o".into()], &["beta", "k", "gs"]),
    ];
    rule.rhs_boxes = vec![
        BangBox::new("ins", ["v".into()], &["alpha_j", "j"]),
        BangBox::new("outs", ["x".into(), "h".into(), "o".into()], &["beta", "k", "gs"]),
    ];
    rule
}

/// The eval rule for tactic node `t` of `g` consuming a goal on input port
/// `port`. Free variables left: `alpha`, `g`, `t`, the other input types
/// `alpha_j_c`, the output types `beta_c` and goal lists `gs_c` for output
/// `c` (counting from 1).
pub fn make_eval_rule(g: &StringGraph, t: &VertexId, port: usize) -> RewriteRule {
    let ins: Vec<usize> = g.ports(t, PortDir::In).into_iter().map(|(i, _)| i).filter(|&i| i != port).collect();
    let outs: Vec<usize> = g.ports(t, PortDir::Out).into_iter().map(|(i, _)| i).collect();
    let mut ops = vec![BangOp::Copy("ins".into()); ins.len()];
    ops.push(BangOp::Drop("ins".into()));
    ops.extend(vec![BangOp::Copy("outs".into()); outs.len()]);
    ops.push(BangOp::Drop("outs".into()));
    let mut rule = bb_instantiate(&eval_template(), &ops).expect("template boxes are paired");

    let mut s = Substitution::new().with("i", Datum::Int(port));
    for (c, j) in ins.iter().enumerate() {
        s.bind(format!("j_{}", c + 1), Datum::Int(*j));
    }
    for (c, k) in outs.iter().enumerate() {
        s.bind(format!("k_{}", c + 1), Datum::Int(*k));
    }
    rule.lhs = rule.lhs.substitute(&s);
    rule.rhs = rule.rhs.substitute(&s);
    rule.name = format!("eval[{t}.in{port}]");
    rule
}

/// Rewrites a goal node holding `k` goals into `k` singleton goal nodes in
/// sequence; `g1` ends up most downstream. With `k = 0` the node is removed.
pub fn goal_list_rule(k: usize) -> RewriteRule {
    let mut l = StringGraph::new();
    var_wire(&mut l, "a", "alpha");
    goal_node(&mut l, "g", Datum::List((1..=k).map(|i| Datum::var(format!("g{i}"))).collect()));
    var_wire(&mut l, "b", "alpha");
    l.add_edge("a", "g", None);
    l.add_edge("g", "b", None);

    let mut r = StringGraph::new();
    var_wire(&mut r, "a", "alpha");
    var_wire(&mut r, "b", "alpha");
    let mut upstream = VertexId::from("a");
    for i in (1..=k).rev() {
        let h = format!("h{i}");
        goal_node(&mut r, &h, Datum::List(vec![Datum::var(format!("g{i}"))]));
        r.add_edge(upstream.clone(), h.as_str(), None);
        upstream = if i == 1 {
            VertexId::from("b")
        } else {
            let w = format!("w{i}");
            var_wire(&mut r, &w, "alpha");
            VertexId::from(w)
        };
        r.add_edge(h.as_str(), upstream.clone(), None);
    }
    if k == 0 {
        r.add_edge("a", "b", None);
    }
    RewriteRule::new(format!("goals[{k}]"), l, r).expect("shares boundary")
}

/// Forwards a singleton goal node from one input of a merge node with
/// `inputs` inputs to its output.
pub fn make_merge_rule(inputs: usize) -> RewriteRule {
    let mut l = StringGraph::new();
    let mut r = StringGraph::new();
    for side in [&mut l, &mut r] {
        var_wire(side, "a", "alpha");
        var_wire(side, "b", "alpha");
        side.add_merge("m");
        var_wire(side, "o", "beta");
        side.add_edge("b", "m", None);
        for j in 1..inputs {
            let v = format!("v{j}");
            var_wire(side, &v, &format!("alpha{j}"));
            side.add_edge(v.as_str(), "m", None);
        }
    }
    goal_node(&mut l, "g", Datum::List(vec![Datum::var("g")]));
    l.add_edge("a", "g", None);
    l.add_edge("g", "b", None);
    l.add_edge("m", "o", None);

    r.add_edge("a", "b", None);
    var_wire(&mut r, "x", "beta");
    goal_node(&mut r, "h", Datum::List(vec![Datum::var("g")]));
    r.add_edge("m", "x", None);
    r.add_edge("x", "h", None);
    r.add_edge("h", "o", None);
    RewriteRule::new(format!("merge[{inputs}]"), l, r).expect("shares boundary")
}

/// Fuses merge node `m1` (with `p` inputs) feeding merge node `m2` (with `q`
/// further inputs) into a single merge node that keeps `m2`'s id.
pub fn merge_fusion_rule(p: usize, q: usize) -> RewriteRule {
    let mut l = StringGraph::new();
    let mut r = StringGraph::new();
    for side in [&mut l, &mut r] {
        side.add_merge("m2");
        var_wire(side, "o", "beta");
        side.add_edge("m2", "o", None);
        for j in 1..=p {
            var_wire(side, &format!("u{j}"), &format!("alpha{j}"));
        }
        for j in 1..=q {
            var_wire(side, &format!("v{j}"), &format!("gamma{j}"));
            side.add_edge(format!("v{j}"), "m2", None);
        }
    }
    l.add_merge("m1");
    var_wire(&mut l, "w", "delta");
    l.add_edge("m1", "w", None);
    l.add_edge("w", "m2", None);
    for j in 1..=p {
        l.add_edge(format!("u{j}"), "m1", None);
        r.add_edge(format!("u{j}"), "m2", None);
    }
    RewriteRule::new(format!("merge-fusion[{p},{q}]"), l, r).expect("shares boundary")
}
