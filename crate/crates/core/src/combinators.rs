//! Composition of strategy graphs (`then`, `repeat`), graph tactics, the
//! `OR`/`ORELSE` choice combinators and unfolding of tactic nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::eval::{eval_to_enf, output_sequents, EvalConfig, EvalError, EvalState, Leaf, Strategy};
use crate::prover::Sequent;
use crate::rewrite::RewriteRule;
use crate::stringgraph::{plug, PlugError, PortDir, StringGraph, VertexId, VertexKind};
use crate::tactic::{Context, Evaluation, Evaluations, TacticError, TacticSignature, TypedTactic};

/// Nesting limit for graph tactics evaluating graph tactics.
pub const MAX_DEPTH: usize = 32;

fn merged_context(a: &Context, b: &Context) -> Arc<Context> {
    let mut ctx = a.clone();
    ctx.extend_from(b);
    Arc::new(ctx)
}

/// Plugs the outputs of `g` into the inputs of `h`, in order.
pub fn then(g: &Strategy, h: &Strategy) -> Result<Strategy, PlugError> {
    if g.outputs.len() != h.inputs.len() {
        return Err(PlugError::ArityMismatch(format!(
            "{} has {} outputs but {} has {} inputs",
            g.name,
            g.outputs.len(),
            h.name,
            h.inputs.len()
        )));
    }
    let pairing: Vec<_> = g.outputs.iter().cloned().zip(h.inputs.iter().cloned()).collect();
    let p = plug(&g.graph, &h.graph, &pairing)?;
    // A graph input of `g` that was also a plugged output was fused away;
    // it survives as the vertex it was fused into.
    let follow = |v: &VertexId| p.fused.get(v).cloned().unwrap_or_else(|| v.clone());
    let inputs = g.inputs.iter().map(follow).collect();
    let outputs = h.outputs.iter().map(|v| p.renaming[v].clone()).collect();
    Ok(Strategy {
        name: format!("{};{}", g.name, h.name),
        graph: p.graph,
        inputs,
        outputs,
        ctx: merged_context(&g.ctx, &h.ctx),
    })
}

/// Feeds each named output back into the named input through a merge node
/// placed in front of the input's consumer. The input stays a graph input.
pub fn repeat(g: &Strategy, loops: &[(VertexId, VertexId)]) -> Result<Strategy, PlugError> {
    let mut graph = g.graph.clone();
    let mut outputs = g.outputs.clone();
    let mut merges: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    for (o, i) in loops {
        if !outputs.contains(o) {
            return Err(PlugError::ArityMismatch(format!("{o} is not an output")));
        }
        if !g.inputs.contains(i) {
            return Err(PlugError::ArityMismatch(format!("{i} is not an input")));
        }
        let (ot, it) = (graph.wire_type(o).cloned(), graph.wire_type(i).cloned());
        if ot != it {
            return Err(PlugError::TypeMismatch {
                output: ot.unwrap_or(crate::data::Datum::sym("?")),
                input: it.unwrap_or(crate::data::Datum::sym("?")),
            });
        }
        let merge = match merges.get(i) {
            Some(m) => m.clone(),
            None => {
                let m = graph.fresh_id("merge");
                let inner = graph.fresh_id(i.as_str());
                let ty = it.expect("input is a wire");
                let consumer = graph.successor(i).cloned();
                graph.add_merge(m.clone());
                graph.add_vertex(inner.clone(), VertexKind::Wire(ty));
                match consumer {
                    Some(e) => {
                        let idx: BTreeSet<usize> =
                            graph.edges().iter().position(|x| *x == e).into_iter().collect();
                        graph.remove_edges(&idx);
                        graph.add_edge(inner.clone(), e.target, e.port);
                    }
                    None => {
                        // `i` was an isolated wire; the loop feeds the new wire,
                        // which becomes the output in its place.
                        if let Some(pos) = outputs.iter().position(|x| x == i) {
                            outputs[pos] = inner.clone();
                        }
                    }
                }
                graph.add_edge(i.clone(), m.clone(), None);
                graph.add_edge(m.clone(), inner, None);
                merges.insert(i.clone(), m.clone());
                m
            }
        };
        graph.add_edge(o.clone(), merge, None);
        outputs.retain(|x| x != o);
    }
    Ok(Strategy { name: g.name.clone(), graph, inputs: g.inputs.clone(), outputs, ctx: g.ctx.clone() })
}

/// A strategy graph used as a tactic. Evaluates with its own order and fuel.
#[derive(Clone, Debug)]
pub struct GraphTactic {
    pub name: String,
    pub strategy: Arc<Strategy>,
    pub config: EvalConfig,
    signature: TacticSignature,
}

impl GraphTactic {
    pub fn new(name: impl Into<String>, strategy: Arc<Strategy>, config: EvalConfig) -> Self {
        let signature = strategy.signature();
        GraphTactic { name: name.into(), strategy, config, signature }
    }

    /// Places `[goal]` on input `port`, evaluates to ENF and collects the
    /// goals left on each output.
    pub fn eval(&self, port: usize, goal: &Sequent, depth: usize) -> Evaluations {
        if depth >= MAX_DEPTH {
            return Box::new(std::iter::once(Err(TacticError::RecursionLimit(MAX_DEPTH))));
        }
        let nested = |e: EvalError| TacticError::Nested { tactic: self.name.clone(), msg: e.to_string() };
        let Some(alpha) = port.checked_sub(1).and_then(|i| self.signature.inputs.get(i)) else {
            return Box::new(std::iter::once(Err(TacticError::BadPort { tactic: self.name.clone(), port })));
        };
        match self.strategy.ctx.types.matches_named(goal, alpha) {
            Ok(true) => {}
            Ok(false) => return Box::new(std::iter::empty()),
            Err(e) => return Box::new(std::iter::once(Err(e.into()))),
        }
        let root = match EvalState::seed(&self.strategy, port, goal.clone()) {
            Ok(r) => r,
            Err(e) => return Box::new(std::iter::once(Err(nested(e)))),
        };
        let config = EvalConfig { depth: depth + 1, ..self.config };
        let strategy = self.strategy.clone();
        let name = self.name.clone();
        let mut seen = BTreeSet::new();
        let leaves = eval_to_enf(strategy.clone(), root, config);
        Box::new(leaves.filter_map(move |leaf| match leaf {
            Ok(Leaf::Enf(s)) => {
                let e: Evaluation = output_sequents(&s, &strategy);
                seen.insert(e.clone()).then_some(Ok(e))
            }
            Ok(Leaf::FuelExhausted(_)) => None,
            Err(e) => Some(Err(TacticError::Nested { tactic: name.clone(), msg: e.to_string() })),
        }))
    }
}

impl TypedTactic for GraphTactic {
    fn name(&self) -> &str {
        &self.name
    }

    fn signature(&self) -> &TacticSignature {
        &self.signature
    }

    fn apply(&self, port: usize, goal: &Sequent, depth: usize) -> Evaluations {
        self.eval(port, goal, depth)
    }

    fn unfold_rules(&self, g: &StringGraph, node: &VertexId) -> Option<Vec<(RewriteRule, Arc<Context>)>> {
        Some(vec![(unfold(g, node, self), self.strategy.ctx.clone())])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChoiceKind {
    /// Union of both operands' evaluations.
    Or,
    /// The first operand's evaluations, or the second's when there are none.
    OrElse,
}

#[derive(Clone, Debug)]
pub struct Choice {
    pub name: String,
    pub kind: ChoiceKind,
    pub left: Arc<GraphTactic>,
    pub right: Arc<GraphTactic>,
}

impl Choice {
    pub fn new(
        name: impl Into<String>,
        kind: ChoiceKind,
        left: Arc<GraphTactic>,
        right: Arc<GraphTactic>,
    ) -> Result<Self, TacticError> {
        let name = name.into();
        if left.signature() != right.signature() {
            return Err(TacticError::SignatureMismatch(name));
        }
        Ok(Choice { name, kind, left, right })
    }
}

impl TypedTactic for Choice {
    fn name(&self) -> &str {
        &self.name
    }

    fn signature(&self) -> &TacticSignature {
        self.left.signature()
    }

    fn apply(&self, port: usize, goal: &Sequent, depth: usize) -> Evaluations {
        let right = self.right.clone();
        let goal = goal.clone();
        match self.kind {
            ChoiceKind::Or => {
                let mut seen = BTreeSet::new();
                let left = self.left.apply(port, &goal, depth);
                // The right operand only runs once the left is exhausted.
                let rest = std::iter::once(()).flat_map(move |_| right.apply(port, &goal, depth));
                Box::new(left.chain(rest).filter(move |r| match r {
                    Ok(e) => seen.insert(e.clone()),
                    Err(_) => true,
                }))
            }
            ChoiceKind::OrElse => {
                let mut first = self.left.apply(port, &goal, depth).peekable();
                if first.peek().is_some() {
                    Box::new(first)
                } else {
                    right.apply(port, &goal, depth)
                }
            }
        }
    }

    fn unfold_rules(&self, g: &StringGraph, node: &VertexId) -> Option<Vec<(RewriteRule, Arc<Context>)>> {
        Some(vec![
            (unfold(g, node, &self.left), self.left.strategy.ctx.clone()),
            (unfold(g, node, &self.right), self.right.strategy.ctx.clone()),
        ])
    }
}

/// The rule replacing tactic node `node` of `g` (with its port wires) by
/// the inner graph of `t` on the same boundary.
pub fn unfold(g: &StringGraph, node: &VertexId, t: &GraphTactic) -> RewriteRule {
    let ins = g.ports(node, PortDir::In);
    let outs = g.ports(node, PortDir::Out);
    let mut lhs = StringGraph::new();
    lhs.add_vertex(node.clone(), g.vertex(node).cloned().expect("node exists"));
    for (i, w) in &ins {
        lhs.add_vertex(w.clone(), g.vertex(w).cloned().expect("wire exists"));
        lhs.connect_in(w.clone(), node.clone(), *i);
    }
    for (i, w) in &outs {
        lhs.add_vertex(w.clone(), g.vertex(w).cloned().expect("wire exists"));
        lhs.connect_out(node.clone(), *i, w.clone());
    }

    let inner = &t.strategy;
    // Inner boundary vertices take the ids of the outer wires they stand
    // for; everything else is prefixed with the node id.
    let mut rename: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    for ((_, w), v) in ins.iter().zip(&inner.inputs) {
        rename.insert(v.clone(), w.clone());
    }
    let mut bridges = Vec::new();
    for ((_, w), v) in outs.iter().zip(&inner.outputs) {
        if rename.contains_key(v) {
            bridges.push((rename[v].clone(), w.clone()));
        } else {
            rename.insert(v.clone(), w.clone());
        }
    }
    let prefix = node.as_str().to_owned();
    let mut rhs = inner
        .graph
        .rename_vertices(|v| rename.get(v).cloned().unwrap_or_else(|| VertexId::new(format!("{prefix}/{v}"))));
    for (_, w) in ins.iter().chain(&outs) {
        if !rhs.contains(w) {
            rhs.add_vertex(w.clone(), g.vertex(w).cloned().expect("wire exists"));
        }
    }
    for (a, b) in bridges {
        rhs.add_edge(a, b, None);
    }
    RewriteRule::new(format!("unfold[{node}:{}]", t.name), lhs, rhs).expect("graph tactic boundary matches its node")
}

/// Strategies obtained by unfolding tactic node `node` of `s`, one per
/// rule the tactic unfolds to. Empty if the node is not a graph tactic.
pub fn unfold_in_strategy(s: &Strategy, node: &VertexId) -> Result<Vec<Strategy>, crate::rewrite::RewriteError> {
    let Some(sig) = crate::eval::node_signature(&s.graph, node) else { return Ok(vec![]) };
    let Some(name) = s.graph.node_data(node).and_then(|d| match d {
        crate::stringgraph::NodeData::Tactic(n) => n.as_sym().map(str::to_owned),
        _ => None,
    }) else {
        return Ok(vec![]);
    };
    let tactic = s.ctx.tactics.lookup(&name, &sig);
    let Some(rules) = tactic.unfold_rules(&s.graph, node) else { return Ok(vec![]) };
    let mut out = Vec::new();
    for (rule, ctx) in rules {
        let seed = [(node.clone(), node.clone())];
        let m = crate::stringgraph::find_first_matching(&rule.lhs, &s.graph, &seed)
            .ok_or_else(|| crate::rewrite::RewriteError::BoundaryMismatch(format!("{} does not match", rule.name)))?;
        let mut graph = crate::rewrite::apply_rewrite(&s.graph, &rule, &m, &Default::default())?.graph;
        graph.normalize();
        out.push(Strategy {
            name: s.name.clone(),
            graph,
            inputs: s.inputs.clone(),
            outputs: s.outputs.clone(),
            ctx: merged_context(&s.ctx, &ctx),
        });
    }
    Ok(out)
}
