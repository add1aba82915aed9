//! Evaluation of strategy graphs by moving goal nodes through them.
//!
//! Every step is a DPO rewrite: goal-list unfolding, eval at a tactic node,
//! or forwarding through a merge node. Goals on one wire are kept in arrival
//! order, the earliest arrival furthest downstream.

mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Datum, GoalId, Substitution};
use crate::goaltype::GoalTypeError;
use crate::prover::{ProofState, Sequent};
use crate::rewrite::{
    apply_rewrite, goal_list_rule, make_eval_rule, make_merge_rule, RewriteError, RewriteRule, EVAL_GOAL,
    EVAL_INPUT, EVAL_TACTIC,
};
use crate::stringgraph::{
    check_well_formed, find_first_matching, Matching, NodeData, PortDir, Signature, StringGraph, VertexId,
    VertexKind,
};
use crate::tactic::{Context, Evaluation, Evaluations, TacticError, TacticSignature};

pub use tree::{choose_site, eval_to_enf, successors, EvalConfig, EvalOrder, EvalTree, Frame, Fuel, Leaf, DEFAULT_FUEL};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no eval site at {0}")]
    NoSuchSite(String),
    #[error("goal {goal} does not have type {wire_type} required by the output of {node}")]
    TypeViolation { goal: String, wire_type: String, node: String },
    #[error("strategy has no input {0}")]
    UnknownInput(usize),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Tactic(#[from] TacticError),
    #[error(transparent)]
    GoalType(#[from] GoalTypeError),
}

/// A strategy graph with an ordered boundary and the context it runs in.
#[derive(Clone, Debug)]
pub struct Strategy {
    pub name: String,
    pub graph: StringGraph,
    pub inputs: Vec<VertexId>,
    pub outputs: Vec<VertexId>,
    pub ctx: Arc<Context>,
}

impl Strategy {
    /// Boundary ordered by vertex id.
    pub fn new(name: impl Into<String>, graph: StringGraph, ctx: Arc<Context>) -> Self {
        let inputs = graph.inputs().into_iter().collect();
        let outputs = graph.outputs().into_iter().collect();
        Strategy { name: name.into(), graph, inputs, outputs, ctx }
    }

    pub fn with_boundary(
        name: impl Into<String>,
        graph: StringGraph,
        inputs: Vec<VertexId>,
        outputs: Vec<VertexId>,
        ctx: Arc<Context>,
    ) -> Result<Self, EvalError> {
        let name = name.into();
        let (ins, outs) = (graph.inputs(), graph.outputs());
        let same = |given: &[VertexId], actual: &BTreeSet<VertexId>| {
            given.len() == actual.len() && given.iter().all(|v| actual.contains(v))
        };
        if !same(&inputs, &ins) || !same(&outputs, &outs) {
            return Err(EvalError::Invariant(format!("declared boundary of {name} does not match its graph")));
        }
        Ok(Strategy { name, graph, inputs, outputs, ctx })
    }

    pub fn input_types(&self) -> Vec<String> {
        self.inputs.iter().map(|v| type_name(&self.graph, v)).collect()
    }

    pub fn output_types(&self) -> Vec<String> {
        self.outputs.iter().map(|v| type_name(&self.graph, v)).collect()
    }

    pub fn signature(&self) -> TacticSignature {
        TacticSignature { inputs: self.input_types(), outputs: self.output_types() }
    }

    /// The signature graphs of this strategy are checked against: all goal
    /// types of the context and each tactic node's own port types.
    pub fn wf_signature(&self) -> Signature {
        let mut sig = Signature::new();
        for (id, k) in self.graph.vertices() {
            if let VertexKind::Node(NodeData::Tactic(Datum::Sym(name))) = k {
                if sig.dom(name).is_none() {
                    if let Some(s) = node_signature(&self.graph, id) {
                        sig.add_map(name.clone(), s.inputs, s.outputs);
                    }
                }
            }
        }
        // Port types of the nodes must themselves be declared.
        sig.types = self.ctx.types.names().cloned().collect();
        sig
    }
}

fn type_name(g: &StringGraph, v: &VertexId) -> String {
    g.wire_type(v).and_then(|d| d.as_sym()).unwrap_or("?").to_owned()
}

/// The signature a tactic node is used at, read off its port wires.
pub fn node_signature(g: &StringGraph, node: &VertexId) -> Option<TacticSignature> {
    let types = |dir| -> Option<Vec<String>> {
        g.ports(node, dir)
            .iter()
            .map(|(_, w)| g.wire_type(w).and_then(|d| d.as_sym()).map(str::to_owned))
            .collect()
    };
    Some(TacticSignature { inputs: types(PortDir::In)?, outputs: types(PortDir::Out)? })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalRecord {
    pub id: String,
    pub goal: String,
}

/// One applied step, as reported to the debugger.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step_no: usize,
    pub site: String,
    pub tactic: String,
    pub branch_index: usize,
    pub new_goals: Vec<GoalRecord>,
}

pub const UNFOLD_STEP: &str = "<unfold>";
pub const MERGE_STEP: &str = "<merge>";

/// One branch of an evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalState {
    pub graph: StringGraph,
    pub proof: ProofState,
    pub trace: Vec<TraceEntry>,
}

/// Where a step can happen next.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Site {
    /// Goal nodes holding other than one goal.
    Unfold(Vec<VertexId>),
    /// A singleton goal node directly on input `port` of a tactic node.
    Eval { goal_node: VertexId, node: VertexId, port: usize },
    /// A singleton goal node directly on an input of a merge node.
    Merge { goal_node: VertexId, node: VertexId },
}

impl Site {
    pub fn describe(&self) -> String {
        match self {
            Site::Unfold(ns) => ns.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(","),
            Site::Eval { goal_node, node, port } => format!("{goal_node}@{node}.in{port}"),
            Site::Merge { goal_node, node } => format!("{goal_node}@{node}"),
        }
    }
}

impl EvalState {
    /// `s`'s graph with a goal node holding `goal` placed on input `input`
    /// (counting from 1): a fresh wire, then the goal node, then the input.
    pub fn seed(s: &Strategy, input: usize, goal: Sequent) -> Result<EvalState, EvalError> {
        let mut st = EvalState { graph: s.graph.clone(), proof: ProofState::new(), trace: vec![] };
        st.add_goal(s, input, goal)?;
        Ok(st)
    }

    /// Adds another goal on an input; it queues behind goals already there.
    pub fn add_goal(&mut self, s: &Strategy, input: usize, goal: Sequent) -> Result<GoalId, EvalError> {
        let wire = input.checked_sub(1).and_then(|i| s.inputs.get(i)).ok_or(EvalError::UnknownInput(input))?;
        let mut head = wire.clone();
        while let Some(e) = self.graph.predecessor(&head) {
            head = e.source.clone();
        }
        let ty = self.graph.wire_type(&head).cloned().ok_or_else(|| EvalError::Invariant(format!("{head} is not a wire")))?;
        let id = self.proof.add_goal(goal);
        let up = self.graph.fresh_id(wire.as_str());
        let node = self.graph.fresh_id("goal");
        self.graph.add_vertex(up.clone(), VertexKind::Wire(ty));
        self.graph.add_vertex(node.clone(), VertexKind::Node(NodeData::Goals(Datum::goals([id]))));
        self.graph.add_edge(up, node.clone(), None);
        self.graph.add_edge(node, head, None);
        Ok(id)
    }

    pub fn steps(&self) -> usize {
        self.trace.len()
    }

    /// Goal nodes and their goal lists.
    pub fn goal_nodes(&self) -> Vec<(VertexId, Vec<GoalId>)> {
        self.graph
            .vertices()
            .filter_map(|(id, k)| match k {
                VertexKind::Node(NodeData::Goals(d)) => Some((id.clone(), d.as_goal_list().unwrap_or_default())),
                _ => None,
            })
            .collect()
    }

    /// Goals sit only on chains ending in graph outputs.
    pub fn is_enf(&self) -> bool {
        self.goal_nodes().iter().all(|(n, _)| self.reaches_output(n))
    }

    fn reaches_output(&self, n: &VertexId) -> bool {
        let mut cur = n.clone();
        let mut seen = BTreeSet::new();
        while let Some(e) = self.graph.successor(&cur) {
            let next = e.target.clone();
            if !seen.insert(next.clone()) {
                return false;
            }
            match self.graph.vertex(&next) {
                Some(VertexKind::Wire(_)) | Some(VertexKind::Node(NodeData::Goals(_))) => cur = next,
                _ => return false,
            }
        }
        self.graph.is_wire(&cur)
    }

    /// Every place a step could be taken, unordered.
    pub fn sites(&self) -> Vec<Site> {
        let nodes = self.goal_nodes();
        let lists: Vec<VertexId> = nodes.iter().filter(|(_, g)| g.len() != 1).map(|(n, _)| n.clone()).collect();
        if !lists.is_empty() {
            return vec![Site::Unfold(lists)];
        }
        let mut out = Vec::new();
        for (n, _) in nodes {
            let Some(e) = self.graph.successor(&n) else { continue };
            let b = e.target.clone();
            let Some(e2) = self.graph.successor(&b) else { continue };
            let target = e2.target.clone();
            match self.graph.node_data(&target) {
                Some(NodeData::Tactic(_)) => {
                    if let Some(port) = e2.port.as_ref().and_then(|p| p.index.as_int()) {
                        out.push(Site::Eval { goal_node: n, node: target, port });
                    }
                }
                Some(NodeData::Merge) => out.push(Site::Merge { goal_node: n, node: target }),
                _ => {}
            }
        }
        out
    }

    fn single_goal(&self, node: &VertexId) -> Result<GoalId, EvalError> {
        match self.graph.node_data(node) {
            Some(NodeData::Goals(d)) => match d.as_goal_list().as_deref() {
                Some([g]) => Ok(*g),
                _ => Err(EvalError::NoSuchSite(format!("{node} is not a singleton goal node"))),
            },
            _ => Err(EvalError::NoSuchSite(format!("{node} is not a goal node"))),
        }
    }

    fn sequent(&self, g: GoalId) -> Result<&Sequent, EvalError> {
        self.proof.goal(g).ok_or_else(|| EvalError::Invariant(format!("{g} is not in the proof state")))
    }

    fn record(&mut self, site: &Site, tactic: &str, branch_index: usize, new: &[GoalId]) {
        let new_goals = new
            .iter()
            .map(|g| GoalRecord { id: g.to_string(), goal: self.proof.goal(*g).map(|s| s.to_string()).unwrap_or_default() })
            .collect();
        self.trace.push(TraceEntry {
            step_no: self.trace.len() + 1,
            site: site.describe(),
            tactic: tactic.to_owned(),
            branch_index,
            new_goals,
        });
    }
}

/// Applies a generated rule at the matching found from `seed`.
fn rewrite_at(
    g: &StringGraph,
    rule: &RewriteRule,
    seed: &[(VertexId, VertexId)],
    subst: &Substitution,
) -> Result<(StringGraph, Matching), EvalError> {
    let m = find_first_matching(&rule.lhs, g, seed)
        .ok_or_else(|| EvalError::NoSuchSite(format!("{} does not match at {seed:?}", rule.name)))?;
    let mut out = apply_rewrite(g, rule, &m, subst)?.graph;
    out.normalize();
    Ok((out, m))
}

/// Rewrites every goal node holding other than one goal into singleton
/// goal nodes, downstream first; empty nodes disappear.
pub fn unfold_goal_lists(s: &EvalState) -> Result<EvalState, EvalError> {
    let mut st = s.clone();
    let lists: Vec<(VertexId, Vec<GoalId>)> = st.goal_nodes().into_iter().filter(|(_, g)| g.len() != 1).collect();
    if lists.is_empty() {
        return Ok(st);
    }
    for (node, goals) in &lists {
        let rule = goal_list_rule(goals.len());
        st.graph = rewrite_at(&st.graph, &rule, &[("g".into(), node.clone())], &Substitution::new())?.0;
    }
    let site = Site::Unfold(lists.into_iter().map(|(n, _)| n).collect());
    st.record(&site, UNFOLD_STEP, 0, &[]);
    Ok(st)
}

/// Moves a singleton goal node from an input of a merge node to its output.
pub fn propagate_merge(s: &EvalState, goal_node: &VertexId, ctx: &Context) -> Result<EvalState, EvalError> {
    let goal = s.single_goal(goal_node)?;
    let b = s
        .graph
        .successor(goal_node)
        .map(|e| e.target.clone())
        .ok_or_else(|| EvalError::NoSuchSite(goal_node.to_string()))?;
    let merge = s
        .graph
        .successor(&b)
        .map(|e| e.target.clone())
        .filter(|m| matches!(s.graph.node_data(m), Some(NodeData::Merge)))
        .ok_or_else(|| EvalError::NoSuchSite(format!("{goal_node} is not on a merge input")))?;
    let out_wire = s.graph.successor(&merge).map(|e| e.target.clone());
    let out_ty = out_wire.as_ref().and_then(|w| s.graph.wire_type(w)).and_then(|d| d.as_sym());
    if let Some(ty) = out_ty {
        let seq = s.sequent(goal)?;
        if !ctx.types.matches_named(seq, ty)? {
            return Err(EvalError::TypeViolation { goal: seq.to_string(), wire_type: ty.to_owned(), node: merge.to_string() });
        }
    }
    let rule = make_merge_rule(s.graph.in_degree(&merge));
    let seed = [("g".into(), goal_node.clone()), ("b".into(), b), ("m".into(), merge.clone())];
    let mut st = s.clone();
    st.graph = rewrite_at(&s.graph, &rule, &seed, &Substitution::new())?.0;
    st.record(&Site::Merge { goal_node: goal_node.clone(), node: merge }, MERGE_STEP, 0, &[]);
    Ok(st)
}

/// The successors of an eval step: one state per evaluation of the tactic
/// on the goal, produced lazily.
pub struct EvalSuccessors {
    base: EvalState,
    rule: RewriteRule,
    matching: Matching,
    parent: GoalId,
    tactic: String,
    site: Site,
    evals: Evaluations,
    index: usize,
}

impl Iterator for EvalSuccessors {
    type Item = Result<EvalState, EvalError>;

    fn next(&mut self) -> Option<Self::Item> {
        let e = self.evals.next()?;
        let i = self.index;
        self.index += 1;
        Some(e.map_err(EvalError::from).and_then(|e| self.successor(i, e)))
    }
}

impl EvalSuccessors {
    fn successor(&self, branch: usize, e: Evaluation) -> Result<EvalState, EvalError> {
        let mut st = self.base.clone();
        let flat: Vec<Sequent> = e.iter().flatten().cloned().collect();
        let ids = st.proof.expand(self.parent, &self.tactic, &flat);
        let mut subst = Substitution::new();
        let mut next = ids.iter().copied();
        for (c, list) in e.iter().enumerate() {
            subst.bind(format!("gs_{}", c + 1), Datum::goals(next.by_ref().take(list.len())));
        }
        let mut g = apply_rewrite(&st.graph, &self.rule, &self.matching, &subst)?.graph;
        g.normalize();
        st.graph = g;
        st.record(&self.site, &self.tactic, branch, &ids);
        Ok(st)
    }
}

/// The eval step at a singleton goal node directly on input `port` of a
/// tactic node.
pub fn eval_step(
    s: &EvalState,
    goal_node: &VertexId,
    node: &VertexId,
    port: usize,
    ctx: &Context,
    depth: usize,
) -> Result<EvalSuccessors, EvalError> {
    let parent = s.single_goal(goal_node)?;
    let site = Site::Eval { goal_node: goal_node.clone(), node: node.clone(), port };
    let Some(input) = s.graph.ports(node, PortDir::In).into_iter().find(|(i, _)| *i == port).map(|(_, w)| w) else {
        return Err(EvalError::NoSuchSite(site.describe()));
    };
    let rule = make_eval_rule(&s.graph, node, port);
    let seed = [
        (VertexId::from(EVAL_GOAL), goal_node.clone()),
        (VertexId::from(EVAL_INPUT), input),
        (VertexId::from(EVAL_TACTIC), node.clone()),
    ];
    let matching =
        find_first_matching(&rule.lhs, &s.graph, &seed).ok_or_else(|| EvalError::NoSuchSite(site.describe()))?;
    let name = matching
        .subst
        .get("t")
        .and_then(|d| d.as_sym())
        .ok_or_else(|| EvalError::NoSuchSite(format!("{node} has no tactic name")))?
        .to_owned();
    let sig = node_signature(&s.graph, node).ok_or_else(|| EvalError::NoSuchSite(format!("{node} has untyped ports")))?;
    let tactic = ctx.tactics.lookup(&name, &sig);
    let evals = tactic.apply(port, s.sequent(parent)?, depth);
    Ok(EvalSuccessors { base: s.clone(), rule, matching, parent, tactic: name, site, evals, index: 0 })
}

/// All successors of one step at `site`.
pub fn step_at(
    s: &EvalState,
    site: &Site,
    ctx: &Context,
    depth: usize,
) -> Result<Box<dyn Iterator<Item = Result<EvalState, EvalError>>>, EvalError> {
    Ok(match site {
        Site::Unfold(_) => Box::new(std::iter::once(unfold_goal_lists(s))),
        Site::Merge { goal_node, .. } => Box::new(std::iter::once(propagate_merge(s, goal_node, ctx))),
        Site::Eval { goal_node, node, port } => Box::new(eval_step(s, goal_node, node, *port, ctx, depth)?),
    })
}

/// Goal lists on each output of `strategy`, downstream (earliest) first.
pub fn output_goals(s: &EvalState, strategy: &Strategy) -> Vec<Vec<GoalId>> {
    strategy
        .outputs
        .iter()
        .map(|o| {
            let mut goals = Vec::new();
            let mut cur = o.clone();
            while let Some(e) = s.graph.predecessor(&cur) {
                let up = e.source.clone();
                match s.graph.node_data(&up) {
                    Some(NodeData::Goals(d)) => goals.extend(d.as_goal_list().unwrap_or_default()),
                    Some(_) => break,
                    None => {}
                }
                cur = up;
            }
            goals
        })
        .collect()
}

pub fn output_sequents(s: &EvalState, strategy: &Strategy) -> Vec<Vec<Sequent>> {
    output_goals(s, strategy)
        .into_iter()
        .map(|gs| gs.into_iter().filter_map(|g| s.proof.goal(g).cloned()).collect())
        .collect()
}

/// Open goals of the proof equal the goals held in goal nodes, as multisets.
pub fn check_goal_conservation(s: &EvalState) -> Result<(), EvalError> {
    let mut held: BTreeMap<GoalId, usize> = BTreeMap::new();
    for (_, gs) in s.goal_nodes() {
        for g in gs {
            *held.entry(g).or_default() += 1;
        }
    }
    let open: BTreeMap<GoalId, usize> = s.proof.open_goals().iter().map(|g| (*g, 1)).collect();
    if held == open {
        Ok(())
    } else {
        Err(EvalError::Invariant(format!("graph holds {held:?} but open goals are {open:?}")))
    }
}

/// Goal conservation plus well-formedness of the graph.
pub fn check_state(s: &EvalState, strategy: &Strategy) -> Result<(), EvalError> {
    check_goal_conservation(s)?;
    let v = check_well_formed(&s.graph, &strategy.wf_signature());
    if let Some(first) = v.first() {
        return Err(EvalError::Invariant(format!("graph is not well formed: {first}")));
    }
    Ok(())
}
