use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_state, step_at, EvalError, EvalState, Site, Strategy};
use crate::data::GoalId;
use crate::stringgraph::{NodeData, StringGraph, VertexId};

/// Which site to step next. Goal-list unfolding always comes first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalOrder {
    /// Sites nearest the graph inputs first, ties by node id.
    #[default]
    Leftmost,
    /// Sites furthest from the graph inputs first.
    Rightmost,
    /// The site holding the smallest goal id.
    Oldest,
}

impl std::str::FromStr for EvalOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "leftmost" => Ok(EvalOrder::Leftmost),
            "rightmost" => Ok(EvalOrder::Rightmost),
            "oldest" => Ok(EvalOrder::Oldest),
            other => Err(format!("unknown order {other:?} (expected leftmost, rightmost or oldest)")),
        }
    }
}

/// Step budget per branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fuel {
    Steps(usize),
    Unlimited,
}

impl Fuel {
    pub fn allows(&self, steps: usize) -> bool {
        match self {
            Fuel::Steps(n) => steps < *n,
            Fuel::Unlimited => true,
        }
    }
}

pub const DEFAULT_FUEL: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    pub order: EvalOrder,
    pub fuel: Fuel,
    /// Graph-tactic nesting depth this evaluation runs at.
    pub depth: usize,
    /// Check goal conservation and well-formedness after every step.
    pub check: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { order: EvalOrder::Leftmost, fuel: Fuel::Steps(DEFAULT_FUEL), depth: 0, check: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Leaf {
    Enf(EvalState),
    FuelExhausted(EvalState),
}

impl Leaf {
    pub fn state(&self) -> &EvalState {
        match self {
            Leaf::Enf(s) | Leaf::FuelExhausted(s) => s,
        }
    }
}

/// BFS distance of every vertex from the graph inputs.
fn layers(g: &StringGraph) -> BTreeMap<VertexId, usize> {
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::new();
    for i in g.inputs() {
        dist.insert(i.clone(), 0);
        queue.push_back(i);
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for (_, e) in g.out_edges(&v) {
            if !dist.contains_key(&e.target) {
                dist.insert(e.target.clone(), d + 1);
                queue.push_back(e.target.clone());
            }
        }
    }
    dist
}

fn site_goal(s: &EvalState, site: &Site) -> Option<GoalId> {
    let n = match site {
        Site::Eval { goal_node, .. } | Site::Merge { goal_node, .. } => goal_node,
        Site::Unfold(_) => return None,
    };
    match s.graph.node_data(n) {
        Some(NodeData::Goals(d)) => d.as_goal_list().and_then(|l| l.first().copied()),
        _ => None,
    }
}

fn site_node(site: &Site) -> Option<&VertexId> {
    match site {
        Site::Eval { node, .. } | Site::Merge { node, .. } => Some(node),
        Site::Unfold(_) => None,
    }
}

/// The site `order` picks.
pub fn choose_site(s: &EvalState, order: EvalOrder) -> Option<Site> {
    let mut sites = s.sites();
    if sites.len() <= 1 {
        return sites.pop();
    }
    match order {
        EvalOrder::Oldest => sites.into_iter().min_by_key(|x| (site_goal(s, x), x.clone())),
        EvalOrder::Leftmost | EvalOrder::Rightmost => {
            let dist = layers(&s.graph);
            let key = |x: &Site| site_node(x).and_then(|n| dist.get(n)).copied().unwrap_or(usize::MAX);
            if order == EvalOrder::Leftmost {
                sites.into_iter().min_by_key(|x| (key(x), x.clone()))
            } else {
                sites.into_iter().max_by_key(|x| (key(x), std::cmp::Reverse(x.clone())))
            }
        }
    }
}

pub type Frame = Box<dyn Iterator<Item = Result<EvalState, EvalError>>>;

/// The children of `s` under `config`, in branch order. Empty for ENF
/// states and stuck ones alike.
pub fn successors(strategy: &Strategy, s: &EvalState, config: &EvalConfig) -> Result<Frame, EvalError> {
    match choose_site(s, config.order) {
        None => Ok(Box::new(std::iter::empty())),
        Some(site) => step_at(s, &site, &strategy.ctx, config.depth),
    }
}

/// Depth-first, lazily expanded tree of evaluations; iterating yields its
/// leaves. Branches where a goal is stuck are dropped and counted.
pub struct EvalTree {
    strategy: Arc<Strategy>,
    config: EvalConfig,
    stack: Vec<Frame>,
    pub failed: usize,
}

impl EvalTree {
    pub fn new(strategy: Arc<Strategy>, root: EvalState, config: EvalConfig) -> Self {
        EvalTree { strategy, config, stack: vec![Box::new(std::iter::once(Ok(root)))], failed: 0 }
    }

    /// The children of a non-leaf state, in branch order.
    pub fn successors(&self, s: &EvalState) -> Result<Frame, EvalError> {
        successors(&self.strategy, s, &self.config)
    }
}

impl Iterator for EvalTree {
    type Item = Result<Leaf, EvalError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let top = self.stack.last_mut()?;
            let Some(next) = top.next() else {
                self.stack.pop();
                continue;
            };
            let s = match next {
                Ok(s) => s,
                Err(e) => return Some(Err(e)),
            };
            if self.config.check {
                if let Err(e) = check_state(&s, &self.strategy) {
                    return Some(Err(e));
                }
            }
            if s.is_enf() {
                return Some(Ok(Leaf::Enf(s)));
            }
            if !self.config.fuel.allows(s.steps()) {
                return Some(Ok(Leaf::FuelExhausted(s)));
            }
            match self.successors(&s) {
                Ok(frame) => {
                    let mut frame = frame.peekable();
                    if frame.peek().is_none() {
                        self.failed += 1;
                    } else {
                        self.stack.push(Box::new(frame));
                    }
                }
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

/// Lazily evaluates `root` to every reachable ENF (or fuel-exhausted) leaf.
pub fn eval_to_enf(strategy: Arc<Strategy>, root: EvalState, config: EvalConfig) -> EvalTree {
    EvalTree::new(strategy, root, config)
}
