//! Typed tactics: signatures, the partition function, lifting of primitives
//! and the tactic registry.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::goaltype::{FeatureRegistry, GoalType, GoalTypeError, GoalTypeRegistry};
use crate::prover::{Primitive, Sequent};
use crate::rewrite::RewriteRule;
use crate::stringgraph::{StringGraph, VertexId};

/// One goal list per output.
pub type Evaluation = Vec<Vec<Sequent>>;

pub type Evaluations = Box<dyn Iterator<Item = Result<Evaluation, TacticError>>>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TacticError {
    #[error(transparent)]
    GoalType(#[from] GoalTypeError),
    #[error("tactic {tactic} has no input port {port}")]
    BadPort { tactic: String, port: usize },
    #[error("nested graph tactics exceed depth {0}")]
    RecursionLimit(usize),
    #[error("operands of {0} have different signatures")]
    SignatureMismatch(String),
    #[error("evaluation of {tactic} failed: {msg}")]
    Nested { tactic: String, msg: String },
}

/// Input and output goal-type names.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TacticSignature {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl TacticSignature {
    pub fn new(inputs: &[&str], outputs: &[&str]) -> Self {
        TacticSignature {
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for TacticSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> [{}]", self.inputs.join(" × "), self.outputs.join(", "))
    }
}

/// A tactic with a signature; `apply` is the function for input `port`
/// (counting from 1). `depth` is the current graph-tactic nesting.
pub trait TypedTactic: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn signature(&self) -> &TacticSignature;
    fn apply(&self, port: usize, goal: &Sequent, depth: usize) -> Evaluations;

    /// Rules replacing tactic node `node` of `g` by the graphs this tactic
    /// is built from, each with the context the graph needs. `None` for
    /// tactics that are not graphs.
    fn unfold_rules(&self, _g: &StringGraph, _node: &VertexId) -> Option<Vec<(RewriteRule, Arc<Context>)>> {
        None
    }
}

/// Lazily enumerates every way of distributing `items` over `n` lists where
/// item `k` may go to any list in `choices[k]`, keeping relative order inside
/// each list and skipping tuples already produced.
pub struct Partitions<T> {
    items: Vec<T>,
    choices: Vec<Vec<usize>>,
    n: usize,
    odometer: Option<Vec<usize>>,
    seen: BTreeSet<Vec<Vec<T>>>,
}

impl<T: Clone + Ord> Partitions<T> {
    pub fn new(items: Vec<T>, choices: Vec<Vec<usize>>, n: usize) -> Self {
        let start = (!choices.iter().any(|c| c.is_empty())).then(|| vec![0; items.len()]);
        Partitions { items, choices, n, odometer: start, seen: BTreeSet::new() }
    }

    fn advance(&mut self) {
        let Some(od) = &mut self.odometer else { return };
        for k in (0..od.len()).rev() {
            od[k] += 1;
            if od[k] < self.choices[k].len() {
                return;
            }
            od[k] = 0;
        }
        self.odometer = None;
    }
}

impl<T: Clone + Ord> Iterator for Partitions<T> {
    type Item = Vec<Vec<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let od = self.odometer.clone()?;
            let mut cells = vec![Vec::new(); self.n];
            for (k, &c) in od.iter().enumerate() {
                cells[self.choices[k][c]].push(self.items[k].clone());
            }
            self.advance();
            if self.seen.insert(cells.clone()) {
                return Some(cells);
            }
        }
    }
}

/// All partitions of `goals` into lists typed by `types`.
pub fn partitions(
    features: &FeatureRegistry,
    types: &[GoalType],
    goals: &[Sequent],
) -> Result<Partitions<Sequent>, GoalTypeError> {
    let mut choices = Vec::with_capacity(goals.len());
    for g in goals {
        let mut c = Vec::new();
        for (i, t) in types.iter().enumerate() {
            if features.matches(g, t)? {
                c.push(i);
            }
        }
        choices.push(c);
    }
    Ok(Partitions::new(goals.to_vec(), choices, types.len()))
}

/// A primitive lifted to a typed tactic: on a goal of the input type, every
/// partition of every primitive evaluation over the output types.
#[derive(Clone, Debug)]
pub struct AtomicTactic {
    pub name: String,
    pub signature: TacticSignature,
    inputs: Vec<GoalType>,
    outputs: Vec<GoalType>,
    features: FeatureRegistry,
    pub primitive: Arc<dyn Primitive>,
}

impl AtomicTactic {
    pub fn new(
        name: impl Into<String>,
        signature: TacticSignature,
        types: &GoalTypeRegistry,
        primitive: Arc<dyn Primitive>,
    ) -> Result<Self, GoalTypeError> {
        let resolve = |ns: &[String]| ns.iter().map(|n| types.get(n).cloned()).collect::<Result<Vec<_>, _>>();
        Ok(AtomicTactic {
            name: name.into(),
            inputs: resolve(&signature.inputs)?,
            outputs: resolve(&signature.outputs)?,
            signature,
            features: types.features.clone(),
            primitive,
        })
    }
}

impl TypedTactic for AtomicTactic {
    fn name(&self) -> &str {
        &self.name
    }

    fn signature(&self) -> &TacticSignature {
        &self.signature
    }

    fn apply(&self, port: usize, goal: &Sequent, _depth: usize) -> Evaluations {
        let Some(alpha) = port.checked_sub(1).and_then(|i| self.inputs.get(i)) else {
            return Box::new(std::iter::once(Err(TacticError::BadPort { tactic: self.name.clone(), port })));
        };
        match self.features.matches(goal, alpha) {
            Err(e) => return Box::new(std::iter::once(Err(e.into()))),
            Ok(false) => return Box::new(std::iter::empty()),
            Ok(true) => {}
        }
        let features = self.features.clone();
        let outputs = self.outputs.clone();
        let mut seen = BTreeSet::new();
        let evals = self.primitive.apply(goal).into_iter().flat_map(move |e| {
            match partitions(&features, &outputs, &e) {
                Ok(p) => Box::new(p.map(Ok)) as Evaluations,
                Err(err) => Box::new(std::iter::once(Err(err.into()))),
            }
        });
        Box::new(evals.filter(move |r| match r {
            Ok(e) => seen.insert(e.clone()),
            Err(_) => true,
        }))
    }
}

/// The tactic with no evaluations.
#[derive(Clone, Debug)]
pub struct Fail {
    pub name: String,
    pub signature: TacticSignature,
}

impl TypedTactic for Fail {
    fn name(&self) -> &str {
        &self.name
    }

    fn signature(&self) -> &TacticSignature {
        &self.signature
    }

    fn apply(&self, _: usize, _: &Sequent, _: usize) -> Evaluations {
        Box::new(std::iter::empty())
    }
}

/// Tactics keyed by name and signature.
#[derive(Clone, Debug, Default)]
pub struct TacticRegistry {
    map: BTreeMap<(String, TacticSignature), Arc<dyn TypedTactic>>,
}

impl TacticRegistry {
    pub fn register(&mut self, t: Arc<dyn TypedTactic>) {
        self.map.insert((t.name().to_owned(), t.signature().clone()), t);
    }

    pub fn get(&self, name: &str, sig: &TacticSignature) -> Option<&Arc<dyn TypedTactic>> {
        self.map.get(&(name.to_owned(), sig.clone()))
    }

    /// The registered tactic, or `Fail` when there is none for `sig`.
    pub fn lookup(&self, name: &str, sig: &TacticSignature) -> Arc<dyn TypedTactic> {
        self.get(name, sig)
            .cloned()
            .unwrap_or_else(|| Arc::new(Fail { name: name.to_owned(), signature: sig.clone() }))
    }

    pub fn signatures(&self, name: &str) -> Vec<&TacticSignature> {
        self.map.keys().filter(|(n, _)| n == name).map(|(_, s)| s).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn TypedTactic>> {
        self.map.values()
    }

    pub fn extend_from(&mut self, other: &TacticRegistry) {
        for (k, v) in &other.map {
            self.map.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }
}

/// Everything needed to evaluate a strategy: goal types and tactics.
#[derive(Clone, Debug, Default)]
pub struct Context {
    pub types: GoalTypeRegistry,
    pub tactics: TacticRegistry,
}

impl Context {
    /// Adds a primitive under `name` with the given signature.
    pub fn add_atomic(
        &mut self,
        name: &str,
        sig: TacticSignature,
        primitive: Arc<dyn Primitive>,
    ) -> Result<(), GoalTypeError> {
        let t = AtomicTactic::new(name, sig, &self.types, primitive)?;
        self.tactics.register(Arc::new(t));
        Ok(())
    }

    /// Adds types and tactics of `other` not already present.
    pub fn extend_from(&mut self, other: &Context) {
        for t in other.types.types() {
            if !self.types.contains(t.name()) {
                self.types.insert(t.clone()).expect("already validated");
            }
        }
        self.tactics.extend_from(&other.tactics);
    }
}

/// Wraps a primitive and counts its invocations.
#[derive(Debug)]
pub struct Counted {
    pub inner: Arc<dyn Primitive>,
    pub calls: Arc<AtomicUsize>,
}

impl Counted {
    pub fn new(inner: Arc<dyn Primitive>) -> (Self, Arc<AtomicUsize>) {
        let calls = Arc::new(AtomicUsize::new(0));
        (Counted { inner, calls: calls.clone() }, calls)
    }
}

impl Primitive for Counted {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn apply(&self, goal: &Sequent) -> Vec<Vec<Sequent>> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.apply(goal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goaltype::{orthogonal, Feature};
    use crate::prover::{builtin, parse_sequent};
    use proptest::prelude::*;

    fn s(src: &str) -> Sequent {
        parse_sequent(src).unwrap()
    }

    fn registry() -> GoalTypeRegistry {
        let mut r = GoalTypeRegistry::default();
        let tls = |x: &str| Feature::pos("top_level_symbol", &[x]);
        let ntls = |x: &str| Feature::neg("top_level_symbol", &[x]);
        r.insert(GoalType::new("imp", [tls("-->")])).unwrap();
        r.insert(GoalType::new("conj", [tls("&")])).unwrap();
        r.insert(GoalType::new("other", [ntls("&"), ntls("-->")])).unwrap();
        r.insert(GoalType::new("step", [Feature::pos("hyp_count_ge", &["1"])])).unwrap();
        r.insert(GoalType::new("not_step", [Feature::neg("hyp_count_ge", &["1"])])).unwrap();
        r
    }

    fn ty(r: &GoalTypeRegistry, n: &str) -> GoalType {
        r.get(n).unwrap().clone()
    }

    #[test]
    fn induction_subgoals_split_by_step() {
        let r = registry();
        let goals = [s("even(2*0)"), s("even(2*1)"), s("even(2*n) |- even(2*S(S(n)))")];
        let ps: Vec<_> = partitions(&r.features, &[ty(&r, "not_step"), ty(&r, "step")], &goals).unwrap().collect();
        assert_eq!(ps, vec![vec![goals[..2].to_vec(), goals[2..].to_vec()]]);
    }

    #[test]
    fn empty_list_has_one_partition() {
        let r = registry();
        let ps: Vec<_> = partitions(&r.features, &[GoalType::any(), GoalType::any()], &[]).unwrap().collect();
        assert_eq!(ps, vec![vec![vec![], vec![]]]);
    }

    #[test]
    fn one_goal_two_any_lists() {
        let r = registry();
        let g = s("A");
        let ps: Vec<_> = partitions(&r.features, &[GoalType::any(), GoalType::any()], &[g.clone()]).unwrap().collect();
        assert_eq!(ps, vec![vec![vec![g.clone()], vec![]], vec![vec![], vec![g]]]);
    }

    #[test]
    fn unmatched_goal_gives_no_partitions() {
        let r = registry();
        assert_eq!(partitions(&r.features, &[ty(&r, "imp")], &[s("A")]).unwrap().count(), 0);
    }

    #[test]
    fn lifting() {
        let r = registry();
        let imp_any = AtomicTactic::new(
            "impI",
            TacticSignature::new(&["imp"], &["any"]),
            &r,
            builtin("impI").unwrap(),
        )
        .unwrap();
        let evals: Vec<_> = imp_any.apply(1, &s("A --> B & C"), 0).map(Result::unwrap).collect();
        assert_eq!(evals, vec![vec![vec![s("A |- B & C")]]]);

        let imp_other = AtomicTactic::new(
            "impI",
            TacticSignature::new(&["imp"], &["other"]),
            &r,
            builtin("impI").unwrap(),
        )
        .unwrap();
        assert_eq!(imp_other.apply(1, &s("A --> B & C"), 0).count(), 0);
        assert_eq!(imp_any.apply(1, &s("A & B"), 0).count(), 0);
    }

    #[test]
    fn lookup_falls_back_to_fail() {
        let mut ctx = Context { types: registry(), ..Default::default() };
        let sig = TacticSignature::new(&["imp"], &["any"]);
        ctx.add_atomic("impI", sig.clone(), builtin("impI").unwrap()).unwrap();
        assert_eq!(ctx.tactics.lookup("impI", &sig).apply(1, &s("A --> B"), 0).count(), 1);
        let other = TacticSignature::new(&["conj"], &["any"]);
        let fail = ctx.tactics.lookup("impI", &other);
        assert_eq!(fail.apply(1, &s("A & B"), 0).count(), 0);
        assert_eq!(fail.apply(1, &s("A --> B"), 0).count(), 0);
    }

    #[test]
    fn counted_primitive() {
        let (p, calls) = Counted::new(builtin("id").unwrap());
        p.apply(&s("A"));
        p.apply(&s("B"));
        assert_eq!(calls.load(Ordering::SeqCst), 2);
    }

    /// Every assignment of goals to lists, filtered by the types.
    fn brute_force(r: &GoalTypeRegistry, types: &[GoalType], goals: &[Sequent]) -> BTreeSet<Evaluation> {
        let n = types.len();
        let mut out = BTreeSet::new();
        if n == 0 {
            if goals.is_empty() {
                out.insert(vec![]);
            }
            return out;
        }
        for code in 0..n.pow(goals.len() as u32) {
            let mut c = code;
            let mut cells = vec![Vec::new(); n];
            let mut ok = true;
            for g in goals {
                let i = c % n;
                c /= n;
                ok &= r.matches(g, &types[i]).unwrap();
                cells[i].push(g.clone());
            }
            if ok {
                out.insert(cells);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn partitions_agree_with_brute_force(
            tys in prop::collection::vec(prop::sample::select(vec!["any", "imp", "conj", "other", "step"]), 0..4),
            gs in prop::collection::vec(prop::sample::select(vec!["A", "A --> B", "A & B", "B |- C", "B |- C & D"]), 0..6),
        ) {
            let r = registry();
            let types: Vec<_> = tys.iter().map(|t| ty(&r, t)).collect();
            let goals: Vec<_> = gs.iter().map(|g| s(g)).collect();
            let fast: Vec<_> = partitions(&r.features, &types, &goals).unwrap().collect();
            let set: BTreeSet<_> = fast.iter().cloned().collect();
            prop_assert_eq!(set.len(), fast.len());
            prop_assert_eq!(set, brute_force(&r, &types, &goals));
            let pairwise = (0..types.len()).all(|i| (i + 1..types.len()).all(|j| orthogonal(&types[i], &types[j])));
            if pairwise {
                prop_assert!(fast.len() <= 1);
            }
        }
    }
}
