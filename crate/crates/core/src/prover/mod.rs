//! A small sequent-style kernel: goals, a proof state forest and primitive
//! tactics returning sets of subgoal lists.

mod parse;
mod term;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use parse::{parse_sequent, parse_term, ParseError};
pub use term::Term;

use crate::data::GoalId;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sequent {
    pub hyps: Vec<Term>,
    pub concl: Term,
}

impl Sequent {
    pub fn new(hyps: Vec<Term>, concl: Term) -> Self {
        Sequent { hyps, concl }
    }

    pub fn with_hyp(&self, h: Term, concl: Term) -> Sequent {
        let mut hyps = self.hyps.clone();
        hyps.push(h);
        Sequent { hyps, concl }
    }

    pub fn alpha_eq(&self, other: &Sequent) -> bool {
        self.hyps.len() == other.hyps.len()
            && self.hyps.iter().zip(&other.hyps).all(|(a, b)| a.alpha_eq(b))
            && self.concl.alpha_eq(&other.concl)
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hyps: Vec<String> = self.hyps.iter().map(|h| h.to_string()).collect();
        if hyps.is_empty() {
            write!(f, "⊢ {}", self.concl)
        } else {
            write!(f, "{} ⊢ {}", hyps.join(", "), self.concl)
        }
    }
}

impl Serialize for Sequent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Sequent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_sequent(&s).map_err(serde::de::Error::custom)
    }
}

/// Every goal created so far, which primitive produced it from which
/// parent, and which goals are still open.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProofState {
    goals: BTreeMap<GoalId, Sequent>,
    parent: BTreeMap<GoalId, (GoalId, String)>,
    open: BTreeSet<GoalId>,
    next: u64,
}

impl ProofState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an open root goal.
    pub fn add_goal(&mut self, s: Sequent) -> GoalId {
        self.next += 1;
        let id = GoalId(self.next);
        self.goals.insert(id, s);
        self.open.insert(id);
        id
    }

    /// Closes `parent` and opens one fresh goal per child, recording `by`.
    pub fn expand(&mut self, parent: GoalId, by: &str, children: &[Sequent]) -> Vec<GoalId> {
        self.open.remove(&parent);
        children
            .iter()
            .map(|c| {
                let id = self.add_goal(c.clone());
                self.parent.insert(id, (parent, by.to_owned()));
                id
            })
            .collect()
    }

    pub fn goal(&self, id: GoalId) -> Option<&Sequent> {
        self.goals.get(&id)
    }

    pub fn is_open(&self, id: GoalId) -> bool {
        self.open.contains(&id)
    }

    pub fn open_goals(&self) -> &BTreeSet<GoalId> {
        &self.open
    }

    pub fn parent(&self, id: GoalId) -> Option<&(GoalId, String)> {
        self.parent.get(&id)
    }

    pub fn goal_ids(&self) -> impl Iterator<Item = GoalId> + '_ {
        self.goals.keys().copied()
    }

    /// The chain of ancestors of `id`, nearest first.
    pub fn ancestry(&self, id: GoalId) -> Vec<(GoalId, String)> {
        let mut out = Vec::new();
        let mut cur = id;
        while let Some((p, by)) = self.parent.get(&cur) {
            out.push((*p, by.clone()));
            cur = *p;
        }
        out
    }
}

/// A primitive tactic: a goal to a finite set of subgoal lists. The empty
/// set is failure.
pub trait Primitive: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn apply(&self, goal: &Sequent) -> Vec<Vec<Sequent>>;
}

#[derive(Clone, Copy, Debug)]
pub struct Builtin {
    name: &'static str,
    f: fn(&Sequent) -> Vec<Vec<Sequent>>,
}

impl Primitive for Builtin {
    fn name(&self) -> &str {
        self.name
    }

    fn apply(&self, goal: &Sequent) -> Vec<Vec<Sequent>> {
        (self.f)(goal)
    }
}

pub const BUILTINS: &[Builtin] = &[
    Builtin { name: "id", f: id },
    Builtin { name: "fail", f: |_| vec![] },
    Builtin { name: "impI", f: imp_i },
    Builtin { name: "conjI", f: conj_i },
    Builtin { name: "allI", f: all_i },
    Builtin { name: "assumption", f: assumption },
    Builtin { name: "induct", f: induct_nat },
    Builtin { name: "induct_two_base", f: induct_two_base },
];

pub fn builtin(name: &str) -> Option<Arc<dyn Primitive>> {
    BUILTINS.iter().find(|b| b.name == name).map(|b| Arc::new(*b) as Arc<dyn Primitive>)
}

pub fn id(g: &Sequent) -> Vec<Vec<Sequent>> {
    vec![vec![g.clone()]]
}

pub fn imp_i(g: &Sequent) -> Vec<Vec<Sequent>> {
    match &g.concl {
        Term::Imp(a, b) => vec![vec![g.with_hyp((**a).clone(), (**b).clone())]],
        _ => vec![],
    }
}

pub fn conj_i(g: &Sequent) -> Vec<Vec<Sequent>> {
    match &g.concl {
        Term::Conj(a, b) => vec![vec![
            Sequent::new(g.hyps.clone(), (**a).clone()),
            Sequent::new(g.hyps.clone(), (**b).clone()),
        ]],
        _ => vec![],
    }
}

/// `x` with the first numeric suffix not used anywhere in `g`.
fn fresh_name(x: &str, g: &Sequent) -> String {
    let mut used = g.concl.names();
    for h in &g.hyps {
        used.extend(h.names());
    }
    (0..).map(|i| format!("{x}{i}")).find(|n| !used.contains(n)).expect("unbounded")
}

pub fn all_i(g: &Sequent) -> Vec<Vec<Sequent>> {
    match &g.concl {
        Term::Forall(x, body) => {
            let x0 = Term::Var(fresh_name(x, g));
            vec![vec![Sequent::new(g.hyps.clone(), body.subst(x, &x0))]]
        }
        _ => vec![],
    }
}

pub fn assumption(g: &Sequent) -> Vec<Vec<Sequent>> {
    if g.hyps.iter().any(|h| h.alpha_eq(&g.concl)) {
        vec![vec![]]
    } else {
        vec![]
    }
}

fn induction_var(g: &Sequent) -> Option<String> {
    g.concl.free_vars_ordered().into_iter().next()
}

/// Structural induction on the first free variable of the conclusion:
/// `P(0)` then `P(n) ⊢ P(Suc n)`.
pub fn induct_nat(g: &Sequent) -> Vec<Vec<Sequent>> {
    let Some(n) = induction_var(g) else { return vec![] };
    let p = &g.concl;
    let var = Term::Var(n.clone());
    vec![vec![
        Sequent::new(g.hyps.clone(), p.subst(&n, &Term::Zero)),
        g.with_hyp(p.clone(), p.subst(&n, &Term::suc(var))),
    ]]
}

/// Induction with two base cases: `P(0)`, `P(1)`, then
/// `P(n) ⊢ P(Suc(Suc n))`.
pub fn induct_two_base(g: &Sequent) -> Vec<Vec<Sequent>> {
    let Some(n) = induction_var(g) else { return vec![] };
    let p = &g.concl;
    let var = Term::Var(n.clone());
    vec![vec![
        Sequent::new(g.hyps.clone(), p.subst(&n, &Term::Zero)),
        Sequent::new(g.hyps.clone(), p.subst(&n, &Term::numeral(1))),
        g.with_hyp(p.clone(), p.subst(&n, &Term::suc(Term::suc(var)))),
    ]]
}

/// A primitive defined by a lookup table from goals (up to alpha
/// equivalence) to its evaluations; fails on any other goal.
#[derive(Clone, Debug)]
pub struct Scripted {
    pub name: String,
    pub table: Vec<(Sequent, Vec<Vec<Sequent>>)>,
}

impl Primitive for Scripted {
    fn name(&self) -> &str {
        &self.name
    }

    fn apply(&self, goal: &Sequent) -> Vec<Vec<Sequent>> {
        self.table.iter().find(|(g, _)| g.alpha_eq(goal)).map(|(_, e)| e.clone()).unwrap_or_default()
    }
}
