//! Vertex and edge data carried by string graphs, with free variables.
//!
//! Data values are small first-order terms. Rule patterns may contain
//! [`Datum::Var`] leaves; host graphs are always concrete. Matching is
//! one-sided: variables in a pattern bind to whole sub-terms of the target.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a goal inside a proof state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoalId(pub u64);

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Datum {
    /// A free variable.
    Var(String),
    /// A symbol: wire type names and tactic names.
    Sym(String),
    /// A port index.
    Int(usize),
    Goal(GoalId),
    List(Vec<Datum>),
}

impl Datum {
    pub fn var(name: impl Into<String>) -> Self {
        Datum::Var(name.into())
    }

    pub fn sym(name: impl Into<String>) -> Self {
        Datum::Sym(name.into())
    }

    pub fn goals(ids: impl IntoIterator<Item = GoalId>) -> Self {
        Datum::List(ids.into_iter().map(Datum::Goal).collect())
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Datum::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<usize> {
        match self {
            Datum::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Goal ids of a concrete goal list, `None` if this is not one.
    pub fn as_goal_list(&self) -> Option<Vec<GoalId>> {
        match self {
            Datum::List(items) => items
                .iter()
                .map(|d| match d {
                    Datum::Goal(g) => Some(*g),
                    _ => None,
                })
                .collect(),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Datum::Var(_) => false,
            Datum::List(items) => items.iter().all(Datum::is_ground),
            _ => true,
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Datum::Var(v) => {
                out.insert(v.clone());
            }
            Datum::List(items) => items.iter().for_each(|d| d.collect_vars(out)),
            _ => {}
        }
    }

    /// Renames variables through `f`, leaving everything else untouched.
    pub fn rename_vars(&self, f: &impl Fn(&str) -> Option<String>) -> Datum {
        match self {
            Datum::Var(v) => Datum::Var(f(v).unwrap_or_else(|| v.clone())),
            Datum::List(items) => Datum::List(items.iter().map(|d| d.rename_vars(f)).collect()),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Datum::Var(v) => write!(f, "?{v}"),
            Datum::Sym(s) => write!(f, "{s}"),
            Datum::Int(i) => write!(f, "{i}"),
            Datum::Goal(g) => write!(f, "{g}"),
            Datum::List(items) => {
                write!(f, "[")?;
                for (i, d) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{d}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Bindings from variable names to data.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    bindings: BTreeMap<String, Datum>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Datum> {
        self.bindings.get(var)
    }

    pub fn bind(&mut self, var: impl Into<String>, value: Datum) {
        self.bindings.insert(var.into(), value);
    }

    pub fn with(mut self, var: impl Into<String>, value: Datum) -> Self {
        self.bind(var, value);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Datum)> {
        self.bindings.iter()
    }

    /// Union of two substitutions; bindings in `other` win on conflict.
    pub fn union(&self, other: &Substitution) -> Substitution {
        let mut out = self.clone();
        for (k, v) in &other.bindings {
            out.bindings.insert(k.clone(), v.clone());
        }
        out
    }

    /// Applies the substitution, chasing chains of variable bindings.
    pub fn apply(&self, d: &Datum) -> Datum {
        self.apply_depth(d, 0)
    }

    fn apply_depth(&self, d: &Datum, depth: usize) -> Datum {
        match d {
            Datum::Var(v) => match self.bindings.get(v) {
                // Guard against cyclic bindings such as {x -> x}.
                Some(bound) if depth < 64 && bound != d => self.apply_depth(bound, depth + 1),
                _ => d.clone(),
            },
            Datum::List(items) => {
                Datum::List(items.iter().map(|i| self.apply_depth(i, depth)).collect())
            }
            other => other.clone(),
        }
    }

    /// One-sided matching of `pattern` against `target`, extending `self`.
    ///
    /// On failure `self` may hold partial bindings; callers clone before
    /// trying alternatives.
    pub fn match_datum(&mut self, pattern: &Datum, target: &Datum) -> bool {
        match pattern {
            Datum::Var(v) => match self.bindings.get(v) {
                Some(bound) => &self.apply(bound) == target,
                None => {
                    self.bindings.insert(v.clone(), target.clone());
                    true
                }
            },
            Datum::List(ps) => match target {
                Datum::List(ts) if ps.len() == ts.len() => {
                    ps.iter().zip(ts).all(|(p, t)| self.match_datum(p, t))
                }
                _ => false,
            },
            concrete => concrete == target,
        }
    }
}

impl FromIterator<(String, Datum)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (String, Datum)>>(iter: I) -> Self {
        Substitution {
            bindings: iter.into_iter().collect(),
        }
    }
}
