//! Goal types: named sets of (possibly negated) feature predicates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prover::{Sequent, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GoalTypeError {
    #[error("unknown feature type {0}")]
    UnknownFeatureType(String),
    #[error("feature {ftype} takes {expected} argument(s), got {found}")]
    BadArity { ftype: String, expected: usize, found: usize },
    #[error("bad argument {arg:?} to feature {ftype}")]
    BadArgument { ftype: String, arg: String },
    #[error("unknown goal type {0}")]
    UnknownGoalType(String),
}

/// A named predicate over goals, parameterised by string arguments.
#[derive(Clone, Copy)]
pub struct FeatureType {
    pub name: &'static str,
    pub arity: usize,
    pub predicate: fn(&Sequent, &[String]) -> bool,
    /// Rejects malformed arguments before the predicate ever sees them.
    pub check_args: fn(&[String]) -> bool,
}

impl fmt::Debug for FeatureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureType({}/{})", self.name, self.arity)
    }
}

fn any_args(_: &[String]) -> bool {
    true
}

pub const BUILTIN_FEATURES: &[FeatureType] = &[
    FeatureType {
        name: "top_level_symbol",
        arity: 1,
        predicate: |g, a| g.concl.symbol() == a[0],
        check_args: any_args,
    },
    FeatureType {
        name: "concl_is_atom",
        arity: 0,
        predicate: |g, _| matches!(g.concl, Term::Atom(_) | Term::Pred(..) | Term::Even(_)),
        check_args: any_args,
    },
    FeatureType {
        name: "hyp_count_ge",
        arity: 1,
        predicate: |g, a| a[0].parse::<usize>().is_ok_and(|n| g.hyps.len() >= n),
        check_args: |a| a[0].parse::<usize>().is_ok(),
    },
    FeatureType {
        name: "contains_symbol",
        arity: 1,
        predicate: |g, a| g.concl.contains_symbol(&a[0]),
        check_args: any_args,
    },
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    #[default]
    Positive,
    Negative,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Feature {
    pub ftype: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub polarity: Polarity,
}

impl Feature {
    pub fn pos(ftype: &str, args: &[&str]) -> Self {
        Feature { ftype: ftype.into(), args: args.iter().map(|s| s.to_string()).collect(), polarity: Polarity::Positive }
    }

    pub fn neg(ftype: &str, args: &[&str]) -> Self {
        Feature { polarity: Polarity::Negative, ..Feature::pos(ftype, args) }
    }

    fn conflicts_with(&self, other: &Feature) -> bool {
        if self.ftype == other.ftype && self.args == other.args {
            return self.polarity != other.polarity;
        }
        self.ftype == "top_level_symbol"
            && other.ftype == "top_level_symbol"
            && self.polarity == Polarity::Positive
            && other.polarity == Polarity::Positive
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.polarity == Polarity::Negative {
            write!(f, "¬")?;
        }
        write!(f, "{}({})", self.ftype, self.args.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GoalType {
    Features { name: String, features: BTreeSet<Feature> },
    /// The unsatisfiable type.
    Bottom,
}

impl GoalType {
    pub fn new(name: impl Into<String>, features: impl IntoIterator<Item = Feature>) -> Self {
        GoalType::Features { name: name.into(), features: features.into_iter().collect() }
    }

    /// The type every goal has.
    pub fn any() -> Self {
        GoalType::new("any", [])
    }

    pub fn name(&self) -> &str {
        match self {
            GoalType::Features { name, .. } => name,
            GoalType::Bottom => "⊥",
        }
    }

    pub fn features(&self) -> Option<&BTreeSet<Feature>> {
        match self {
            GoalType::Features { features, .. } => Some(features),
            GoalType::Bottom => None,
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, GoalType::Bottom)
    }
}

impl fmt::Display for GoalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Write-once registry of feature types.
#[derive(Clone, Debug)]
pub struct FeatureRegistry {
    types: BTreeMap<&'static str, FeatureType>,
}

impl Default for FeatureRegistry {
    fn default() -> Self {
        FeatureRegistry { types: BUILTIN_FEATURES.iter().map(|f| (f.name, *f)).collect() }
    }
}

impl FeatureRegistry {
    pub fn register(&mut self, f: FeatureType) {
        self.types.insert(f.name, f);
    }

    pub fn check(&self, f: &Feature) -> Result<&FeatureType, GoalTypeError> {
        let ft = self.types.get(f.ftype.as_str()).ok_or_else(|| GoalTypeError::UnknownFeatureType(f.ftype.clone()))?;
        if f.args.len() != ft.arity {
            return Err(GoalTypeError::BadArity { ftype: f.ftype.clone(), expected: ft.arity, found: f.args.len() });
        }
        if !(ft.check_args)(&f.args) {
            return Err(GoalTypeError::BadArgument { ftype: f.ftype.clone(), arg: f.args.join(",") });
        }
        Ok(ft)
    }

    pub fn holds(&self, g: &Sequent, f: &Feature) -> Result<bool, GoalTypeError> {
        let ft = self.check(f)?;
        let v = (ft.predicate)(g, &f.args);
        Ok(match f.polarity {
            Polarity::Positive => v,
            Polarity::Negative => !v,
        })
    }

    /// True iff every feature of `ty` holds on `g`.
    pub fn matches(&self, g: &Sequent, ty: &GoalType) -> Result<bool, GoalTypeError> {
        match ty {
            GoalType::Bottom => Ok(false),
            GoalType::Features { features, .. } => {
                for f in features {
                    if !self.holds(g, f)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

/// Greatest lower bound under the syntactic conflict rules.
pub fn meet(a: &GoalType, b: &GoalType) -> GoalType {
    let (Some(fa), Some(fb)) = (a.features(), b.features()) else {
        return GoalType::Bottom;
    };
    let union: BTreeSet<Feature> = fa.union(fb).cloned().collect();
    for x in fa {
        if fb.iter().any(|y| x.conflicts_with(y)) {
            return GoalType::Bottom;
        }
    }
    for (i, x) in union.iter().enumerate() {
        if union.iter().skip(i + 1).any(|y| x.conflicts_with(y)) {
            return GoalType::Bottom;
        }
    }
    if &union == fa {
        a.clone()
    } else if &union == fb {
        b.clone()
    } else {
        GoalType::Features { name: format!("{}∧{}", a.name(), b.name()), features: union }
    }
}

pub fn orthogonal(a: &GoalType, b: &GoalType) -> bool {
    meet(a, b).is_bottom()
}

/// Goal types by name, always containing `any`.
#[derive(Clone, Debug)]
pub struct GoalTypeRegistry {
    pub features: FeatureRegistry,
    types: BTreeMap<String, GoalType>,
}

impl Default for GoalTypeRegistry {
    fn default() -> Self {
        let mut types = BTreeMap::new();
        types.insert("any".to_owned(), GoalType::any());
        GoalTypeRegistry { features: FeatureRegistry::default(), types }
    }
}

impl GoalTypeRegistry {
    /// Adds or replaces a type after checking its features.
    pub fn insert(&mut self, ty: GoalType) -> Result<(), GoalTypeError> {
        if let Some(fs) = ty.features() {
            for f in fs {
                self.features.check(f)?;
            }
        }
        self.types.insert(ty.name().to_owned(), ty);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&GoalType, GoalTypeError> {
        self.types.get(name).ok_or_else(|| GoalTypeError::UnknownGoalType(name.to_owned()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.types.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.types.keys()
    }

    pub fn types(&self) -> impl Iterator<Item = &GoalType> {
        self.types.values()
    }

    pub fn matches(&self, g: &Sequent, ty: &GoalType) -> Result<bool, GoalTypeError> {
        self.features.matches(g, ty)
    }

    pub fn matches_named(&self, g: &Sequent, name: &str) -> Result<bool, GoalTypeError> {
        self.features.matches(g, self.get(name)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prover::parse_sequent;
    use proptest::prelude::*;

    fn tls(s: &str) -> Feature {
        Feature::pos("top_level_symbol", &[s])
    }

    fn not_tls(s: &str) -> Feature {
        Feature::neg("top_level_symbol", &[s])
    }

    fn conj() -> GoalType {
        GoalType::new("conj", [tls("&")])
    }

    fn imp() -> GoalType {
        GoalType::new("imp", [tls("-->")])
    }

    fn other() -> GoalType {
        GoalType::new("other", [not_tls("&"), not_tls("-->")])
    }

    fn step() -> GoalType {
        GoalType::new("step", [Feature::pos("hyp_count_ge", &["1"])])
    }

    fn not_step() -> GoalType {
        GoalType::new("not_step", [Feature::neg("hyp_count_ge", &["1"])])
    }

    #[test]
    fn matching_examples() {
        let r = FeatureRegistry::default();
        let g = |s: &str| parse_sequent(s).unwrap();
        assert!(r.matches(&g("A & B"), &conj()).unwrap());
        assert!(r.matches(&g("A & B"), &GoalType::any()).unwrap());
        assert!(!r.matches(&g("A --> B"), &other()).unwrap());
        assert!(r.matches(&g("A |- B"), &other()).unwrap());
        assert!(!r.matches(&g("A"), &GoalType::Bottom).unwrap());
        assert!(r.matches(&g("A |- B"), &step()).unwrap());
    }

    #[test]
    fn unknown_feature_type() {
        let r = FeatureRegistry::default();
        let ty = GoalType::new("x", [Feature::pos("shiny", &[])]);
        assert_eq!(
            r.matches(&parse_sequent("A").unwrap(), &ty),
            Err(GoalTypeError::UnknownFeatureType("shiny".into()))
        );
    }

    #[test]
    fn meet_examples() {
        assert_eq!(meet(&GoalType::any(), &conj()), conj());
        assert_eq!(meet(&conj(), &imp()), GoalType::Bottom);
        assert_eq!(meet(&other(), &other()), other());
        let m = meet(&conj(), &step());
        assert_eq!(m.name(), "conj∧step");
        assert_eq!(m.features().unwrap().len(), 2);
    }

    #[test]
    fn orthogonality_examples() {
        assert!(orthogonal(&imp(), &conj()));
        assert!(!orthogonal(&GoalType::any(), &conj()));
        assert!(orthogonal(&step(), &not_step()));
        assert!(orthogonal(&conj(), &other()));
    }

    fn term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            prop::sample::select(vec!["A", "B", "C"]).prop_map(Term::atom),
            Just(Term::even(Term::mult(Term::numeral(2), Term::var("n")))),
            Just(Term::Pred("P".into(), vec![Term::var("x")])),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::imp(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::conj(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::disj(a, b)),
                inner.clone().prop_map(Term::neg),
                inner.prop_map(|b| Term::forall("x", b)),
            ]
        })
    }

    fn sequent() -> impl Strategy<Value = Sequent> {
        (prop::collection::vec(term(), 0..3), term()).prop_map(|(h, c)| Sequent::new(h, c))
    }

    fn feature() -> impl Strategy<Value = Feature> {
        let sym = prop::sample::select(vec!["&", "-->", "|", "~", "!", "A", "even", "P"]);
        let pol = prop_oneof![Just(Polarity::Positive), Just(Polarity::Negative)];
        prop_oneof![
            (sym.clone(), pol.clone()).prop_map(|(s, p)| Feature { polarity: p, ..Feature::pos("top_level_symbol", &[s]) }),
            (sym, pol.clone()).prop_map(|(s, p)| Feature { polarity: p, ..Feature::pos("contains_symbol", &[s]) }),
            (0..3usize, pol.clone()).prop_map(|(n, p)| Feature {
                polarity: p,
                ..Feature::pos("hyp_count_ge", &[&n.to_string()])
            }),
            pol.prop_map(|p| Feature { polarity: p, ..Feature::pos("concl_is_atom", &[]) }),
        ]
    }

    fn goal_type(name: &'static str) -> impl Strategy<Value = GoalType> {
        prop::collection::btree_set(feature(), 0..4).prop_map(move |fs| GoalType::new(name, fs))
    }

    proptest! {
        #[test]
        fn meet_is_conjunction(a in goal_type("a"), b in goal_type("b"), g in sequent()) {
            let r = FeatureRegistry::default();
            let m = meet(&a, &b);
            let both = r.matches(&g, &a).unwrap() && r.matches(&g, &b).unwrap();
            prop_assert_eq!(r.matches(&g, &m).unwrap(), both);
        }

        #[test]
        fn orthogonal_is_sound(a in goal_type("a"), b in goal_type("b"), g in sequent()) {
            let r = FeatureRegistry::default();
            if orthogonal(&a, &b) {
                prop_assert!(!(r.matches(&g, &a).unwrap() && r.matches(&g, &b).unwrap()));
            }
        }

        #[test]
        fn more_features_match_fewer_goals(b in goal_type("b"), keep in prop::collection::vec(any::<bool>(), 4), g in sequent()) {
            let r = FeatureRegistry::default();
            let fs = b.features().unwrap();
            let sub = GoalType::new("a", fs.iter().zip(&keep).filter(|(_, k)| **k).map(|(f, _)| f.clone()));
            if r.matches(&g, &b).unwrap() {
                prop_assert!(r.matches(&g, &sub).unwrap());
            }
        }
    }
}
