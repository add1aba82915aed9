use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Atom(String),
    Var(String),
    /// Predicate application such as `P x`.
    Pred(String, Vec<Term>),
    Imp(Box<Term>, Box<Term>),
    Conj(Box<Term>, Box<Term>),
    Disj(Box<Term>, Box<Term>),
    Neg(Box<Term>),
    Forall(String, Box<Term>),
    Zero,
    Suc(Box<Term>),
    Mult(Box<Term>, Box<Term>),
    Even(Box<Term>),
}

impl Term {
    pub fn atom(s: &str) -> Term {
        Term::Atom(s.to_owned())
    }

    pub fn var(s: &str) -> Term {
        Term::Var(s.to_owned())
    }

    pub fn imp(a: Term, b: Term) -> Term {
        Term::Imp(Box::new(a), Box::new(b))
    }

    pub fn conj(a: Term, b: Term) -> Term {
        Term::Conj(Box::new(a), Box::new(b))
    }

    pub fn disj(a: Term, b: Term) -> Term {
        Term::Disj(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Term) -> Term {
        Term::Neg(Box::new(a))
    }

    pub fn forall(x: &str, body: Term) -> Term {
        Term::Forall(x.to_owned(), Box::new(body))
    }

    pub fn suc(a: Term) -> Term {
        Term::Suc(Box::new(a))
    }

    pub fn mult(a: Term, b: Term) -> Term {
        Term::Mult(Box::new(a), Box::new(b))
    }

    pub fn even(a: Term) -> Term {
        Term::Even(Box::new(a))
    }

    pub fn numeral(n: u64) -> Term {
        (0..n).fold(Term::Zero, |t, _| Term::suc(t))
    }

    /// `Some(n)` if the term is `Suc^n(0)`.
    pub fn as_numeral(&self) -> Option<u64> {
        match self {
            Term::Zero => Some(0),
            Term::Suc(t) => t.as_numeral().map(|n| n + 1),
            _ => None,
        }
    }

    /// The head symbol, as used by goal-type features.
    pub fn symbol(&self) -> &str {
        match self {
            Term::Atom(s) | Term::Var(s) | Term::Pred(s, _) => s,
            Term::Imp(..) => "-->",
            Term::Conj(..) => "&",
            Term::Disj(..) => "|",
            Term::Neg(_) => "~",
            Term::Forall(..) => "!",
            Term::Zero => "0",
            Term::Suc(_) => "Suc",
            Term::Mult(..) => "*",
            Term::Even(_) => "even",
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Term::Atom(_) | Term::Var(_) | Term::Pred(..) | Term::Even(_))
    }

    /// Terms of the natural-number sort.
    pub fn is_nat(&self) -> bool {
        matches!(self, Term::Zero | Term::Suc(_) | Term::Mult(..) | Term::Var(_))
    }

    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Atom(_) | Term::Var(_) | Term::Zero => vec![],
            Term::Pred(_, args) => args.iter().collect(),
            Term::Imp(a, b) | Term::Conj(a, b) | Term::Disj(a, b) | Term::Mult(a, b) => vec![a, b],
            Term::Neg(a) | Term::Suc(a) | Term::Even(a) | Term::Forall(_, a) => vec![a],
        }
    }

    /// True if `sym` is the head symbol of this term or any subterm.
    pub fn contains_symbol(&self, sym: &str) -> bool {
        self.symbol() == sym || self.children().into_iter().any(|c| c.contains_symbol(sym))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars_ordered(&self) -> Vec<String> {
        let mut out = Vec::new();
        fn walk(t: &Term, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match t {
                Term::Var(v) if !bound.contains(v) && !out.contains(v) => out.push(v.clone()),
                Term::Forall(x, b) => {
                    bound.push(x.clone());
                    walk(b, bound, out);
                    bound.pop();
                }
                _ => t.children().into_iter().for_each(|c| walk(c, bound, out)),
            }
        }
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Term::Forall(x, b) => {
                bound.push(x.clone());
                b.collect_free(bound, out);
                bound.pop();
            }
            _ => self.children().into_iter().for_each(|c| c.collect_free(bound, out)),
        }
    }

    /// Every name used anywhere in the term, bound or free.
    pub fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        fn walk(t: &Term, out: &mut BTreeSet<String>) {
            match t {
                Term::Atom(s) | Term::Var(s) => {
                    out.insert(s.clone());
                }
                Term::Forall(x, _) => {
                    out.insert(x.clone());
                }
                Term::Pred(p, _) => {
                    out.insert(p.clone());
                }
                _ => {}
            }
            t.children().into_iter().for_each(|c| walk(c, out));
        }
        walk(self, &mut out);
        out
    }

    /// Replaces free occurrences of `x` by `r`. Stops at binders of `x`;
    /// callers pass replacements whose variables are not bound in `self`.
    pub fn subst(&self, x: &str, r: &Term) -> Term {
        let s = |t: &Term| Box::new(t.subst(x, r));
        match self {
            Term::Var(v) if v == x => r.clone(),
            Term::Atom(_) | Term::Var(_) | Term::Zero => self.clone(),
            Term::Pred(p, args) => Term::Pred(p.clone(), args.iter().map(|a| a.subst(x, r)).collect()),
            Term::Imp(a, b) => Term::Imp(s(a), s(b)),
            Term::Conj(a, b) => Term::Conj(s(a), s(b)),
            Term::Disj(a, b) => Term::Disj(s(a), s(b)),
            Term::Mult(a, b) => Term::Mult(s(a), s(b)),
            Term::Neg(a) => Term::Neg(s(a)),
            Term::Suc(a) => Term::Suc(s(a)),
            Term::Even(a) => Term::Even(s(a)),
            Term::Forall(y, _) if y == x => self.clone(),
            Term::Forall(y, b) => Term::Forall(y.clone(), s(b)),
        }
    }

    pub fn alpha_eq(&self, other: &Term) -> bool {
        fn go<'a>(a: &'a Term, b: &'a Term, env: &mut Vec<(&'a str, &'a str)>) -> bool {
            match (a, b) {
                (Term::Var(x), Term::Var(y)) => {
                    match env.iter().rev().find(|(l, r)| l == x || r == y) {
                        Some((l, r)) => l == x && r == y,
                        None => x == y,
                    }
                }
                (Term::Forall(x, p), Term::Forall(y, q)) => {
                    env.push((x, y));
                    let r = go(p, q, env);
                    env.pop();
                    r
                }
                (Term::Atom(x), Term::Atom(y)) => x == y,
                (Term::Zero, Term::Zero) => true,
                (Term::Pred(p, xs), Term::Pred(q, ys)) => {
                    p == q && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| go(x, y, env))
                }
                (Term::Imp(a1, b1), Term::Imp(a2, b2))
                | (Term::Conj(a1, b1), Term::Conj(a2, b2))
                | (Term::Disj(a1, b1), Term::Disj(a2, b2))
                | (Term::Mult(a1, b1), Term::Mult(a2, b2)) => go(a1, a2, env) && go(b1, b2, env),
                (Term::Neg(a), Term::Neg(b)) | (Term::Suc(a), Term::Suc(b)) | (Term::Even(a), Term::Even(b)) => {
                    go(a, b, env)
                }
                _ => false,
            }
        }
        go(self, other, &mut Vec::new())
    }

    fn precedence(&self) -> u8 {
        match self {
            Term::Imp(..) => 0,
            Term::Disj(..) => 1,
            Term::Conj(..) => 2,
            Term::Neg(_) => 3,
            Term::Forall(..) => 0,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.precedence();
        let paren = p < min;
        if paren {
            write!(f, "(")?;
        }
        match self {
            Term::Imp(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " --> ")?;
                b.fmt_prec(f, 0)?;
            }
            Term::Disj(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " | ")?;
                b.fmt_prec(f, 1)?;
            }
            Term::Conj(a, b) => {
                a.fmt_prec(f, 3)?;
                write!(f, " & ")?;
                b.fmt_prec(f, 2)?;
            }
            Term::Neg(a) => {
                write!(f, "~")?;
                a.fmt_prec(f, 3)?;
            }
            Term::Forall(x, b) => {
                write!(f, "!{x}. ")?;
                b.fmt_prec(f, 0)?;
            }
            Term::Atom(s) | Term::Var(s) => write!(f, "{s}")?,
            Term::Pred(p, args) => {
                write!(f, "{p}")?;
                for a in args {
                    if a.children().is_empty() || a.as_numeral().is_some() {
                        write!(f, " {a}")?;
                    } else {
                        write!(f, " ({a})")?;
                    }
                }
            }
            Term::Zero | Term::Suc(_) if self.as_numeral().is_some() => {
                write!(f, "{}", self.as_numeral().unwrap_or_default())?
            }
            Term::Zero => write!(f, "0")?,
            Term::Suc(a) => write!(f, "Suc({a})")?,
            Term::Mult(a, b) => {
                match **a {
                    Term::Mult(..) => write!(f, "({a})")?,
                    _ => write!(f, "{a}")?,
                }
                write!(f, "*{b}")?;
            }
            Term::Even(a) => write!(f, "even({a})")?,
        }
        if paren {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_respects_precedence() {
        let t = Term::imp(Term::atom("A"), Term::conj(Term::atom("B"), Term::atom("C")));
        assert_eq!(t.to_string(), "A --> B & C");
        let t = Term::conj(Term::imp(Term::atom("A"), Term::atom("B")), Term::atom("C"));
        assert_eq!(t.to_string(), "(A --> B) & C");
        let t = Term::imp(Term::imp(Term::atom("A"), Term::atom("B")), Term::atom("C"));
        assert_eq!(t.to_string(), "(A --> B) --> C");
    }

    #[test]
    fn numerals_print_as_digits() {
        let t = Term::even(Term::mult(Term::numeral(2), Term::suc(Term::var("n"))));
        assert_eq!(t.to_string(), "even(2*Suc(n))");
    }

    #[test]
    fn alpha_equivalence() {
        let p = |x: &str| Term::forall(x, Term::Pred("P".into(), vec![Term::var(x)]));
        assert!(p("x").alpha_eq(&p("y")));
        assert_ne!(p("x"), p("y"));
        let q = Term::forall("x", Term::Pred("P".into(), vec![Term::var("y")]));
        assert!(!p("x").alpha_eq(&q));
    }

    #[test]
    fn substitution_stops_at_binders() {
        let t = Term::conj(Term::even(Term::var("n")), Term::forall("n", Term::even(Term::var("n"))));
        let s = t.subst("n", &Term::Zero);
        assert_eq!(s.to_string(), "even(0) & (!n. even(n))");
    }
}
