//! Concrete syntax: `A --> B & C`, `!x. P x`, `even(2*n)`, `h1, h2 |- c`.
//!
//! Precedence from tightest: `~`, `&`, `|`, `-->`; all binary connectives
//! associate to the right and `!x.` extends as far right as possible.

use thiserror::Error;

use super::{Sequent, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    Imp,
    Conj,
    Disj,
    Neg,
    Bang,
    Dot,
    Star,
    Comma,
    Turnstile,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let rest = &src[pos..];
        let simple = |t: Tok, n: usize| Some((t, n));
        let tok = match c {
            c if c.is_whitespace() => None,
            '(' => simple(Tok::LParen, 1),
            ')' => simple(Tok::RParen, 1),
            '&' | '∧' => simple(Tok::Conj, 1),
            '|' if rest.starts_with("|-") => simple(Tok::Turnstile, 2),
            '|' | '∨' => simple(Tok::Disj, 1),
            '~' | '¬' => simple(Tok::Neg, 1),
            '!' | '∀' => simple(Tok::Bang, 1),
            '.' => simple(Tok::Dot, 1),
            '*' => simple(Tok::Star, 1),
            ',' => simple(Tok::Comma, 1),
            '⊢' => simple(Tok::Turnstile, 1),
            '⟶' | '→' => simple(Tok::Imp, 1),
            '-' if rest.starts_with("-->") => simple(Tok::Imp, 3),
            '-' if rest.starts_with("->") => simple(Tok::Imp, 2),
            c if c.is_ascii_digit() => {
                let len = rest.chars().take_while(|c| c.is_ascii_digit()).count();
                let n = rest[..len].parse().map_err(|_| ParseError { pos, msg: "numeral too large".into() })?;
                simple(Tok::Num(n), len)
            }
            c if c.is_alphabetic() || c == '_' => {
                let len = rest
                    .chars()
                    .take_while(|c| c.is_alphanumeric() || *c == '_' || *c == '\'')
                    .count();
                simple(Tok::Ident(rest.chars().take(len).collect()), len)
            }
            other => return Err(ParseError { pos, msg: format!("unexpected character {other:?}") }),
        };
        match tok {
            None => i += 1,
            Some((t, n)) => {
                out.push((pos, t));
                i += n;
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { pos: self.pos(), msg: msg.into() })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn formula(&mut self) -> Result<Term, ParseError> {
        let lhs = self.disj()?;
        if self.eat(&Tok::Imp) {
            Ok(Term::imp(lhs, self.formula()?))
        } else {
            Ok(lhs)
        }
    }

    fn disj(&mut self) -> Result<Term, ParseError> {
        let lhs = self.conj()?;
        if self.eat(&Tok::Disj) {
            Ok(Term::disj(lhs, self.disj()?))
        } else {
            Ok(lhs)
        }
    }

    fn conj(&mut self) -> Result<Term, ParseError> {
        let lhs = self.unary()?;
        if self.eat(&Tok::Conj) {
            Ok(Term::conj(lhs, self.conj()?))
        } else {
            Ok(lhs)
        }
    }

    fn unary(&mut self) -> Result<Term, ParseError> {
        if self.eat(&Tok::Neg) {
            return Ok(Term::neg(self.unary()?));
        }
        if self.eat(&Tok::Bang) {
            let mut vars = Vec::new();
            while let Some(Tok::Ident(x)) = self.peek().cloned() {
                self.at += 1;
                vars.push(x);
            }
            if vars.is_empty() {
                return self.err("expected a bound variable");
            }
            self.expect(Tok::Dot, "'.' after bound variables")?;
            let body = self.formula()?;
            return Ok(vars.iter().rev().fold(body, |b, x| Term::forall(x, b)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.at += 1;
                let t = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(t)
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if self.peek() == Some(&Tok::LParen) {
                    self.at += 1;
                    let mut args = vec![self.nat()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.nat()?);
                    }
                    self.expect(Tok::RParen, "')'")?;
                    return match name.as_str() {
                        "even" if args.len() == 1 => Ok(Term::even(args.remove(0))),
                        "even" => self.err("even takes one argument"),
                        "Suc" | "S" => self.err("a number is not a formula"),
                        _ => Ok(Term::Pred(name, args)),
                    };
                }
                let mut args = Vec::new();
                while let Some(t) = self.peek() {
                    if !matches!(t, Tok::Ident(_) | Tok::Num(_)) {
                        break;
                    }
                    args.push(self.nat_atom()?);
                }
                if args.is_empty() {
                    Ok(Term::Atom(name))
                } else {
                    Ok(Term::Pred(name, args))
                }
            }
            Some(Tok::Num(_)) => self.err("a number is not a formula"),
            Some(_) => self.err("expected a formula"),
            None => self.err("unexpected end of input"),
        }
    }

    fn nat(&mut self) -> Result<Term, ParseError> {
        let lhs = self.nat_atom()?;
        if self.eat(&Tok::Star) {
            Ok(Term::mult(lhs, self.nat()?))
        } else {
            Ok(lhs)
        }
    }

    fn nat_atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.at += 1;
                Ok(Term::numeral(n))
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if (name == "Suc" || name == "S") && self.eat(&Tok::LParen) {
                    let t = self.nat()?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(Term::suc(t))
                } else {
                    Ok(Term::Var(name))
                }
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let t = self.nat()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(t)
            }
            _ => self.err("expected a number or variable"),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => self.err("unexpected trailing input"),
        }
    }
}

fn parser(src: &str) -> Result<Parser, ParseError> {
    Ok(Parser { toks: lex(src)?, at: 0, end: src.len() })
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = parser(src)?;
    let t = p.formula()?;
    p.finish()?;
    Ok(t)
}

/// Parses `h1, h2 |- c` (or `⊢`); a bare formula has no hypotheses.
pub fn parse_sequent(src: &str) -> Result<Sequent, ParseError> {
    let mut p = parser(src)?;
    if p.eat(&Tok::Turnstile) {
        let concl = p.formula()?;
        p.finish()?;
        return Ok(Sequent::new(vec![], concl));
    }
    let mut terms = vec![p.formula()?];
    while p.eat(&Tok::Comma) {
        terms.push(p.formula()?);
    }
    if p.eat(&Tok::Turnstile) {
        let concl = p.formula()?;
        p.finish()?;
        Ok(Sequent::new(terms, concl))
    } else if terms.len() == 1 {
        p.finish()?;
        Ok(Sequent::new(vec![], terms.remove(0)))
    } else {
        p.err("expected '|-' after hypotheses")
    }
}
