//! Linear temporal logic over input and output propositions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! f ::= f <-> f | f -> f | f '|' f | f & f | f U f | f R f
//!     | ! f | X f | F f | G f | ( f ) | true | false | atom
//! ```
//!
//! `->` and `U`/`R` associate to the right; unary operators bind tightest,
//! so `F q & G !p` is `(F q) & (G !p)`.

mod tableau;

pub use tableau::{ltl_to_nba, ltl_to_uca};

use std::fmt;

use thiserror::Error;

use crate::automaton::Alphabet;

/// Which side an atomic proposition belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ApKind {
    Input,
    Output,
}

/// The split `(AP_I, AP_O)` of atomic propositions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ApSplit {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl ApSplit {
    pub fn new<I, O>(inputs: I, outputs: O) -> Self
    where
        I: IntoIterator,
        I::Item: Into<String>,
        O: IntoIterator,
        O::Item: Into<String>,
    {
        ApSplit {
            inputs: inputs.into_iter().map(Into::into).collect(),
            outputs: outputs.into_iter().map(Into::into).collect(),
        }
    }

    pub fn outputs_only<O>(outputs: O) -> Self
    where
        O: IntoIterator,
        O::Item: Into<String>,
    {
        Self::new(Vec::<String>::new(), outputs)
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::valuations(&self.inputs, &self.outputs)
    }

    /// Bit position of an atom within a letter (inputs first).
    pub fn bit(&self, kind: ApKind, index: usize) -> usize {
        match kind {
            ApKind::Input => index,
            ApKind::Output => self.inputs.len() + index,
        }
    }

    fn resolve(&self, name: &str) -> Option<(ApKind, usize)> {
        if let Some(i) = self.inputs.iter().position(|a| a == name) {
            return Some((ApKind::Input, i));
        }
        self.outputs.iter().position(|a| a == name).map(|i| (ApKind::Output, i))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub kind: ApKind,
    pub index: usize,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ltl {
    True,
    False,
    Atom(Atom),
    Not(Box<Ltl>),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Implies(Box<Ltl>, Box<Ltl>),
    Iff(Box<Ltl>, Box<Ltl>),
    Next(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
    Release(Box<Ltl>, Box<Ltl>),
    Finally(Box<Ltl>),
    Globally(Box<Ltl>),
}

impl Ltl {
    pub fn not(f: Ltl) -> Ltl {
        Ltl::Not(Box::new(f))
    }

    pub fn and(a: Ltl, b: Ltl) -> Ltl {
        Ltl::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: Ltl) -> Ltl {
        Ltl::Next(Box::new(f))
    }

    pub fn until(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Release(Box::new(a), Box::new(b))
    }

    pub fn finally(f: Ltl) -> Ltl {
        Ltl::Finally(Box::new(f))
    }

    pub fn globally(f: Ltl) -> Ltl {
        Ltl::Globally(Box::new(f))
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Ltl> {
        match self {
            Ltl::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            f => vec![f],
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Ltl::Iff(..) => 0,
            Ltl::Implies(..) => 1,
            Ltl::Or(..) => 2,
            Ltl::And(..) => 3,
            Ltl::Until(..) | Ltl::Release(..) => 4,
            Ltl::Not(_) | Ltl::Next(_) | Ltl::Finally(_) | Ltl::Globally(_) => 5,
            Ltl::True | Ltl::False | Ltl::Atom(_) => 6,
        }
    }
}

impl fmt::Display for Ltl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, g: &Ltl, min: u8| {
            if g.precedence() < min {
                write!(f, "({g})")
            } else {
                write!(f, "{g}")
            }
        };
        let p = self.precedence();
        match self {
            Ltl::True => write!(f, "true"),
            Ltl::False => write!(f, "false"),
            Ltl::Atom(a) => write!(f, "{}", a.name),
            Ltl::Not(g) | Ltl::Next(g) | Ltl::Finally(g) | Ltl::Globally(g) => {
                let op = match self {
                    Ltl::Not(_) => "!",
                    Ltl::Next(_) => "X ",
                    Ltl::Finally(_) => "F ",
                    _ => "G ",
                };
                write!(f, "{op}")?;
                sub(f, g, p)
            }
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Iff(a, b) => {
                let op = match self {
                    Ltl::And(..) => "&",
                    Ltl::Or(..) => "|",
                    _ => "<->",
                };
                sub(f, a, p)?;
                write!(f, " {op} ")?;
                sub(f, b, p + 1)
            }
            Ltl::Implies(a, b) | Ltl::Until(a, b) | Ltl::Release(a, b) => {
                let op = match self {
                    Ltl::Implies(..) => "->",
                    Ltl::Until(..) => "U",
                    _ => "R",
                };
                sub(f, a, p + 1)?;
                write!(f, " {op} ")?;
                sub(f, b, p)
            }
        }
    }
}

/// A parsed formula together with its proposition split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LtlFormula {
    pub root: Ltl,
    pub aps: ApSplit,
}

impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LtlError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("undeclared atomic proposition `{0}`")]
    UndeclaredAtom(String),
    #[error("proposition `{0}` declared as both input and output")]
    AmbiguousAtom(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
    End,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LtlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'!' | b'~' => Tok::Not,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    i += 1;
                }
                Tok::And
            }
            b'|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    i += 1;
                }
                Tok::Or
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Implies
            }
            b'<' if text[i..].starts_with("<->") => {
                i += 2;
                Tok::Iff
            }
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.')
                {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                return Err(LtlError::Syntax {
                    pos: i,
                    msg: format!("unexpected character `{}`", text[i..].chars().next().unwrap()),
                })
            }
        };
        i += 1;
        out.push((start, tok));
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    aps: &'a ApSplit,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn at(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn iff(&mut self) -> Result<Ltl, LtlError> {
        let mut lhs = self.implies()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.implies()?;
            lhs = Ltl::Iff(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Ltl, LtlError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Ltl::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Ltl, LtlError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = Ltl::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Ltl, LtlError> {
        let mut lhs = self.binary_temporal()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = Ltl::and(lhs, self.binary_temporal()?);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<Ltl, LtlError> {
        let lhs = self.unary()?;
        if self.is_keyword("U") {
            self.bump();
            return Ok(Ltl::until(lhs, self.binary_temporal()?));
        }
        if self.is_keyword("R") {
            self.bump();
            return Ok(Ltl::release(lhs, self.binary_temporal()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ltl, LtlError> {
        let pos = self.at();
        match self.bump() {
            Tok::Not => Ok(Ltl::not(self.unary()?)),
            Tok::LParen => {
                let f = self.iff()?;
                if self.bump() != Tok::RParen {
                    return Err(LtlError::Syntax { pos: self.at(), msg: "expected `)`".into() });
                }
                Ok(f)
            }
            Tok::Ident(s) => match s.as_str() {
                "X" => Ok(Ltl::next(self.unary()?)),
                "F" => Ok(Ltl::finally(self.unary()?)),
                "G" => Ok(Ltl::globally(self.unary()?)),
                "true" => Ok(Ltl::True),
                "false" => Ok(Ltl::False),
                "U" | "R" => Err(LtlError::Syntax {
                    pos,
                    msg: format!("binary operator `{s}` missing left operand"),
                }),
                name => {
                    let (kind, index) = self
                        .aps
                        .resolve(name)
                        .ok_or_else(|| LtlError::UndeclaredAtom(name.to_string()))?;
                    Ok(Ltl::Atom(Atom { kind, index, name: name.to_string() }))
                }
            },
            Tok::End => Err(LtlError::Syntax { pos, msg: "unexpected end of formula".into() }),
            t => Err(LtlError::Syntax { pos, msg: format!("unexpected token {t:?}") }),
        }
    }
}

/// Parses `text` with atoms resolved against `aps`.
pub fn parse_ltl(text: &str, aps: &ApSplit) -> Result<LtlFormula, LtlError> {
    for a in &aps.inputs {
        if aps.outputs.contains(a) {
            return Err(LtlError::AmbiguousAtom(a.clone()));
        }
    }
    let mut p = Parser { toks: lex(text)?, pos: 0, aps };
    let root = p.iff()?;
    if *p.peek() != Tok::End {
        return Err(LtlError::Syntax { pos: p.at(), msg: "trailing input".into() });
    }
    Ok(LtlFormula { root, aps: aps.clone() })
}

/// Evaluates a formula with no temporal operators on one letter.
pub fn eval_propositional(f: &Ltl, aps: &ApSplit, letter: usize) -> Option<bool> {
    let e = |g: &Ltl| eval_propositional(g, aps, letter);
    Some(match f {
        Ltl::True => true,
        Ltl::False => false,
        Ltl::Atom(a) => letter >> aps.bit(a.kind, a.index) & 1 == 1,
        Ltl::Not(g) => !e(g)?,
        Ltl::And(a, b) => e(a)? && e(b)?,
        Ltl::Or(a, b) => e(a)? || e(b)?,
        Ltl::Implies(a, b) => !e(a)? || e(b)?,
        Ltl::Iff(a, b) => e(a)? == e(b)?,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aps() -> ApSplit {
        ApSplit::new(["req"], ["p", "q", "grant"])
    }

    #[test]
    fn precedence() {
        let f = parse_ltl("F q & G !p", &aps()).unwrap();
        match &f.root {
            Ltl::And(a, b) => {
                assert!(matches!(**a, Ltl::Finally(_)));
                assert!(matches!(**b, Ltl::Globally(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(f.to_string(), "F q & G !p");
        let g = parse_ltl("G (req -> F grant)", &aps()).unwrap();
        assert_eq!(g.to_string(), "G (req -> F grant)");
        let h = parse_ltl("p U q U p", &aps()).unwrap();
        assert!(matches!(&h.root, Ltl::Until(_, r) if matches!(**r, Ltl::Until(..))));
        let i = parse_ltl("p | q & p", &aps()).unwrap();
        assert!(matches!(&i.root, Ltl::Or(..)));
    }

    #[test]
    fn atoms_resolve() {
        let f = parse_ltl("req & grant", &aps()).unwrap();
        let Ltl::And(a, b) = &f.root else { panic!() };
        assert_eq!(**a, Ltl::Atom(Atom { kind: ApKind::Input, index: 0, name: "req".into() }));
        assert_eq!(**b, Ltl::Atom(Atom { kind: ApKind::Output, index: 2, name: "grant".into() }));
        assert_eq!(eval_propositional(&f.root, &f.aps, 0b1001), Some(true));
        assert_eq!(eval_propositional(&f.root, &f.aps, 0b0001), Some(false));
    }

    #[test]
    fn errors() {
        assert_eq!(parse_ltl("G zz", &aps()), Err(LtlError::UndeclaredAtom("zz".into())));
        assert!(matches!(parse_ltl("p &", &aps()), Err(LtlError::Syntax { pos: 3, .. })));
        assert!(matches!(parse_ltl("(p", &aps()), Err(LtlError::Syntax { .. })));
        assert!(matches!(parse_ltl("p $ q", &aps()), Err(LtlError::Syntax { pos: 2, .. })));
        assert!(matches!(parse_ltl("U p", &aps()), Err(LtlError::Syntax { pos: 0, .. })));
        assert!(parse_ltl("p", &ApSplit::new(["p"], ["p"])).is_err());
    }

    #[test]
    fn display_roundtrip() {
        for s in ["G !p", "p U (q R p)", "(p U q) U p", "X X p -> q", "!(p & q) | F G grant"] {
            let f = parse_ltl(s, &aps()).unwrap();
            let again = parse_ltl(&f.to_string(), &aps()).unwrap();
            assert_eq!(f, again, "{s}");
        }
    }
}
