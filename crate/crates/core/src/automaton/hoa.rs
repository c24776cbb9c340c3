//! Reading and writing automata in the HOA v1 text format.
//!
//! Export writes universal co-Büchi automata with state-based `Fin(0)`
//! acceptance, universal branching as conjunctions of target states, and
//! one fully specified cube label per letter. Import accepts `Fin(0)`
//! (co-Büchi), `t`, and, when dualization is requested, `Inf(0)` (Büchi,
//! read with the complemented universal semantics). Edge labels may be
//! explicit, inherited from a state label, or implicit; transition-based
//! marks are converted to state-based ones by splitting targets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use super::{Alphabet, Uca};
use crate::ltl::ApSplit;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HoaError {
    #[error("malformed HOA at line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("unsupported acceptance condition `{0}`")]
    UnsupportedAcceptance(String),
    #[error("atomic proposition `{0}` is not declared in the proposition split")]
    UnknownAp(String),
}

fn malformed(line: usize, msg: impl Into<String>) -> HoaError {
    HoaError::Malformed { line, msg: msg.into() }
}

/// HOA proposition names and, per letter, the HOA valuation it encodes.
fn hoa_aps(alphabet: &Alphabet) -> (Vec<String>, Vec<u64>) {
    match alphabet {
        Alphabet::Valuations { .. } => {
            let aps = alphabet.aps();
            let n = alphabet.size();
            (aps, (0..n as u64).collect())
        }
        Alphabet::External { outputs, inputs } => {
            let bits = |n: usize| (usize::BITS - n.saturating_sub(1).leading_zeros()) as usize;
            let (bo, bi) = (bits(outputs.len()), bits(inputs.len()));
            let mut aps: Vec<String> = (0..bo).map(|i| format!("obs.{i}")).collect();
            aps.extend((0..bi).map(|i| format!("inp.{i}")));
            let codes = (0..outputs.len() * inputs.len())
                .map(|l| {
                    let (y, u) = (l / inputs.len(), l % inputs.len());
                    (y as u64) | (u as u64) << bo
                })
                .collect();
            (aps, codes)
        }
    }
}

fn cube(code: u64, n: usize) -> String {
    if n == 0 {
        return "t".into();
    }
    (0..n)
        .map(|i| if code >> i & 1 == 1 { i.to_string() } else { format!("!{i}") })
        .collect::<Vec<_>>()
        .join("&")
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Serializes a universal co-Büchi automaton.
pub fn hoa_export(a: &Uca) -> String {
    let (aps, codes) = hoa_aps(a.alphabet());
    let mut s = String::new();
    let _ = writeln!(s, "HOA: v1");
    let _ = writeln!(s, "States: {}", a.num_states());
    if !a.initial().is_empty() {
        let starts: Vec<String> = a.initial().iter().map(usize::to_string).collect();
        let _ = writeln!(s, "Start: {}", starts.join("&"));
    }
    let _ = write!(s, "AP: {}", aps.len());
    for ap in &aps {
        let _ = write!(s, " {}", quote(ap));
    }
    s.push('\n');
    let _ = writeln!(s, "acc-name: co-Buchi");
    let _ = writeln!(s, "Acceptance: 1 Fin(0)");
    let _ = writeln!(s, "properties: trans-labels explicit-labels state-acc univ-branch");
    let _ = writeln!(s, "--BODY--");
    for q in 0..a.num_states() {
        let _ = write!(s, "State: {} {}", q, quote(a.state_name(q)));
        if a.is_rejecting(q) {
            s.push_str(" {0}");
        }
        s.push('\n');
        for (l, &code) in codes.iter().enumerate() {
            let succ = a.successors(q, l);
            if succ.is_empty() {
                continue;
            }
            let targets: Vec<String> = succ.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "[{}] {}", cube(code, aps.len()), targets.join("&"));
        }
    }
    let _ = writeln!(s, "--END--");
    s
}

#[derive(Clone, Debug, Default)]
pub struct HoaImportOptions {
    /// Proposition split to map HOA propositions into; when absent every
    /// HOA proposition becomes an output proposition.
    pub aps: Option<ApSplit>,
    /// Read a Büchi automaton and dualize it into a universal co-Büchi one.
    pub dualize: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Label {
    True,
    False,
    Ap(usize),
    Not(Box<Label>),
    And(Box<Label>, Box<Label>),
    Or(Box<Label>, Box<Label>),
}

impl Label {
    fn eval(&self, v: u64) -> bool {
        match self {
            Label::True => true,
            Label::False => false,
            Label::Ap(i) => v >> i & 1 == 1,
            Label::Not(l) => !l.eval(v),
            Label::And(a, b) => a.eval(v) && b.eval(v),
            Label::Or(a, b) => a.eval(v) || b.eval(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(usize),
    Str(String),
    Ident(String),
    Alias(String),
    Header(String),
    Punct(char),
    Body,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, HoaError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c == '\n' {
            line += 1;
            chars.next();
        } else if c.is_whitespace() {
            chars.next();
        } else if c == '/' && text[i..].starts_with("/*") {
            let end = text[i + 2..]
                .find("*/")
                .ok_or_else(|| malformed(line, "unterminated comment"))?;
            line += text[i..i + 2 + end].matches('\n').count();
            while chars.peek().is_some_and(|&(j, _)| j < i + end + 4) {
                chars.next();
            }
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some((_, '\\')) => {
                        if let Some((_, e)) = chars.next() {
                            s.push(e);
                        }
                    }
                    Some((_, '"')) => break,
                    Some((_, ch)) => {
                        if ch == '\n' {
                            line += 1;
                        }
                        s.push(ch);
                    }
                    None => return Err(malformed(line, "unterminated string")),
                }
            }
            out.push((line, Tok::Str(s)));
        } else if c.is_ascii_digit() {
            let mut n = 0usize;
            while let Some(&(_, d)) = chars.peek() {
                if let Some(v) = d.to_digit(10) {
                    n = n * 10 + v as usize;
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((line, Tok::Int(n)));
        } else if c.is_alphabetic() || c == '_' || c == '@' || c == '-' {
            let start = i;
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if d.is_alphanumeric() || d == '_' || d == '-' || d == '@' || d == '.' {
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            let word = &text[start..end];
            let tok = if word == "--BODY--" {
                Tok::Body
            } else if word == "--END--" {
                Tok::End
            } else if let Some(a) = word.strip_prefix('@') {
                Tok::Alias(a.to_string())
            } else if chars.peek().is_some_and(|&(_, d)| d == ':') {
                chars.next();
                Tok::Header(word.to_string())
            } else {
                Tok::Ident(word.to_string())
            };
            out.push((line, tok));
        } else {
            chars.next();
            out.push((line, Tok::Punct(c)));
        }
    }
    Ok(out)
}

struct Cursor {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Cursor {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map_or(0, |t| t.0)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn int(&mut self) -> Result<usize, HoaError> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(n),
            other => Err(malformed(self.line(), format!("expected integer, got {other:?}"))),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Consumes tokens up to the next header, `--BODY--` or `--END--`.
    fn rest_of_header(&mut self) -> Vec<Tok> {
        let mut v = Vec::new();
        while let Some(t) = self.peek() {
            if matches!(t, Tok::Header(_) | Tok::Body | Tok::End) {
                break;
            }
            v.push(self.next().unwrap());
        }
        v
    }

    fn label(&mut self, aliases: &HashMap<String, Label>) -> Result<Label, HoaError> {
        let mut lhs = self.label_and(aliases)?;
        while self.eat('|') {
            lhs = Label::Or(Box::new(lhs), Box::new(self.label_and(aliases)?));
        }
        Ok(lhs)
    }

    fn label_and(&mut self, aliases: &HashMap<String, Label>) -> Result<Label, HoaError> {
        let mut lhs = self.label_atom(aliases)?;
        while self.eat('&') {
            lhs = Label::And(Box::new(lhs), Box::new(self.label_atom(aliases)?));
        }
        Ok(lhs)
    }

    fn label_atom(&mut self, aliases: &HashMap<String, Label>) -> Result<Label, HoaError> {
        let line = self.line();
        match self.next() {
            Some(Tok::Punct('!')) => Ok(Label::Not(Box::new(self.label_atom(aliases)?))),
            Some(Tok::Punct('(')) => {
                let l = self.label(aliases)?;
                if !self.eat(')') {
                    return Err(malformed(line, "expected `)` in label"));
                }
                Ok(l)
            }
            Some(Tok::Int(i)) => Ok(Label::Ap(i)),
            Some(Tok::Ident(s)) if s == "t" => Ok(Label::True),
            Some(Tok::Ident(s)) if s == "f" => Ok(Label::False),
            Some(Tok::Alias(a)) => aliases
                .get(&a)
                .cloned()
                .ok_or_else(|| malformed(line, format!("undefined alias @{a}"))),
            other => Err(malformed(line, format!("unexpected {other:?} in label"))),
        }
    }

    /// `{0 1 ...}` if present.
    fn marks(&mut self) -> Result<Vec<usize>, HoaError> {
        let mut v = Vec::new();
        if self.eat('{') {
            while !self.eat('}') {
                v.push(self.int()?);
            }
        }
        Ok(v)
    }
}

enum Acc {
    Fin,
    Inf,
    True,
}

struct Edge {
    label: Option<Label>,
    targets: Vec<usize>,
    marked: bool,
}

struct StateDef {
    name: Option<String>,
    label: Option<Label>,
    marked: bool,
    edges: Vec<Edge>,
}

/// Parses an HOA automaton into a universal co-Büchi automaton.
pub fn hoa_import(text: &str, opts: &HoaImportOptions) -> Result<Uca, HoaError> {
    let mut c = Cursor { toks: tokenize(text)?, pos: 0 };
    let mut num_states = None;
    let mut starts: Vec<Vec<usize>> = Vec::new();
    let mut aps: Vec<String> = Vec::new();
    let mut aliases: HashMap<String, Label> = HashMap::new();
    let mut acc = None;
    let mut saw_version = false;

    loop {
        let line = c.line();
        match c.next() {
            Some(Tok::Header(h)) => match h.as_str() {
                "HOA" => {
                    match c.next() {
                        Some(Tok::Ident(v)) if v == "v1" => {}
                        other => return Err(malformed(line, format!("unsupported version {other:?}"))),
                    }
                    saw_version = true;
                }
                "States" => num_states = Some(c.int()?),
                "Start" => {
                    let mut conj = vec![c.int()?];
                    while c.eat('&') {
                        conj.push(c.int()?);
                    }
                    starts.push(conj);
                }
                "AP" => {
                    let n = c.int()?;
                    for _ in 0..n {
                        match c.next() {
                            Some(Tok::Str(s)) => aps.push(s),
                            _ => return Err(malformed(line, "expected quoted AP name")),
                        }
                    }
                }
                "Alias" => {
                    let name = match c.next() {
                        Some(Tok::Alias(a)) => a,
                        _ => return Err(malformed(line, "expected @alias")),
                    };
                    let l = c.label(&aliases)?;
                    aliases.insert(name, l);
                }
                "Acceptance" => {
                    let toks = c.rest_of_header();
                    let render = toks
                        .iter()
                        .map(|t| match t {
                            Tok::Int(n) => n.to_string(),
                            Tok::Ident(s) => s.clone(),
                            Tok::Punct(p) => p.to_string(),
                            other => format!("{other:?}"),
                        })
                        .collect::<Vec<_>>()
                        .join(" ");
                    acc = Some(match render.as_str() {
                        "1 Fin ( 0 )" => Acc::Fin,
                        "1 Inf ( 0 )" => Acc::Inf,
                        "0 t" => Acc::True,
                        _ => return Err(HoaError::UnsupportedAcceptance(render)),
                    });
                }
                _ => {
                    c.rest_of_header();
                }
            },
            Some(Tok::Body) => break,
            other => return Err(malformed(line, format!("unexpected {other:?} in header"))),
        }
    }
    if !saw_version {
        return Err(malformed(1, "missing `HOA: v1`"));
    }
    let acc = acc.ok_or_else(|| malformed(c.line(), "missing Acceptance"))?;
    match (&acc, opts.dualize) {
        (Acc::Fin, false) | (Acc::True, false) | (Acc::Inf, true) => {}
        (Acc::Inf, false) => {
            return Err(HoaError::UnsupportedAcceptance(
                "Büchi acceptance without dualization".into(),
            ))
        }
        (_, true) => {
            return Err(HoaError::UnsupportedAcceptance(
                "dualization requires Büchi acceptance Inf(0)".into(),
            ))
        }
    }
    if opts.dualize && starts.iter().any(|s| s.len() > 1) {
        return Err(HoaError::UnsupportedAcceptance("alternating initial condition".into()));
    }

    let mut states: BTreeMap<usize, StateDef> = BTreeMap::new();
    loop {
        let line = c.line();
        match c.next() {
            Some(Tok::End) => break,
            Some(Tok::Header(h)) if h == "State" => {
                let label = if c.eat('[') {
                    let l = c.label(&aliases)?;
                    if !c.eat(']') {
                        return Err(malformed(line, "expected `]`"));
                    }
                    Some(l)
                } else {
                    None
                };
                let id = c.int()?;
                let name = match c.peek() {
                    Some(Tok::Str(_)) => match c.next() {
                        Some(Tok::Str(s)) => Some(s),
                        _ => unreachable!(),
                    },
                    _ => None,
                };
                let marked = c.marks()?.contains(&0);
                let mut edges = Vec::new();
                loop {
                    match c.peek() {
                        Some(Tok::Punct('[')) | Some(Tok::Int(_)) => {}
                        _ => break,
                    }
                    let elabel = if c.eat('[') {
                        let l = c.label(&aliases)?;
                        if !c.eat(']') {
                            return Err(malformed(c.line(), "expected `]`"));
                        }
                        Some(l)
                    } else {
                        None
                    };
                    let mut targets = vec![c.int()?];
                    while c.eat('&') {
                        targets.push(c.int()?);
                    }
                    if opts.dualize && targets.len() > 1 {
                        return Err(HoaError::UnsupportedAcceptance(
                            "alternating transitions in a Büchi automaton".into(),
                        ));
                    }
                    let emarked = c.marks()?.contains(&0);
                    edges.push(Edge { label: elabel, targets, marked: emarked });
                }
                if states.insert(id, StateDef { name, label, marked, edges }).is_some() {
                    return Err(malformed(line, format!("state {id} defined twice")));
                }
            }
            other => return Err(malformed(line, format!("unexpected {other:?} in body"))),
        }
    }

    let n = num_states.unwrap_or_else(|| states.keys().next_back().map_or(0, |&k| k + 1));
    if let Some(&bad) = states.keys().find(|&&k| k >= n) {
        return Err(malformed(c.line(), format!("state {bad} out of range")));
    }

    let split = opts.aps.clone().unwrap_or_else(|| ApSplit::outputs_only(aps.clone()));
    let alphabet = split.alphabet();
    let ours = alphabet.aps();
    let ap_bits: Vec<usize> = aps
        .iter()
        .map(|a| ours.iter().position(|o| o == a).ok_or_else(|| HoaError::UnknownAp(a.clone())))
        .collect::<Result<_, _>>()?;
    let hoa_val = |letter: usize| -> u64 {
        ap_bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| letter >> b & 1 == 1)
            .fold(0u64, |v, (i, _)| v | 1 << i)
    };
    let hoa_letters = 1usize << aps.len();

    // Transition-based marks: a marked edge into q leads to a marked copy of q.
    let mut copies: BTreeMap<usize, usize> = BTreeMap::new();
    let state_marked = |q: usize| states.get(&q).is_some_and(|s| s.marked);
    let mut total = n;
    for s in states.values() {
        for e in &s.edges {
            if e.marked {
                for &t in &e.targets {
                    if t >= n {
                        return Err(malformed(0, format!("edge target {t} out of range")));
                    }
                    if !state_marked(t) && !copies.contains_key(&t) {
                        copies.insert(t, total);
                        total += 1;
                    }
                }
            }
        }
    }

    let mut a = Uca::new(alphabet.clone(), total);
    for conj in &starts {
        for &q in conj {
            if q >= n {
                return Err(malformed(0, format!("start state {q} out of range")));
            }
            a.add_initial(q);
        }
    }
    let marked_value = match acc {
        Acc::Fin | Acc::Inf => true,
        Acc::True => false,
    };
    for (&q, s) in &states {
        if let Some(name) = &s.name {
            a.set_state_name(q, name.clone());
        }
        a.set_rejecting(q, s.marked && marked_value);
        let mut implicit = 0usize;
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); a.num_letters()];
        for e in &s.edges {
            let label = match (&e.label, &s.label) {
                (Some(l), _) | (None, Some(l)) => l.clone(),
                (None, None) => {
                    let code = implicit as u64;
                    implicit += 1;
                    if implicit > hoa_letters {
                        return Err(malformed(0, "too many implicitly labeled edges"));
                    }
                    (0..aps.len()).fold(Label::True, |acc, i| {
                        let lit = if code >> i & 1 == 1 {
                            Label::Ap(i)
                        } else {
                            Label::Not(Box::new(Label::Ap(i)))
                        };
                        Label::And(Box::new(acc), Box::new(lit))
                    })
                }
            };
            for t in &e.targets {
                if *t >= n {
                    return Err(malformed(0, format!("edge target {t} out of range")));
                }
            }
            for (l, row) in rows.iter_mut().enumerate() {
                if label.eval(hoa_val(l)) {
                    for &t in &e.targets {
                        let t = if e.marked && !state_marked(t) { copies[&t] } else { t };
                        row.insert(t);
                    }
                }
            }
        }
        for (l, row) in rows.into_iter().enumerate() {
            for t in row {
                a.add_transition(q, l, t);
            }
        }
    }
    for (&orig, &copy) in &copies {
        a.set_state_name(copy, format!("{}'", a.state_name(orig)));
        a.set_rejecting(copy, marked_value);
        for l in 0..a.num_letters() {
            for t in a.successors(orig, l).to_vec() {
                a.add_transition(copy, l, t);
            }
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::tests::g_not_p;
    use crate::automaton::{complete_uca, uca_accepts_lasso};

    #[test]
    fn roundtrip_identity() {
        let a = complete_uca(&g_not_p());
        let text = hoa_export(&a);
        let b = hoa_import(&text, &HoaImportOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(hoa_export(&b), text);
    }

    #[test]
    fn buchi_dualized() {
        let text = r#"HOA: v1
States: 2
Start: 0
AP: 1 "p"
Acceptance: 1 Inf(0)
--BODY--
State: 0
[!0] 0
[0] 1
State: 1 {0}
[t] 1
--END--
"#;
        assert!(matches!(
            hoa_import(text, &HoaImportOptions::default()),
            Err(HoaError::UnsupportedAcceptance(_))
        ));
        let a = hoa_import(text, &HoaImportOptions { aps: None, dualize: true }).unwrap();
        assert_eq!(a.rejecting(), vec![1]);
        assert!(uca_accepts_lasso(&a, &[], &[0]));
        assert!(!uca_accepts_lasso(&a, &[0], &[1]));
    }

    #[test]
    fn parity_rejected() {
        let text = "HOA: v1\nStates: 1\nStart: 0\nAP: 0\nacc-name: parity min even 2\nAcceptance: 2 Inf(0) | Fin(1)\n--BODY--\nState: 0\n[t] 0\n--END--\n";
        assert!(matches!(
            hoa_import(text, &HoaImportOptions::default()),
            Err(HoaError::UnsupportedAcceptance(_))
        ));
    }

    #[test]
    fn aliases_state_labels_and_edge_marks() {
        let text = r#"HOA: v1
States: 2
Start: 0
AP: 2 "q" "p"
Alias: @p 1
Acceptance: 1 Fin(0)
--BODY-- /* p leads to a marked edge */
State: 0
[!@p] 0
[@p] 1 {0}
State: [t] 1
0
--END--
"#;
        let split = ApSplit::outputs_only(["p", "q"]);
        let a = hoa_import(text, &HoaImportOptions { aps: Some(split), dualize: false }).unwrap();
        assert_eq!(a.num_states(), 3);
        // Our letter bit 0 is p.
        assert!(uca_accepts_lasso(&a, &[], &[0]));
        assert!(uca_accepts_lasso(&a, &[], &[2]));
        assert!(uca_accepts_lasso(&a, &[1], &[0]));
        assert!(!uca_accepts_lasso(&a, &[], &[1]));
        assert!(!uca_accepts_lasso(&a, &[0], &[1, 0]));
        let unknown = HoaImportOptions { aps: Some(ApSplit::outputs_only(["p"])), dualize: false };
        assert_eq!(hoa_import(text, &unknown), Err(HoaError::UnknownAp("q".into())));
    }

    #[test]
    fn malformed_inputs() {
        for bad in ["", "HOA: v1\n--BODY--\n--END--\n", "HOA: v2\n"] {
            assert!(hoa_import(bad, &HoaImportOptions::default()).is_err(), "{bad:?}");
        }
    }
}
