//! Direct evaluation of LTL on ultimately periodic words.

use crate::ltl::{ApSplit, Ltl};

/// Formulas over input `r` and outputs `p`, `q`.
pub const FORMULA_CORPUS: [&str; 25] = [
    "true",
    "false",
    "p",
    "!p",
    "X p",
    "X X !q",
    "G !p",
    "F p",
    "G F p",
    "F G p",
    "p U q",
    "p R q",
    "!(p U q)",
    "G (r -> F p)",
    "G (p -> X q)",
    "F p & G !q",
    "G F p & G F q",
    "(p U q) | G p",
    "G (r -> X !r)",
    "F (p & X (q & X p))",
    "G (p <-> X !p)",
    "r U (p R q)",
    "X (p U (q U r))",
    "F G !r | G F q",
    "(!p U q) | G !p",
];

/// Truth of `f` at position 0 of `prefix · period^ω`. Letters are bitmasks in
/// the layout given by `aps` (inputs in the low bits).
pub fn eval_lasso(f: &Ltl, aps: &ApSplit, prefix: &[usize], period: &[usize]) -> bool {
    assert!(!period.is_empty());
    let word: Vec<usize> = prefix.iter().chain(period).copied().collect();
    let n = word.len();
    let next: Vec<usize> = (0..n).map(|i| if i + 1 < n { i + 1 } else { prefix.len() }).collect();
    sat(f, aps, &word, &next)[0]
}

fn sat(f: &Ltl, aps: &ApSplit, word: &[usize], next: &[usize]) -> Vec<bool> {
    let n = word.len();
    let s = |g: &Ltl| sat(g, aps, word, next);
    match f {
        Ltl::True => vec![true; n],
        Ltl::False => vec![false; n],
        Ltl::Atom(a) => word.iter().map(|&l| l >> aps.bit(a.kind, a.index) & 1 == 1).collect(),
        Ltl::Not(g) => s(g).into_iter().map(|v| !v).collect(),
        Ltl::And(a, b) => zip(s(a), s(b), |x, y| x && y),
        Ltl::Or(a, b) => zip(s(a), s(b), |x, y| x || y),
        Ltl::Implies(a, b) => zip(s(a), s(b), |x, y| !x || y),
        Ltl::Iff(a, b) => zip(s(a), s(b), |x, y| x == y),
        Ltl::Next(g) => {
            let v = s(g);
            next.iter().map(|&j| v[j]).collect()
        }
        Ltl::Until(a, b) => until(&s(a), &s(b), next),
        Ltl::Finally(g) => until(&vec![true; n], &s(g), next),
        Ltl::Release(a, b) => release(&s(a), &s(b), next),
        Ltl::Globally(g) => release(&vec![false; n], &s(g), next),
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// Least fixpoint of `b ∨ (a ∧ X ·)`.
fn until(a: &[bool], b: &[bool], next: &[usize]) -> Vec<bool> {
    let mut v = b.to_vec();
    loop {
        let w: Vec<bool> = (0..v.len()).map(|i| b[i] || (a[i] && v[next[i]])).collect();
        if w == v {
            return v;
        }
        v = w;
    }
}

/// Greatest fixpoint of `b ∧ (a ∨ X ·)`.
fn release(a: &[bool], b: &[bool], next: &[usize]) -> Vec<bool> {
    let mut v = vec![true; a.len()];
    loop {
        let w: Vec<bool> = (0..v.len()).map(|i| b[i] && (a[i] || v[next[i]])).collect();
        if w == v {
            return v;
        }
        v = w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse_ltl;

    fn ev(f: &str, prefix: &[usize], period: &[usize]) -> bool {
        let aps = ApSplit::new(["r"], ["p", "q"]);
        eval_lasso(&parse_ltl(f, &aps).unwrap().root, &aps, prefix, period)
    }

    #[test]
    fn hand_cases() {
        // p is bit 1, q bit 2, r bit 0.
        assert!(ev("G !p", &[], &[0]));
        assert!(!ev("G !p", &[0], &[2]));
        assert!(ev("F p", &[0, 0], &[2]));
        assert!(ev("G F p", &[], &[0, 2]));
        assert!(!ev("F G p", &[], &[0, 2]));
        assert!(ev("p U q", &[2, 2], &[4]));
        assert!(!ev("p U q", &[2], &[0]));
        assert!(!ev("p U q", &[], &[2]));
        assert!(ev("p R q", &[], &[4]));
        assert!(ev("X p", &[0], &[2]));
    }

    #[test]
    fn corpus_parses() {
        let aps = ApSplit::new(["r"], ["p", "q"]);
        for f in FORMULA_CORPUS {
            parse_ltl(f, &aps).unwrap_or_else(|e| panic!("{f}: {e}"));
        }
    }
}
