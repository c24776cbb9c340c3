//! Tableau translation of LTL into automata.
//!
//! The negated formula is put in negation normal form and expanded into a
//! transition-based generalized Büchi automaton whose states are sets of
//! pending obligations; a transition is accepting for an until-subformula
//! unless that subformula was postponed on it. A level counter turns this
//! into a state-based Büchi automaton, whose structure read universally
//! with accepting states as rejecting states recognizes the formula.

use std::collections::{BTreeSet, HashMap};

use super::{ApSplit, Ltl, LtlFormula};
use crate::automaton::{complete_uca, Nba, Uca};

type Fid = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    Lit(usize, bool),
    And(Fid, Fid),
    Or(Fid, Fid),
    Next(Fid),
    Until(Fid, Fid),
    Release(Fid, Fid),
}

#[derive(Default)]
struct Arena {
    nodes: Vec<Node>,
    index: HashMap<Node, Fid>,
}

impl Arena {
    fn intern(&mut self, n: Node) -> Fid {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        self.nodes.push(n.clone());
        self.index.insert(n, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    /// Negation normal form of `f` (negated iff `neg`).
    fn nnf(&mut self, f: &Ltl, neg: bool, aps: &ApSplit) -> Fid {
        let n = match (f, neg) {
            (Ltl::True, false) | (Ltl::False, true) => Node::True,
            (Ltl::True, true) | (Ltl::False, false) => Node::False,
            (Ltl::Atom(a), _) => Node::Lit(aps.bit(a.kind, a.index), !neg),
            (Ltl::Not(g), _) => return self.nnf(g, !neg, aps),
            (Ltl::And(a, b), false) | (Ltl::Or(a, b), true) => {
                Node::And(self.nnf(a, neg, aps), self.nnf(b, neg, aps))
            }
            (Ltl::Or(a, b), false) | (Ltl::And(a, b), true) => {
                Node::Or(self.nnf(a, neg, aps), self.nnf(b, neg, aps))
            }
            (Ltl::Implies(a, b), false) => Node::Or(self.nnf(a, true, aps), self.nnf(b, false, aps)),
            (Ltl::Implies(a, b), true) => Node::And(self.nnf(a, false, aps), self.nnf(b, true, aps)),
            (Ltl::Iff(a, b), _) => {
                // a <-> b == (a & b) | (!a & !b); negated: (a & !b) | (!a & b)
                let (pa, na) = (self.nnf(a, false, aps), self.nnf(a, true, aps));
                let (pb, nb) = (self.nnf(b, false, aps), self.nnf(b, true, aps));
                let (l, r) = if neg {
                    (self.intern(Node::And(pa, nb)), self.intern(Node::And(na, pb)))
                } else {
                    (self.intern(Node::And(pa, pb)), self.intern(Node::And(na, nb)))
                };
                Node::Or(l, r)
            }
            (Ltl::Next(g), _) => Node::Next(self.nnf(g, neg, aps)),
            (Ltl::Until(a, b), false) | (Ltl::Release(a, b), true) => {
                Node::Until(self.nnf(a, neg, aps), self.nnf(b, neg, aps))
            }
            (Ltl::Release(a, b), false) | (Ltl::Until(a, b), true) => {
                Node::Release(self.nnf(a, neg, aps), self.nnf(b, neg, aps))
            }
            (Ltl::Finally(g), false) | (Ltl::Globally(g), true) => {
                let t = self.intern(Node::True);
                Node::Until(t, self.nnf(g, neg, aps))
            }
            (Ltl::Globally(g), false) | (Ltl::Finally(g), true) => {
                let ff = self.intern(Node::False);
                Node::Release(ff, self.nnf(g, neg, aps))
            }
        };
        self.intern(n)
    }
}

/// One way of discharging a state's obligations in the current step.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Cover {
    pos: u32,
    neg: u32,
    next: BTreeSet<Fid>,
    postponed: BTreeSet<Fid>,
}

impl Cover {
    fn admits(&self, letter: u32) -> bool {
        letter & self.pos == self.pos && letter & self.neg == 0
    }
}

fn expand(arena: &Arena, obligations: &BTreeSet<Fid>) -> Vec<Cover> {
    struct Branch {
        todo: Vec<Fid>,
        done: BTreeSet<Fid>,
        cover: Cover,
    }
    let mut out = BTreeSet::new();
    let mut stack = vec![Branch {
        todo: obligations.iter().copied().collect(),
        done: BTreeSet::new(),
        cover: Cover { pos: 0, neg: 0, next: BTreeSet::new(), postponed: BTreeSet::new() },
    }];
    'branch: while let Some(mut b) = stack.pop() {
        while let Some(f) = b.todo.pop() {
            if !b.done.insert(f) {
                continue;
            }
            match arena.nodes[f] {
                Node::True => {}
                Node::False => continue 'branch,
                Node::Lit(bit, positive) => {
                    let m = 1u32 << bit;
                    if positive {
                        b.cover.pos |= m;
                    } else {
                        b.cover.neg |= m;
                    }
                    if b.cover.pos & b.cover.neg != 0 {
                        continue 'branch;
                    }
                }
                Node::And(l, r) => {
                    b.todo.push(l);
                    b.todo.push(r);
                }
                Node::Or(l, r) => {
                    let mut alt = Branch {
                        todo: b.todo.clone(),
                        done: b.done.clone(),
                        cover: b.cover.clone(),
                    };
                    alt.todo.push(r);
                    stack.push(alt);
                    b.todo.push(l);
                }
                Node::Next(g) => {
                    b.cover.next.insert(g);
                }
                Node::Until(l, r) => {
                    let mut alt = Branch {
                        todo: b.todo.clone(),
                        done: b.done.clone(),
                        cover: b.cover.clone(),
                    };
                    alt.todo.push(l);
                    alt.cover.next.insert(f);
                    alt.cover.postponed.insert(f);
                    stack.push(alt);
                    b.todo.push(r);
                }
                Node::Release(l, r) => {
                    let mut alt = Branch {
                        todo: b.todo.clone(),
                        done: b.done.clone(),
                        cover: b.cover.clone(),
                    };
                    alt.todo.push(r);
                    alt.cover.next.insert(f);
                    stack.push(alt);
                    b.todo.push(l);
                    b.todo.push(r);
                }
            }
        }
        out.insert(b.cover);
    }
    out.into_iter().collect()
}

fn untils(arena: &Arena, root: Fid) -> Vec<Fid> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![root];
    while let Some(f) = stack.pop() {
        if !seen.insert(f) {
            continue;
        }
        match arena.nodes[f] {
            Node::And(a, b) | Node::Or(a, b) | Node::Until(a, b) | Node::Release(a, b) => {
                stack.push(a);
                stack.push(b);
            }
            Node::Next(a) => stack.push(a),
            _ => {}
        }
    }
    seen.into_iter().filter(|&f| matches!(arena.nodes[f], Node::Until(..))).collect()
}

/// Büchi automaton for `formula` over the valuation alphabet of `aps`.
fn nba_for(formula: &Ltl, negate: bool, aps: &ApSplit) -> Nba {
    assert!(
        aps.inputs.len() + aps.outputs.len() <= 16,
        "at most 16 atomic propositions are supported"
    );
    let mut arena = Arena::default();
    let root = arena.nnf(formula, negate, aps);
    let us = untils(&arena, root);
    let n_acc = us.len();
    let alphabet = aps.alphabet();
    let letters = alphabet.size() as u32;

    let mut tstates: Vec<BTreeSet<Fid>> = Vec::new();
    let mut tindex: HashMap<BTreeSet<Fid>, usize> = HashMap::new();
    let mut covers: Vec<Vec<Cover>> = Vec::new();
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    let mut nindex: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Vec<(u32, usize)>> = Vec::new();

    let init: BTreeSet<Fid> = [root].into_iter().collect();
    tindex.insert(init.clone(), 0);
    tstates.push(init);
    nodes.push((0, 0));
    nindex.insert((0, 0), 0);
    edges.push(Vec::new());

    let mut work = vec![0usize];
    while let Some(v) = work.pop() {
        let (ts, level) = nodes[v];
        while covers.len() <= ts {
            let obligations = tstates[covers.len()].clone();
            covers.push(expand(&arena, &obligations));
        }
        let base = if level == n_acc { 0 } else { level };
        for c in covers[ts].clone() {
            let target_ts = match tindex.get(&c.next) {
                Some(&t) => t,
                None => {
                    tstates.push(c.next.clone());
                    tindex.insert(c.next.clone(), tstates.len() - 1);
                    tstates.len() - 1
                }
            };
            let mut lvl = base;
            while lvl < n_acc && !c.postponed.contains(&us[lvl]) {
                lvl += 1;
            }
            let key = (target_ts, lvl);
            let w = match nindex.get(&key) {
                Some(&w) => w,
                None => {
                    nodes.push(key);
                    nindex.insert(key, nodes.len() - 1);
                    edges.push(Vec::new());
                    work.push(nodes.len() - 1);
                    nodes.len() - 1
                }
            };
            for l in 0..letters {
                if c.admits(l) {
                    edges[v].push((l, w));
                }
            }
        }
    }

    let mut nba = Nba::new(alphabet, nodes.len());
    nba.add_initial(0);
    for (v, es) in edges.iter().enumerate() {
        for &(l, w) in es {
            nba.add_transition(v, l as usize, w);
        }
        nba.set_accepting(v, nodes[v].1 == n_acc);
        nba.set_state_name(v, format!("t{}.{}", nodes[v].0, nodes[v].1));
    }
    nba
}

/// Büchi automaton recognizing the words satisfying `phi`.
pub fn ltl_to_nba(phi: &LtlFormula) -> Nba {
    nba_for(&phi.root, false, &phi.aps)
}

/// Complete universal co-Büchi automaton recognizing the words satisfying `phi`.
///
/// Each top-level conjunct is translated separately (the disjoint union of
/// universal automata recognizes the intersection), pruned, and the union
/// is completed with one sink.
pub fn ltl_to_uca(phi: &LtlFormula) -> Uca {
    let mut parts = phi
        .root
        .conjuncts()
        .into_iter()
        .map(|c| nba_for(c, true, &phi.aps).dualize().prune());
    let first = parts.next().expect("at least one conjunct");
    let union = parts.fold(first, |acc, p| acc.union(&p));
    complete_uca(&union)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::uca_accepts_lasso;
    use crate::ltl::parse_ltl;

    fn compile(s: &str, aps: &ApSplit) -> Uca {
        ltl_to_uca(&parse_ltl(s, aps).unwrap())
    }

    #[test]
    fn g_not_p_shape() {
        let aps = ApSplit::outputs_only(["p"]);
        let a = compile("G !p", &aps);
        assert!(a.is_complete());
        // initial state, rejecting absorbing state, completion sink
        assert_eq!(a.num_states(), 3);
        assert_eq!(a.rejecting().len(), 1);
        assert!(uca_accepts_lasso(&a, &[], &[0]));
        assert!(!uca_accepts_lasso(&a, &[0], &[1]));
        assert!(!uca_accepts_lasso(&a, &[0, 0], &[0, 1]));
    }

    #[test]
    fn constants() {
        let aps = ApSplit::outputs_only(["p"]);
        let t = compile("true", &aps);
        assert!(t.rejecting().is_empty());
        let f = compile("false", &aps);
        for per in [[0], [1]] {
            assert!(uca_accepts_lasso(&t, &[], &per));
            assert!(!uca_accepts_lasso(&f, &[], &per));
        }
    }

    #[test]
    fn liveness_words() {
        let aps = ApSplit::outputs_only(["p", "q"]);
        let gf = compile("G F p", &aps);
        assert!(uca_accepts_lasso(&gf, &[0], &[0, 1]));
        assert!(!uca_accepts_lasso(&gf, &[1, 1], &[0]));
        let u = compile("p U q", &aps);
        assert!(uca_accepts_lasso(&u, &[1, 1], &[2]));
        assert!(!uca_accepts_lasso(&u, &[1, 0], &[2]));
        assert!(!uca_accepts_lasso(&u, &[], &[1]));
        let both = compile("G F p & G F q", &aps);
        assert!(uca_accepts_lasso(&both, &[], &[1, 2]));
        assert!(!uca_accepts_lasso(&both, &[], &[1]));
    }
}
