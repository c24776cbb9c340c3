//! Explicit automata over finite letter alphabets.
//!
//! [`Uca`] is a universal co-Büchi automaton: a word is accepted iff every
//! infinite run visits the rejecting set finitely often. Finite runs (those
//! that reach a state without successor on the next letter) do not
//! constrain acceptance. [`Nba`] has the same structure read
//! nondeterministically with a Büchi condition; [`Uca::dualize`] and
//! [`Nba::dualize`] swap readings without touching the structure, which
//! complements the language.

pub mod hoa;

use std::collections::BTreeSet;

use crate::graph;

/// How letter indices are interpreted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Alphabet {
    /// Pairs `(mu, lambda)` of input and output proposition valuations;
    /// letter index is `mu | lambda << inputs.len()`.
    Valuations { inputs: Vec<String>, outputs: Vec<String> },
    /// Pairs `(y, u)` of output and input ids; letter index is `y * |U| + u`.
    External { outputs: Vec<String>, inputs: Vec<String> },
}

impl Alphabet {
    pub fn valuations(inputs: &[String], outputs: &[String]) -> Self {
        Alphabet::Valuations { inputs: inputs.to_vec(), outputs: outputs.to_vec() }
    }

    pub fn size(&self) -> usize {
        match self {
            Alphabet::Valuations { inputs, outputs } => 1 << (inputs.len() + outputs.len()),
            Alphabet::External { outputs, inputs } => outputs.len() * inputs.len(),
        }
    }

    /// All proposition names, inputs first.
    pub fn aps(&self) -> Vec<String> {
        match self {
            Alphabet::Valuations { inputs, outputs } => {
                inputs.iter().chain(outputs.iter()).cloned().collect()
            }
            Alphabet::External { .. } => Vec::new(),
        }
    }

    pub fn describe(&self, letter: usize) -> String {
        match self {
            Alphabet::Valuations { .. } => {
                let aps = self.aps();
                let on: Vec<&str> = aps
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| letter >> i & 1 == 1)
                    .map(|(_, n)| n.as_str())
                    .collect();
                format!("{{{}}}", on.join(","))
            }
            Alphabet::External { outputs, inputs } => {
                let n = inputs.len();
                format!("({},{})", outputs[letter / n], inputs[letter % n])
            }
        }
    }
}

/// Transition structure shared by [`Uca`] and [`Nba`].
#[derive(Clone, Debug, PartialEq, Eq)]
struct Structure {
    alphabet: Alphabet,
    initial: Vec<usize>,
    /// `delta[q][letter]`, sorted and duplicate-free.
    delta: Vec<Vec<Vec<usize>>>,
    marked: Vec<bool>,
    names: Vec<String>,
}

impl Structure {
    fn new(alphabet: Alphabet, num_states: usize) -> Self {
        let letters = alphabet.size();
        Structure {
            alphabet,
            initial: Vec::new(),
            delta: vec![vec![Vec::new(); letters]; num_states],
            marked: vec![false; num_states],
            names: (0..num_states).map(|q| format!("q{q}")).collect(),
        }
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        self.delta
            .iter()
            .map(|row| {
                let s: BTreeSet<usize> = row.iter().flatten().copied().collect();
                s.into_iter().collect()
            })
            .collect()
    }

    /// Keeps the states in `keep`, renumbering in order.
    fn restrict(&self, keep: &[bool]) -> Structure {
        let mut map = vec![usize::MAX; keep.len()];
        let mut n = 0;
        for (q, &k) in keep.iter().enumerate() {
            if k {
                map[q] = n;
                n += 1;
            }
        }
        let remap = |v: &[usize]| -> Vec<usize> {
            v.iter().filter(|&&q| keep[q]).map(|&q| map[q]).collect()
        };
        Structure {
            alphabet: self.alphabet.clone(),
            initial: remap(&self.initial),
            delta: (0..keep.len())
                .filter(|&q| keep[q])
                .map(|q| self.delta[q].iter().map(|s| remap(s)).collect())
                .collect(),
            marked: (0..keep.len()).filter(|&q| keep[q]).map(|q| self.marked[q]).collect(),
            names: (0..keep.len()).filter(|&q| keep[q]).map(|q| self.names[q].clone()).collect(),
        }
    }
}

macro_rules! structure_accessors {
    ($t:ty) => {
        impl $t {
            pub fn new(alphabet: Alphabet, num_states: usize) -> Self {
                Self { s: Structure::new(alphabet, num_states) }
            }

            pub fn alphabet(&self) -> &Alphabet {
                &self.s.alphabet
            }

            pub fn num_states(&self) -> usize {
                self.s.delta.len()
            }

            pub fn num_letters(&self) -> usize {
                self.s.alphabet.size()
            }

            pub fn initial(&self) -> &[usize] {
                &self.s.initial
            }

            pub fn successors(&self, q: usize, letter: usize) -> &[usize] {
                &self.s.delta[q][letter]
            }

            pub fn state_name(&self, q: usize) -> &str {
                &self.s.names[q]
            }

            pub fn set_state_name(&mut self, q: usize, name: impl Into<String>) {
                self.s.names[q] = name.into();
            }

            pub fn add_initial(&mut self, q: usize) {
                if let Err(i) = self.s.initial.binary_search(&q) {
                    self.s.initial.insert(i, q);
                }
            }

            pub fn add_transition(&mut self, q: usize, letter: usize, q2: usize) {
                assert!(q2 < self.num_states(), "target state out of range");
                let row = &mut self.s.delta[q][letter];
                if let Err(i) = row.binary_search(&q2) {
                    row.insert(i, q2);
                }
            }

            /// Replaces the successor set of `(q, letter)`.
            pub fn set_successors(&mut self, q: usize, letter: usize, mut succ: Vec<usize>) {
                succ.sort_unstable();
                succ.dedup();
                assert!(succ.iter().all(|&t| t < self.num_states()), "target state out of range");
                self.s.delta[q][letter] = succ;
            }

            /// Appends a state and returns its index.
            pub fn add_state(&mut self, name: impl Into<String>) -> usize {
                let letters = self.num_letters();
                self.s.delta.push(vec![Vec::new(); letters]);
                self.s.marked.push(false);
                self.s.names.push(name.into());
                self.s.delta.len() - 1
            }

            /// Successor adjacency ignoring letters.
            pub fn adjacency(&self) -> Vec<Vec<usize>> {
                self.s.adjacency()
            }

            /// Whether every `(state, letter)` pair has a successor.
            pub fn is_total(&self) -> bool {
                self.s.delta.iter().all(|row| row.iter().all(|s| !s.is_empty()))
            }

            /// Drops states unreachable from the initial states.
            pub fn trim_unreachable(&self) -> Self {
                let seen = graph::reachable(&self.adjacency(), self.s.initial.iter().copied());
                Self { s: self.s.restrict(&seen) }
            }
        }
    };
}

/// Universal co-Büchi automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Uca {
    s: Structure,
}

/// Nondeterministic Büchi automaton with state-based acceptance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nba {
    s: Structure,
}

structure_accessors!(Uca);
structure_accessors!(Nba);

impl Uca {
    pub fn is_rejecting(&self, q: usize) -> bool {
        self.s.marked[q]
    }

    pub fn set_rejecting(&mut self, q: usize, rejecting: bool) {
        self.s.marked[q] = rejecting;
    }

    pub fn rejecting(&self) -> Vec<usize> {
        (0..self.num_states()).filter(|&q| self.s.marked[q]).collect()
    }

    /// The same structure read as a Büchi automaton whose accepting set is
    /// this automaton's rejecting set; recognizes the complement language.
    pub fn dualize(&self) -> Nba {
        Nba { s: self.s.clone() }
    }

    /// Every infinite word has an infinite run.
    ///
    /// Checked structurally: every state reachable from an initial state
    /// has a successor on every letter, and an initial state exists.
    pub fn is_complete(&self) -> bool {
        if self.s.initial.is_empty() {
            return false;
        }
        let seen = graph::reachable(&self.adjacency(), self.s.initial.iter().copied());
        (0..self.num_states())
            .filter(|&q| seen[q])
            .all(|q| self.s.delta[q].iter().all(|t| !t.is_empty()))
    }

    /// Drops states from which no cycle through a rejecting state is
    /// reachable, and states unreachable from the initial ones.
    ///
    /// Runs through dropped states visit the rejecting set finitely often,
    /// so they never cause rejection; the language is unchanged.
    pub fn prune(&self) -> Uca {
        let adj = self.adjacency();
        let cyc = graph::on_cycle(&adj);
        let seeds = (0..self.num_states()).filter(|&q| cyc[q] && self.s.marked[q]);
        let co = graph::reachable(&graph::reverse(&adj), seeds);
        let fwd = graph::reachable(&adj, self.s.initial.iter().copied());
        let keep: Vec<bool> = (0..self.num_states()).map(|q| co[q] && fwd[q]).collect();
        Uca { s: self.s.restrict(&keep) }
    }

    /// Disjoint union; recognizes the intersection of the languages.
    pub fn union(&self, other: &Uca) -> Uca {
        assert_eq!(self.s.alphabet, other.s.alphabet, "alphabet mismatch");
        let off = self.num_states();
        let mut s = self.s.clone();
        for q in 0..other.num_states() {
            s.delta.push(
                other.s.delta[q]
                    .iter()
                    .map(|t| t.iter().map(|&x| x + off).collect())
                    .collect(),
            );
            s.marked.push(other.s.marked[q]);
            s.names.push(other.s.names[q].clone());
        }
        s.initial.extend(other.s.initial.iter().map(|&q| q + off));
        Uca { s }
    }

    /// Index of the completion sink, if this automaton has one: a
    /// non-rejecting state looping to itself on every letter and nothing else.
    pub fn sink(&self) -> Option<usize> {
        (0..self.num_states()).rev().find(|&q| {
            !self.s.marked[q] && self.s.delta[q].iter().all(|t| t.as_slice() == [q])
        })
    }
}

impl Nba {
    pub fn is_accepting(&self, q: usize) -> bool {
        self.s.marked[q]
    }

    pub fn set_accepting(&mut self, q: usize, accepting: bool) {
        self.s.marked[q] = accepting;
    }

    pub fn dualize(&self) -> Uca {
        Uca { s: self.s.clone() }
    }
}

/// Adds one non-rejecting absorbing sink and redirects every missing
/// `(state, letter)` transition to it. Also gives an automaton without
/// initial states the sink as initial state.
///
/// A run entering the sink visits the rejecting set finitely often, so
/// the accepted language is unchanged.
pub fn complete_uca(a: &Uca) -> Uca {
    let mut out = a.clone();
    let sink = out.add_state("sink");
    for q in 0..out.num_states() {
        for l in 0..out.num_letters() {
            if out.s.delta[q][l].is_empty() {
                out.s.delta[q][l].push(sink);
            }
        }
    }
    if out.s.initial.is_empty() {
        out.s.initial.push(sink);
    }
    out
}

/// Whether the universal co-Büchi automaton accepts `prefix · period^ω`.
///
/// Unravels the (state, word position) graph; the word is rejected iff a
/// cycle reachable from an initial node passes through a rejecting state.
pub fn uca_accepts_lasso(a: &Uca, prefix: &[usize], period: &[usize]) -> bool {
    assert!(!period.is_empty(), "lasso period must be non-empty");
    let len = prefix.len() + period.len();
    let letter_at = |pos: usize| {
        if pos < prefix.len() {
            prefix[pos]
        } else {
            period[pos - prefix.len()]
        }
    };
    let next_pos = |pos: usize| if pos + 1 < len { pos + 1 } else { prefix.len() };
    let node = |q: usize, pos: usize| q * len + pos;
    let n = a.num_states() * len;
    let mut adj = vec![Vec::new(); n];
    for q in 0..a.num_states() {
        for pos in 0..len {
            adj[node(q, pos)] = a
                .successors(q, letter_at(pos))
                .iter()
                .map(|&q2| node(q2, next_pos(pos)))
                .collect();
        }
    }
    !graph::reachable_marked_cycle(
        &adj,
        a.initial().iter().map(|&q| node(q, 0)),
        |v| a.is_rejecting(v / len),
    )
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// `G !p` over a single output proposition `p`, before completion.
    pub(crate) fn g_not_p() -> Uca {
        let mut a = Uca::new(Alphabet::valuations(&[], &["p".to_string()]), 2);
        a.add_initial(0);
        a.add_transition(0, 0, 0);
        a.add_transition(0, 1, 1);
        a.add_transition(1, 0, 1);
        a.add_transition(1, 1, 1);
        a.set_rejecting(1, true);
        a
    }

    #[test]
    fn lasso_acceptance_basics() {
        let a = g_not_p();
        assert!(uca_accepts_lasso(&a, &[], &[0]));
        assert!(!uca_accepts_lasso(&a, &[0], &[1]));
        assert!(!uca_accepts_lasso(&a, &[1], &[0]));
        let mut no_f = a.clone();
        no_f.set_rejecting(1, false);
        for w in [[0], [1]] {
            assert!(uca_accepts_lasso(&no_f, &[], &w));
        }
    }

    #[test]
    fn finite_runs_are_ignored() {
        // The only run dies on `p`; nothing infinite remains to reject.
        let mut a = Uca::new(Alphabet::valuations(&[], &["p".to_string()]), 1);
        a.add_initial(0);
        a.add_transition(0, 0, 0);
        a.set_rejecting(0, true);
        assert!(uca_accepts_lasso(&a, &[1], &[0, 1]));
        assert!(!uca_accepts_lasso(&a, &[], &[0]));
        assert!(uca_accepts_lasso(&a, &[0, 0], &[1]));
    }

    #[test]
    fn completion_adds_exactly_missing_edges() {
        let mut a = Uca::new(Alphabet::valuations(&[], &["p".to_string()]), 1);
        a.add_initial(0);
        a.add_transition(0, 0, 0);
        let c = complete_uca(&a);
        assert_eq!(c.num_states(), 2);
        assert_eq!(c.successors(0, 0), &[0]);
        assert_eq!(c.successors(0, 1), &[1]);
        assert_eq!(c.successors(1, 0), &[1]);
        assert!(c.is_complete());
        assert!(c.is_total());
        assert_eq!(c.sink(), Some(1));

        let full = complete_uca(&g_not_p());
        assert_eq!(full.num_states(), 3);
        for q in 0..2 {
            for l in 0..2 {
                assert_eq!(full.successors(q, l), g_not_p().successors(q, l));
            }
        }
    }

    #[test]
    fn dualize_twice_is_identity() {
        let a = g_not_p();
        let b = a.dualize().dualize();
        assert_eq!(a, b);
        assert!(a.dualize().is_accepting(1));
    }

    #[test]
    fn union_intersects_languages() {
        // G !p  and  "first letter has p" (rejecting if first letter lacks p).
        let mut first_p = Uca::new(Alphabet::valuations(&[], &["p".to_string()]), 2);
        first_p.add_initial(0);
        first_p.add_transition(0, 0, 1);
        first_p.add_transition(1, 0, 1);
        first_p.add_transition(1, 1, 1);
        first_p.set_rejecting(1, true);
        let u = g_not_p().union(&first_p);
        assert!(!uca_accepts_lasso(&u, &[], &[0]));
        assert!(!uca_accepts_lasso(&u, &[1], &[0]));
        assert!(uca_accepts_lasso(&first_p, &[1], &[0]));
    }

    #[test]
    fn prune_keeps_language() {
        let mut a = g_not_p();
        let extra = a.add_state("dead");
        a.add_transition(0, 0, extra);
        a.set_rejecting(extra, true);
        let p = a.prune();
        assert_eq!(p.num_states(), 2);
        for pre in [vec![], vec![0], vec![1]] {
            for per in [vec![0], vec![1], vec![0, 1]] {
                assert_eq!(uca_accepts_lasso(&a, &pre, &per), uca_accepts_lasso(&p, &pre, &per));
            }
        }
    }
}
