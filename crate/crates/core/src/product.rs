//! Product of an abstract system with a specification automaton.
//!
//! The product is a universal co-Büchi automaton over external letters
//! `(y, u)`. Its states are pairs `(x, q)` plus a rejecting absorbing state
//! `⊥` entered when the observed output is possible at `x` but the input
//! is disabled there. A word is accepted iff it never feeds a disabled
//! input to a consistent state and, if it is produced by some path, every
//! predicate sequence of every such path satisfies the specification.

use rayon::prelude::*;
use thiserror::Error;

use crate::automaton::{Alphabet, Uca};
use crate::graph;
use crate::system::{FiniteSystem, InputId, OutputId, PredicateMaps, StateId, Valuation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProductError {
    #[error("specification alphabet does not match the predicate maps ({0})")]
    AlphabetMismatch(String),
    #[error("predicate maps do not cover the system's states and inputs")]
    PredicateShape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProductState {
    Pair(StateId, usize),
    Bottom,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ProductOptions {
    /// Read predicate letters through the observed output: the letters of
    /// every state that can emit it, instead of the current state's letters.
    pub strict: bool,
    /// Keep states unreachable from the initial ones.
    pub keep_unreachable: bool,
}

/// The product automaton together with its state back-map.
#[derive(Clone, Debug)]
pub struct ProductUca {
    pub uca: Uca,
    states: Vec<ProductState>,
    bottom: usize,
    num_outputs: usize,
    num_inputs: usize,
}

impl ProductUca {
    pub fn state(&self, p: usize) -> ProductState {
        self.states[p]
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn num_states(&self) -> usize {
        self.uca.num_states()
    }

    pub fn letter(&self, y: OutputId, u: InputId) -> usize {
        y.0 * self.num_inputs + u.0
    }

    pub fn split_letter(&self, letter: usize) -> (OutputId, InputId) {
        (OutputId(letter / self.num_inputs), InputId(letter % self.num_inputs))
    }

    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn is_rejecting(&self, p: usize) -> bool {
        self.uca.is_rejecting(p)
    }

    pub fn successors(&self, p: usize, y: OutputId, u: InputId) -> &[usize] {
        self.uca.successors(p, self.letter(y, u))
    }
}

fn check_alphabet(spec: &Uca, pm: &PredicateMaps) -> Result<(), ProductError> {
    match spec.alphabet() {
        Alphabet::Valuations { inputs, outputs }
            if inputs.as_slice() == pm.input_aps() && outputs.as_slice() == pm.output_aps() =>
        {
            Ok(())
        }
        Alphabet::Valuations { inputs, outputs } => Err(ProductError::AlphabetMismatch(format!(
            "automaton has inputs {inputs:?} outputs {outputs:?}, maps have {:?} {:?}",
            pm.input_aps(),
            pm.output_aps()
        ))),
        Alphabet::External { .. } => {
            Err(ProductError::AlphabetMismatch("automaton reads external letters".into()))
        }
    }
}

/// Builds the product; unreachable states are dropped unless requested.
pub fn build_product(
    sys: &FiniteSystem,
    pm: &PredicateMaps,
    spec: &Uca,
    opts: ProductOptions,
) -> Result<ProductUca, ProductError> {
    check_alphabet(spec, pm)?;
    if !pm.matches(sys) {
        return Err(ProductError::PredicateShape);
    }
    let nq = spec.num_states();
    let (ny, nu) = (sys.num_outputs(), sys.num_inputs());
    let pair = |x: StateId, q: usize| x.0 * nq + q;
    let bottom = sys.num_states() * nq;
    let total = bottom + 1;

    // Output-anchored letters: union of state letters over H^-1(y).
    let by_output: Vec<Vec<Valuation>> = (0..ny)
        .map(|y| {
            let mut v: Vec<Valuation> = sys
                .states()
                .filter(|&x| sys.emits(x, OutputId(y)))
                .flat_map(|x| pm.state_letters(x).iter().copied())
                .collect();
            v.sort();
            v.dedup();
            v
        })
        .collect();

    let rows: Vec<Vec<Vec<usize>>> = (0..bottom)
        .into_par_iter()
        .map(|p| {
            let (x, q) = (StateId(p / nq), p % nq);
            let mut row = vec![Vec::new(); ny * nu];
            for &y in sys.outputs_of(x) {
                for u in sys.inputs() {
                    let succ_x = sys.successors(x, u);
                    let cell = &mut row[y.0 * nu + u.0];
                    if succ_x.is_empty() {
                        cell.push(bottom);
                        continue;
                    }
                    let lambdas = if opts.strict { &by_output[y.0][..] } else { pm.state_letters(x) };
                    let mut qs: Vec<usize> = Vec::new();
                    for &mu in pm.input_letters(u) {
                        for &lambda in lambdas {
                            qs.extend_from_slice(spec.successors(q, pm.letter(mu, lambda)));
                        }
                    }
                    qs.sort_unstable();
                    qs.dedup();
                    for &x2 in succ_x {
                        for &q2 in &qs {
                            cell.push(pair(x2, q2));
                        }
                    }
                }
            }
            row
        })
        .collect();

    let alphabet = Alphabet::External {
        outputs: sys.output_names().to_vec(),
        inputs: sys.input_names().to_vec(),
    };
    let mut uca = Uca::new(alphabet, total);
    let mut states = Vec::with_capacity(total);
    for (p, row) in rows.into_iter().enumerate() {
        let (x, q) = (StateId(p / nq), p % nq);
        for (l, succ) in row.into_iter().enumerate() {
            uca.set_successors(p, l, succ);
        }
        uca.set_rejecting(p, spec.is_rejecting(q));
        uca.set_state_name(p, format!("({},{})", sys.state_name(x), spec.state_name(q)));
        states.push(ProductState::Pair(x, q));
    }
    for l in 0..ny * nu {
        uca.set_successors(bottom, l, vec![bottom]);
    }
    uca.set_rejecting(bottom, true);
    uca.set_state_name(bottom, "bot");
    states.push(ProductState::Bottom);
    for &x in sys.initial() {
        for &q in spec.initial() {
            uca.add_initial(pair(x, q));
        }
    }

    let product = ProductUca { uca, states, bottom, num_outputs: ny, num_inputs: nu };
    if opts.keep_unreachable {
        Ok(product)
    } else {
        Ok(trim(&product))
    }
}

/// Drops states unreachable from the initial ones; `⊥` is always kept.
pub fn trim(p: &ProductUca) -> ProductUca {
    let mut keep = graph::reachable(&p.uca.adjacency(), p.uca.initial().iter().copied());
    keep[p.bottom] = true;
    let mut map = vec![usize::MAX; keep.len()];
    let mut kept = Vec::new();
    for (i, &k) in keep.iter().enumerate() {
        if k {
            map[i] = kept.len();
            kept.push(i);
        }
    }
    let mut uca = Uca::new(p.uca.alphabet().clone(), kept.len());
    for (new, &old) in kept.iter().enumerate() {
        for l in 0..uca.num_letters() {
            uca.set_successors(new, l, p.uca.successors(old, l).iter().map(|&t| map[t]).collect());
        }
        uca.set_rejecting(new, p.uca.is_rejecting(old));
        uca.set_state_name(new, p.uca.state_name(old).to_string());
    }
    for &q in p.uca.initial() {
        uca.add_initial(map[q]);
    }
    ProductUca {
        uca,
        states: kept.iter().map(|&i| p.states[i]).collect(),
        bottom: map[p.bottom],
        num_outputs: p.num_outputs,
        num_inputs: p.num_inputs,
    }
}

/// HOA text for the product over binary-encoded observation and input propositions.
pub fn product_hoa(p: &ProductUca) -> String {
    crate::automaton::hoa::hoa_export(&p.uca)
}

/// The four membership facts relating a lasso word to a product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SemanticsRecord {
    /// Accepted by the product automaton.
    pub in_lang: bool,
    /// Produced by some infinite path of the system.
    pub in_epaths: bool,
    /// Feeds an input disabled in some state consistent with the history.
    pub in_iblock: bool,
    /// Every predicate sequence of every path producing the word satisfies the specification.
    pub spec_holds: bool,
}

/// A lasso word `prefix · period^ω` over external letters `(y, u)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LassoWord {
    pub prefix: Vec<(OutputId, InputId)>,
    pub period: Vec<(OutputId, InputId)>,
}

impl LassoWord {
    pub fn new(prefix: Vec<(OutputId, InputId)>, period: Vec<(OutputId, InputId)>) -> Self {
        assert!(!period.is_empty(), "lasso period must be non-empty");
        LassoWord { prefix, period }
    }

    /// Number of distinct positions.
    pub fn len(&self) -> usize {
        self.prefix.len() + self.period.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn at(&self, pos: usize) -> (OutputId, InputId) {
        if pos < self.prefix.len() {
            self.prefix[pos]
        } else {
            self.period[(pos - self.prefix.len()) % self.period.len()]
        }
    }

    /// Position following `pos` in the folded word.
    pub fn next(&self, pos: usize) -> usize {
        if pos + 1 < self.len() {
            pos + 1
        } else {
            self.prefix.len()
        }
    }
}

/// Evaluates the four facts for `word` on a freshly built product.
pub fn iblock_semantics_check(
    sys: &FiniteSystem,
    pm: &PredicateMaps,
    spec: &Uca,
    word: &LassoWord,
) -> Result<SemanticsRecord, ProductError> {
    let p = build_product(sys, pm, spec, ProductOptions::default())?;
    Ok(semantics_record(&p, sys, pm, spec, word))
}

/// Same as [`iblock_semantics_check`] against a given (possibly altered) product.
///
/// Only `in_lang` looks at the product; the other three facts are computed
/// on the system and the specification directly.
pub fn semantics_record(
    p: &ProductUca,
    sys: &FiniteSystem,
    pm: &PredicateMaps,
    spec: &Uca,
    word: &LassoWord,
) -> SemanticsRecord {
    let letters = |w: &[(OutputId, InputId)]| -> Vec<usize> { w.iter().map(|&(y, u)| p.letter(y, u)).collect() };
    let in_lang = crate::automaton::uca_accepts_lasso(&p.uca, &letters(&word.prefix), &letters(&word.period));
    SemanticsRecord {
        in_lang,
        in_epaths: word_in_epaths(sys, word),
        in_iblock: word_in_iblock(sys, word),
        spec_holds: word_spec_holds(sys, pm, spec, word),
    }
}

/// Nodes `(pos, x)` with `x` emitting the output at `pos`; an infinite path exists iff a cycle is reachable.
fn word_in_epaths(sys: &FiniteSystem, word: &LassoWord) -> bool {
    let n = sys.num_states();
    let id = |pos: usize, x: StateId| pos * n + x.0;
    let mut adj = vec![Vec::new(); word.len() * n];
    for pos in 0..word.len() {
        let (y, u) = word.at(pos);
        let (y2, _) = word.at(word.next(pos));
        for x in sys.states().filter(|&x| sys.emits(x, y)) {
            for &x2 in sys.successors(x, u) {
                if sys.emits(x2, y2) {
                    adj[id(pos, x)].push(id(word.next(pos), x2));
                }
            }
        }
    }
    let (y0, _) = word.at(0);
    let roots = sys.initial().iter().filter(|&&x| sys.emits(x, y0)).map(|&x| id(0, x));
    graph::reachable_marked_cycle(&adj, roots, |_| true)
}

/// Belief simulation until the (position, belief) pair repeats.
fn word_in_iblock(sys: &FiniteSystem, word: &LassoWord) -> bool {
    let (y0, _) = word.at(0);
    let mut belief: crate::system::Belief =
        sys.initial().iter().copied().filter(|&x| sys.emits(x, y0)).collect();
    let mut pos = 0;
    let mut seen = std::collections::HashSet::new();
    while !belief.is_empty() && seen.insert((pos, belief.clone())) {
        let (_, u) = word.at(pos);
        if belief.iter().any(|&x| !sys.is_enabled(x, u)) {
            return true;
        }
        pos = word.next(pos);
        let (y, _) = word.at(pos);
        belief = crate::system::belief_update(sys, &belief, u, y).expect("ids in range");
    }
    false
}

/// Nodes `(pos, x, q)`; the specification fails iff a reachable cycle visits a rejecting `q`.
fn word_spec_holds(sys: &FiniteSystem, pm: &PredicateMaps, spec: &Uca, word: &LassoWord) -> bool {
    let (n, nq) = (sys.num_states(), spec.num_states());
    let id = |pos: usize, x: StateId, q: usize| (pos * n + x.0) * nq + q;
    let mut adj = vec![Vec::new(); word.len() * n * nq];
    for pos in 0..word.len() {
        let (y, u) = word.at(pos);
        let next = word.next(pos);
        let (y2, _) = word.at(next);
        for x in sys.states().filter(|&x| sys.emits(x, y)) {
            let succ: Vec<StateId> = sys.successors(x, u).iter().copied().filter(|&x2| sys.emits(x2, y2)).collect();
            if succ.is_empty() {
                continue;
            }
            for q in 0..nq {
                let mut out = Vec::new();
                for &mu in pm.input_letters(u) {
                    for &lambda in pm.state_letters(x) {
                        for &q2 in spec.successors(q, pm.letter(mu, lambda)) {
                            for &x2 in &succ {
                                out.push(id(next, x2, q2));
                            }
                        }
                    }
                }
                out.sort_unstable();
                out.dedup();
                adj[id(pos, x, q)] = out;
            }
        }
    }
    let (y0, _) = word.at(0);
    let roots: Vec<usize> = sys
        .initial()
        .iter()
        .filter(|&&x| sys.emits(x, y0))
        .flat_map(|&x| spec.initial().iter().map(move |&q| id(0, x, q)))
        .collect();
    !graph::reachable_marked_cycle(&adj, roots, |v| spec.is_rejecting(v % nq))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::automaton::{complete_uca, uca_accepts_lasso};
    use crate::ltl::{ltl_to_uca, parse_ltl, ApSplit};
    use crate::system::tests::s2;

    pub(crate) fn s2_preds() -> PredicateMaps {
        PredicateMaps::state_only(vec!["p".into()], 2, vec![vec![Valuation::EMPTY], vec![Valuation(1)]])
            .unwrap()
    }

    pub(crate) fn g_not_p_spec() -> Uca {
        ltl_to_uca(&parse_ltl("G !p", &ApSplit::outputs_only(["p"])).unwrap())
    }

    const A: InputId = InputId(0);
    const B: InputId = InputId(1);
    const Y0: OutputId = OutputId(0);

    #[test]
    fn s2_product_shape() {
        let sys = s2();
        let spec = g_not_p_spec();
        assert_eq!(spec.num_states(), 3);
        let full = build_product(
            &sys,
            &s2_preds(),
            &spec,
            ProductOptions { keep_unreachable: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(full.num_states(), 7);
        let p = build_product(&sys, &s2_preds(), &spec, ProductOptions::default()).unwrap();
        assert!(p.num_states() <= 7);
        let bot = p.bottom();
        assert_eq!(p.state(bot), ProductState::Bottom);
        assert!(p.is_rejecting(bot));
        for l in 0..p.uca.num_letters() {
            assert_eq!(p.uca.successors(bot, l), &[bot]);
        }
        // ⊥ is reached from some x1 state on b.
        let hit = (0..p.num_states()).any(|s| {
            matches!(p.state(s), ProductState::Pair(x, _) if x == StateId(1))
                && p.successors(s, Y0, B).contains(&bot)
        });
        assert!(hit);
        // Transition invariant: successors respect H and F.
        for s in 0..p.num_states() {
            let ProductState::Pair(x, _) = p.state(s) else { continue };
            for y in sys.outputs() {
                for u in sys.inputs() {
                    for &t in p.successors(s, y, u) {
                        assert!(sys.emits(x, y));
                        if let ProductState::Pair(x2, _) = p.state(t) {
                            assert!(sys.successors(x, u).contains(&x2));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn s2_product_words() {
        let p = build_product(&s2(), &s2_preds(), &g_not_p_spec(), ProductOptions::default()).unwrap();
        let yb = p.letter(Y0, B);
        let ya = p.letter(Y0, A);
        assert!(uca_accepts_lasso(&p.uca, &[], &[yb]));
        assert!(!uca_accepts_lasso(&p.uca, &[ya], &[yb]));
        // y1 is never emitted initially: no run constrains the word.
        let y1a = p.letter(OutputId(1), A);
        assert!(uca_accepts_lasso(&p.uca, &[y1a], &[yb]));
    }

    #[test]
    fn vacuous_product() {
        let mut b = crate::system::FiniteSystemBuilder::with_sizes(2, 1, 1);
        for x in 0..2 {
            b.initial_id(StateId(x)).unwrap();
            b.output_id(StateId(x), OutputId(0)).unwrap();
            for x2 in 0..2 {
                b.transition_id(StateId(x), InputId(0), StateId(x2)).unwrap();
            }
        }
        let sys = b.build().unwrap();
        let pm = PredicateMaps::state_only(vec![], 1, vec![vec![Valuation::EMPTY]; 2]).unwrap();
        let t = complete_uca(&ltl_to_uca(&parse_ltl("true", &ApSplit::default()).unwrap()));
        let p = build_product(&sys, &pm, &t, ProductOptions::default()).unwrap();
        let reach = graph::reachable(&p.uca.adjacency(), p.uca.initial().iter().copied());
        assert!(!reach[p.bottom()]);
        assert!((0..p.num_states()).filter(|&s| reach[s]).all(|s| !p.is_rejecting(s)));
    }

    #[test]
    fn alphabet_mismatch() {
        let spec = ltl_to_uca(&parse_ltl("G !q", &ApSplit::outputs_only(["q"])).unwrap());
        assert!(matches!(
            build_product(&s2(), &s2_preds(), &spec, ProductOptions::default()),
            Err(ProductError::AlphabetMismatch(_))
        ));
    }

    #[test]
    fn strict_reading_merges_letters() {
        // x0 and x1 both emit y0, so y0 carries both letters under the strict reading.
        let sys = s2();
        let p = build_product(
            &sys,
            &s2_preds(),
            &g_not_p_spec(),
            ProductOptions { strict: true, ..Default::default() },
        )
        .unwrap();
        let yb = p.letter(Y0, B);
        assert!(!uca_accepts_lasso(&p.uca, &[], &[yb]));
    }

    fn word(prefix: &[(usize, usize)], period: &[(usize, usize)]) -> LassoWord {
        let conv = |w: &[(usize, usize)]| w.iter().map(|&(y, u)| (OutputId(y), InputId(u))).collect();
        LassoWord::new(conv(prefix), conv(period))
    }

    #[test]
    fn semantics_of_s2_words() {
        let (sys, pm, spec) = (s2(), s2_preds(), g_not_p_spec());
        let r = iblock_semantics_check(&sys, &pm, &spec, &word(&[], &[(0, 1)])).unwrap();
        assert_eq!(r, SemanticsRecord { in_lang: true, in_epaths: true, in_iblock: false, spec_holds: true });
        let r = iblock_semantics_check(&sys, &pm, &spec, &word(&[(0, 0)], &[(0, 1)])).unwrap();
        assert!(r.in_iblock && !r.in_lang);
        let r = iblock_semantics_check(&sys, &pm, &spec, &word(&[], &[(1, 0)])).unwrap();
        assert!(!r.in_epaths && !r.in_iblock && r.in_lang);
        // y0 a then y1 forever: x1 reached, p holds, specification violated
        let r = iblock_semantics_check(&sys, &pm, &spec, &word(&[(0, 0)], &[(1, 0)])).unwrap();
        assert_eq!(r, SemanticsRecord { in_lang: false, in_epaths: true, in_iblock: false, spec_holds: false });
    }
}
