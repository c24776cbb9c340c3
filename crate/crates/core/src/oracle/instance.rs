//! Seeded random instances and related pairs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automaton::Uca;
use crate::efrr::EfrrRelation;
use crate::ltl::{ltl_to_uca, parse_ltl, ApSplit, LtlError};
use crate::system::{FiniteSystem, FiniteSystemBuilder, InputId, OutputId, PredicateMaps, StateId, Valuation};

/// Specifications drawn by [`RandomInstance::random`], over outputs `p` and `q`.
pub const SPEC_FAMILY: [&str; 4] = ["G !p", "F p", "G F p", "p U q"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceSize {
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
}

impl InstanceSize {
    pub const SMALL: InstanceSize = InstanceSize { states: 4, inputs: 2, outputs: 2 };
    pub const TINY: InstanceSize = InstanceSize { states: 3, inputs: 2, outputs: 2 };
}

/// A finite system with predicate maps and a specification.
#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub seed: Option<u64>,
    pub sys: FiniteSystem,
    pub pm: PredicateMaps,
    pub formula: String,
    pub spec: Uca,
}

impl RandomInstance {
    pub fn new(sys: FiniteSystem, pm: PredicateMaps, formula: &str) -> Result<Self, LtlError> {
        let aps = ApSplit::new(pm.input_aps().to_vec(), pm.output_aps().to_vec());
        let spec = ltl_to_uca(&parse_ltl(formula, &aps)?);
        Ok(RandomInstance { seed: None, sys, pm, formula: formula.to_string(), spec })
    }

    /// Reproducible from `(seed, size)`.
    pub fn random(seed: u64, size: InstanceSize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, size);
        let pm = random_preds(&mut rng, &sys);
        let formula = SPEC_FAMILY[rng.gen_range(0..SPEC_FAMILY.len())];
        let mut inst = RandomInstance::new(sys, pm, formula).expect("family formulas parse");
        inst.seed = Some(seed);
        inst
    }
}

fn subset(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<usize> {
    let first = rng.gen_range(0..n);
    (0..n).filter(|&i| i == first || rng.gen_bool(p)).collect()
}

/// Between one and `size.*` states, inputs and outputs; some inputs disabled.
pub fn random_system(rng: &mut ChaCha8Rng, size: InstanceSize) -> FiniteSystem {
    let n = rng.gen_range(1..=size.states);
    let nu = rng.gen_range(1..=size.inputs);
    let ny = rng.gen_range(1..=size.outputs);
    let mut b = FiniteSystemBuilder::with_sizes(n, nu, ny);
    for x in subset(rng, n, 0.3) {
        b.initial_id(StateId(x)).expect("in range");
    }
    for x in 0..n {
        for u in 0..nu {
            if rng.gen_bool(0.2) {
                continue;
            }
            for x2 in subset(rng, n, 0.3) {
                b.transition_id(StateId(x), InputId(u), StateId(x2)).expect("in range");
            }
        }
        for y in subset(rng, ny, 0.3) {
            b.output_id(StateId(x), OutputId(y)).expect("in range");
        }
    }
    b.build().expect("every state emits")
}

/// State letters over `p`, `q`: mostly one letter, sometimes two.
pub fn random_preds(rng: &mut ChaCha8Rng, sys: &FiniteSystem) -> PredicateMaps {
    let letters = (0..sys.num_states())
        .map(|_| {
            let mut v = vec![Valuation(rng.gen_range(0..4))];
            if rng.gen_bool(0.25) {
                v.push(Valuation(rng.gen_range(0..4)));
            }
            v
        })
        .collect();
    PredicateMaps::state_only(vec!["p".into(), "q".into()], sys.num_inputs(), letters).expect("two propositions")
}

/// A concrete system, its quotient, and the relating maps.
#[derive(Clone, Debug)]
pub struct QuotientPair {
    pub conc: FiniteSystem,
    pub conc_preds: PredicateMaps,
    pub abs: FiniteSystem,
    pub abs_preds: PredicateMaps,
    pub rel: EfrrRelation,
}

/// Merges states and outputs of a random system along random maps.
///
/// An input stays enabled at a merged state only if every member enables
/// it, and abstract letters are the union of the members' letters, so the
/// pair always passes the relation check.
pub fn quotient_pair(seed: u64, size: InstanceSize) -> QuotientPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let conc = random_system(&mut rng, size);
    let conc_preds = random_preds(&mut rng, &conc);
    let (n, ny) = (conc.num_states(), conc.num_outputs());
    let classes = |rng: &mut ChaCha8Rng, n: usize| -> (Vec<usize>, usize) {
        let k = rng.gen_range(1..=n);
        let mut h: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.gen_range(0..k) }).collect();
        h.shuffle(rng);
        (h, k)
    };
    let (h, nh) = classes(&mut rng, n);
    let (g, ng) = classes(&mut rng, ny);
    let mut b = FiniteSystemBuilder::with_sizes(nh, conc.num_inputs(), ng);
    for &x in conc.initial() {
        b.initial_id(StateId(h[x.0])).expect("in range");
    }
    for c in 0..nh {
        let members: Vec<StateId> = conc.states().filter(|x| h[x.0] == c).collect();
        for u in conc.inputs() {
            if members.iter().all(|&x| conc.is_enabled(x, u)) {
                for &x in &members {
                    for x2 in conc.successors(x, u) {
                        b.transition_id(StateId(c), u, StateId(h[x2.0])).expect("in range");
                    }
                }
            }
        }
        for &x in &members {
            for y in conc.outputs_of(x) {
                b.output_id(StateId(c), OutputId(g[y.0])).expect("in range");
            }
        }
    }
    let abs = b.build().expect("classes are non-empty");
    let letters = (0..nh)
        .map(|c| conc.states().filter(|x| h[x.0] == c).flat_map(|x| conc_preds.state_letters(x).to_vec()).collect())
        .collect();
    let abs_preds = PredicateMaps::state_only(conc_preds.output_aps().to_vec(), abs.num_inputs(), letters)
        .expect("same propositions");
    let rel = EfrrRelation {
        alpha: h.iter().map(|&c| vec![StateId(c)]).collect(),
        beta: conc.inputs().map(|u| vec![u]).collect(),
        gamma: g.iter().map(|&c| vec![OutputId(c)]).collect(),
    };
    QuotientPair { conc, conc_preds, abs, abs_preds, rel }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efrr::check_sound_abstraction;

    #[test]
    fn reproducible() {
        let a = RandomInstance::random(11, InstanceSize::SMALL);
        let b = RandomInstance::random(11, InstanceSize::SMALL);
        assert_eq!(a.sys, b.sys);
        assert_eq!(a.pm, b.pm);
        assert_eq!(a.formula, b.formula);
    }

    #[test]
    fn quotients_pass() {
        for seed in 0..50 {
            let q = quotient_pair(seed, InstanceSize::SMALL);
            assert!(check_sound_abstraction(&q.conc, &q.abs, &q.rel).passed(), "seed {seed}");
        }
    }
}
