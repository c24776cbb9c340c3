//! Literal reading of the relation axioms, one nested loop per clause.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::instance::{random_system, InstanceSize};
use crate::efrr::{Clause, EfrrRelation};
use crate::system::{FiniteSystem, InputId, OutputId, StateId};

fn enabled(s: &FiniteSystem, x: StateId, u: InputId) -> bool {
    !s.successors(x, u).is_empty()
}

/// The set of violated clauses.
pub fn reference_clauses(conc: &FiniteSystem, abs: &FiniteSystem, q: &EfrrRelation) -> BTreeSet<Clause> {
    let mut failed = BTreeSet::new();
    for x in conc.states() {
        let a = &q.alpha[x.0];
        if conc.initial().contains(&x) && (a.is_empty() || a.iter().any(|xh| !abs.initial().contains(xh))) {
            failed.insert(Clause::A1);
        }
        for &xh in a {
            for uh in abs.inputs() {
                if !enabled(abs, xh, uh) {
                    continue;
                }
                let b = &q.beta[uh.0];
                if b.is_empty() || b.iter().any(|&u| !enabled(conc, x, u)) {
                    failed.insert(Clause::A2i);
                }
                let mut image = Vec::new();
                for &u in b {
                    for &x2 in conc.successors(x, u) {
                        for &xh2 in &q.alpha[x2.0] {
                            image.push(xh2);
                        }
                    }
                }
                if image.is_empty() || image.iter().any(|xh2| !abs.successors(xh, uh).contains(xh2)) {
                    failed.insert(Clause::A2ii);
                }
            }
            let mut outs = Vec::new();
            for &y in conc.outputs_of(x) {
                for &yh in &q.gamma[y.0] {
                    outs.push(yh);
                }
            }
            if outs.is_empty() || outs.iter().any(|yh| !abs.outputs_of(xh).contains(yh)) {
                failed.insert(Clause::A3);
            }
        }
    }
    failed
}

/// A random system, a copy with extra (and occasionally missing)
/// transitions, outputs and initial states, and a mostly-identity relation.
pub fn thickened_pair(seed: u64) -> (FiniteSystem, FiniteSystem, EfrrRelation) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = InstanceSize { states: 5, inputs: 2, outputs: 3 };
    let conc = random_system(&mut rng, size);
    let (n, nu, ny) = (conc.num_states(), conc.num_inputs(), conc.num_outputs());
    let mut b = conc.to_builder();
    for _ in 0..rng.gen_range(0..=3) {
        let (x, u, x2) = (rng.gen_range(0..n), rng.gen_range(0..nu), rng.gen_range(0..n));
        b.transition_id(StateId(x), InputId(u), StateId(x2)).expect("in range");
    }
    for _ in 0..rng.gen_range(0..=2) {
        b.output_id(StateId(rng.gen_range(0..n)), OutputId(rng.gen_range(0..ny))).expect("in range");
    }
    if rng.gen_bool(0.3) {
        b.initial_id(StateId(rng.gen_range(0..n))).expect("in range");
    }
    let mut abs = b.build().expect("only additions");
    if rng.gen_bool(0.25) {
        abs = drop_one(&abs, &mut rng);
    }
    let mut rel = EfrrRelation::identity(&conc);
    if rng.gen_bool(0.15) {
        let x = rng.gen_range(0..n);
        rel.alpha[x] = if rng.gen_bool(0.5) { Vec::new() } else { vec![StateId(rng.gen_range(0..n))] };
    }
    if rng.gen_bool(0.1) {
        let y = rng.gen_range(0..ny);
        rel.gamma[y] = vec![OutputId(rng.gen_range(0..ny))];
    }
    (conc, abs, rel)
}

/// Rebuilds `s` without one transition, one output, or one initial state.
fn drop_one(s: &FiniteSystem, rng: &mut ChaCha8Rng) -> FiniteSystem {
    let mut trans: Vec<(StateId, InputId, StateId)> = Vec::new();
    for x in s.states() {
        for u in s.inputs() {
            trans.extend(s.successors(x, u).iter().map(|&x2| (x, u, x2)));
        }
    }
    let mut outs: Vec<(StateId, OutputId)> =
        s.states().flat_map(|x| s.outputs_of(x).iter().map(move |&y| (x, y))).collect();
    let mut init = s.initial().to_vec();
    match rng.gen_range(0..3) {
        0 if !trans.is_empty() => {
            trans.remove(rng.gen_range(0..trans.len()));
        }
        1 => {
            let i = rng.gen_range(0..outs.len());
            let x = outs[i].0;
            if s.outputs_of(x).len() > 1 {
                outs.remove(i);
            }
        }
        _ if init.len() > 1 => {
            init.remove(rng.gen_range(0..init.len()));
        }
        _ => {}
    }
    let mut b = crate::system::FiniteSystemBuilder::new(
        s.state_names().to_vec(),
        s.input_names().to_vec(),
        s.output_names().to_vec(),
    )
    .expect("names unique");
    for x in init {
        b.initial_id(x).expect("in range");
    }
    for (x, u, x2) in trans {
        b.transition_id(x, u, x2).expect("in range");
    }
    for (x, y) in outs {
        b.output_id(x, y).expect("in range");
    }
    b.build().expect("outputs kept")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efrr::check_sound_abstraction;

    #[test]
    fn agrees_with_checker() {
        let mut seen = BTreeSet::new();
        for seed in 0..200 {
            let (c, a, q) = thickened_pair(seed);
            let reference = reference_clauses(&c, &a, &q);
            let report = check_sound_abstraction(&c, &a, &q);
            let got: BTreeSet<Clause> = report.violations.iter().map(|v| v.clause).collect();
            assert_eq!(got, reference, "seed {seed}");
            seen.extend(reference);
        }
        assert_eq!(seen.len(), 4, "every clause should fail somewhere");
    }
}
