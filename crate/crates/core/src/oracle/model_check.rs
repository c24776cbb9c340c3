//! Closed-loop model checking of a Mealy controller against a finite
//! system, and existence of a small controller by enumeration.

use std::collections::HashMap;

use rayon::prelude::*;

use super::instance::RandomInstance;
use crate::automaton::Uca;
use crate::synthesis::{synthesize, MealyController, SynthesisError, SynthesisOptions};
use crate::system::{FiniteSystem, InputId, OutputId, PredicateMaps, StateId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClosedLoopVerdict {
    Holds,
    /// The controller has no move for `output` in memory `memory`.
    Undefined { state: StateId, memory: usize, output: OutputId },
    /// The controller's input is disabled at a reachable state.
    NotEnabled { state: StateId, memory: usize, input: InputId },
    /// Some closed-loop path visits a rejecting specification state infinitely often.
    RejectingLasso,
}

impl ClosedLoopVerdict {
    pub fn holds(&self) -> bool {
        *self == ClosedLoopVerdict::Holds
    }
}

/// Explores triples `(x, z, q)`: plant state, controller memory before
/// reading the output of `x`, and specification state.
pub fn model_check_mealy(sys: &FiniteSystem, pm: &PredicateMaps, spec: &Uca, m: &MealyController) -> ClosedLoopVerdict {
    let mut index: HashMap<(StateId, usize, usize), usize> = HashMap::new();
    let mut nodes: Vec<(StateId, usize, usize)> = Vec::new();
    let mut stack = Vec::new();
    for &x in sys.initial() {
        for &q in spec.initial() {
            let key = (x, m.initial(), q);
            if !index.contains_key(&key) {
                index.insert(key, nodes.len());
                nodes.push(key);
                stack.push(key);
            }
        }
    }
    let mut adj: Vec<Vec<usize>> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    while let Some((x, z, q)) = stack.pop() {
        let from = index[&(x, z, q)];
        for &y in sys.outputs_of(x) {
            let Some((u, z2)) = m.step(z, y) else {
                return ClosedLoopVerdict::Undefined { state: x, memory: z, output: y };
            };
            if u.0 >= sys.num_inputs() || sys.successors(x, u).is_empty() {
                return ClosedLoopVerdict::NotEnabled { state: x, memory: z, input: u };
            }
            for &mu in pm.input_letters(u) {
                for &lambda in pm.state_letters(x) {
                    for &q2 in spec.successors(q, pm.letter(mu, lambda)) {
                        for &x2 in sys.successors(x, u) {
                            let key = (x2, z2, q2);
                            let to = *index.entry(key).or_insert_with(|| {
                                nodes.push(key);
                                stack.push(key);
                                nodes.len() - 1
                            });
                            edges.push((from, to));
                        }
                    }
                }
            }
        }
    }
    adj.resize(nodes.len(), Vec::new());
    for (a, b) in edges {
        adj[a].push(b);
    }
    let rejecting: Vec<bool> = nodes.iter().map(|&(_, _, q)| spec.is_rejecting(q)).collect();
    if rejecting_cycle(&adj, &rejecting) {
        ClosedLoopVerdict::RejectingLasso
    } else {
        ClosedLoopVerdict::Holds
    }
}

/// Whether some strongly connected component with an internal edge contains
/// a marked node (every node is reachable by construction).
fn rejecting_cycle(adj: &[Vec<usize>], marked: &[bool]) -> bool {
    let n = adj.len();
    // Kosaraju: finishing order on the graph, then components on the reverse.
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut st = vec![(s, 0usize)];
        while let Some(&mut (v, ref mut i)) = st.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if !seen[w] {
                    seen[w] = true;
                    st.push((w, 0));
                }
            } else {
                order.push(v);
                st.pop();
            }
        }
    }
    let mut radj = vec![Vec::new(); n];
    for (v, out) in adj.iter().enumerate() {
        for &w in out {
            radj[w].push(v);
        }
    }
    let mut comp = vec![usize::MAX; n];
    for (c, &s) in order.iter().rev().enumerate() {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = c;
        let mut st = vec![s];
        while let Some(v) = st.pop() {
            for &w in &radj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = c;
                    st.push(w);
                }
            }
        }
    }
    (0..n).any(|v| marked[v] && adj[v].iter().any(|&w| comp[w] == comp[v]))
}

/// Whether some total Mealy controller with at most `cap` memory states
/// makes every closed-loop path satisfy the specification.
pub fn brute_force_realizable(sys: &FiniteSystem, pm: &PredicateMaps, spec: &Uca, cap: usize) -> bool {
    let (ny, nu) = (sys.num_outputs(), sys.num_inputs());
    (1..=cap).any(|m| {
        let choices = nu * m;
        let cells = m * ny;
        let Some(total) = choices.checked_pow(cells as u32) else { return false };
        (0..total).into_par_iter().any(|mut code| {
            let mut c = MealyController::new(sys.output_names().to_vec(), sys.input_names().to_vec(), m, 0);
            for z in 0..m {
                for y in 0..ny {
                    let pick = code % choices;
                    code /= choices;
                    c.set_step(z, OutputId(y), InputId(pick % nu), pick / nu);
                }
            }
            model_check_mealy(sys, pm, spec, &c).holds()
        })
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletenessVerdict {
    pub brute_force: bool,
    pub synthesized: bool,
    /// Counter bound handed to synthesis.
    pub k_bound: usize,
    /// The synthesized controller passed the closed-loop check, when one was returned.
    pub controller_sound: Option<bool>,
}

impl CompletenessVerdict {
    pub fn agree(&self) -> bool {
        self.brute_force == self.synthesized && self.controller_sound != Some(false)
    }
}

/// Compares enumeration with synthesis run at `cap · |product states|`,
/// the bound large enough for any controller with `cap` memory states.
pub fn oracle_completeness(inst: &RandomInstance, cap: usize) -> CompletenessVerdict {
    let brute_force = brute_force_realizable(&inst.sys, &inst.pm, &inst.spec, cap);
    let p = crate::product::build_product(&inst.sys, &inst.pm, &inst.spec, Default::default())
        .expect("instance alphabet matches");
    let k_bound = cap * p.num_states();
    let r = synthesize(&inst.sys, &inst.pm, &inst.spec, SynthesisOptions { k_max: Some(k_bound), strict: false, antichain: false });
    let (synthesized, controller_sound) = match r {
        Ok(s) => (true, Some(model_check_mealy(&inst.sys, &inst.pm, &inst.spec, &s.controller).holds())),
        Err(SynthesisError::Unrealizable { .. }) => (false, None),
        Err(e) => panic!("synthesis failed on a valid instance: {e}"),
    };
    CompletenessVerdict { brute_force, synthesized, k_bound, controller_sound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::tests::{g_not_p_spec, s2_preds};
    use crate::system::tests::s2;

    fn always(u: usize) -> MealyController {
        let mut m = MealyController::new(vec!["y0".into(), "y1".into()], vec!["a".into(), "b".into()], 1, 0);
        m.set_step(0, OutputId(0), InputId(u), 0);
        m.set_step(0, OutputId(1), InputId(u), 0);
        m
    }

    #[test]
    fn s2_verdicts() {
        let (s, pm, spec) = (s2(), s2_preds(), g_not_p_spec());
        assert!(model_check_mealy(&s, &pm, &spec, &always(1)).holds());
        assert_eq!(model_check_mealy(&s, &pm, &spec, &always(0)), ClosedLoopVerdict::RejectingLasso);
        assert!(brute_force_realizable(&s, &pm, &spec, 1));
    }

    #[test]
    fn s2_true_and_false() {
        let inst = RandomInstance::new(s2(), s2_preds(), "true").unwrap();
        // Always `b` deadlocks once x1 is possible only after `a`; here it never is.
        assert!(model_check_mealy(&inst.sys, &inst.pm, &inst.spec, &always(1)).holds());
        let v = oracle_completeness(&inst, 3);
        assert!(v.brute_force && v.synthesized && v.agree());
        let f = RandomInstance::new(s2(), s2_preds(), "false").unwrap();
        let v = oracle_completeness(&f, 3);
        assert!(!v.brute_force && !v.synthesized);
    }
}
