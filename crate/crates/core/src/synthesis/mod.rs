//! Bounded synthesis of output-feedback controllers.
//!
//! For increasing `k`, the product automaton is determinized into a
//! k-counter safety game; the first winning `k` yields a Mealy controller
//! whose memory states are the counter functions reachable under a
//! lowest-input-id choice from the permissive strategy.

pub mod game;
pub mod mealy;
pub mod pruned;

pub use game::{kcounter_game, solve_safety, CounterFunction, Move, SafetyGame, Solution};
pub use mealy::{induced_strategy, MealyController};
pub use pruned::{solve_pruned, PrunedSolution};

use std::collections::HashMap;

use thiserror::Error;

use crate::automaton::Uca;
use crate::product::{build_product, ProductError, ProductOptions, ProductUca};
use crate::system::{FiniteSystem, PredicateMaps};

#[derive(Clone, Copy, Debug, Default)]
pub struct SynthesisOptions {
    /// Largest counter bound tried; defaults to `|rejecting| * |X|`.
    pub k_max: Option<usize>,
    /// Output-anchored predicate reading in the product.
    pub strict: bool,
    /// Solve on the fly, dropping dominated counter functions.
    pub antichain: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthesisError {
    #[error("no controller found for any counter bound up to k = {k_max}")]
    Unrealizable { k_max: usize },
    #[error(transparent)]
    Product(#[from] ProductError),
}

#[derive(Clone, Debug)]
pub struct Synthesized {
    pub controller: MealyController,
    /// The counter bound at which the game was first won.
    pub k: usize,
    pub product_states: usize,
    pub game_nodes: usize,
}

pub fn default_k_max(p: &ProductUca, sys: &FiniteSystem) -> usize {
    let rejecting = (0..p.num_states()).filter(|&s| p.is_rejecting(s)).count();
    rejecting * sys.num_states()
}

/// Extracts the lowest-id controller from a won game.
pub fn extract_controller(
    g: &SafetyGame,
    sol: &Solution,
    output_names: Vec<String>,
    input_names: Vec<String>,
) -> MealyController {
    assert!(sol.winning, "controller extraction needs a winning game");
    let mut memory: HashMap<u32, usize> = HashMap::new();
    let mut order: Vec<u32> = vec![0];
    memory.insert(0, 0);
    let mut steps = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let e = order[i];
        i += 1;
        for s in g.sys_nodes_of(e as usize) {
            let u = sol.permissive[s][0];
            let Move::Node(t) = g.moves_of(s)[u.0] else { unreachable!("permissive move is safe") };
            let z2 = *memory.entry(t).or_insert_with(|| {
                order.push(t);
                order.len() - 1
            });
            steps.push((memory[&e], g.sys_nodes[s].output, u, z2));
        }
    }
    let mut m = MealyController::new(output_names, input_names, order.len(), 0);
    for (z, y, u, z2) in steps {
        m.set_step(z, y, u, z2);
    }
    m
}

/// Synthesizes a controller from an already built product.
pub fn synthesize_product(
    p: &ProductUca,
    output_names: Vec<String>,
    input_names: Vec<String>,
    k_max: usize,
    antichain: bool,
) -> Result<Synthesized, SynthesisError> {
    for k in 0..=k_max {
        if antichain {
            let sol = solve_pruned(p, k);
            if sol.winning {
                let mut controller = MealyController::new(output_names, input_names, sol.memory, 0);
                for (z, y, u, z2) in sol.steps {
                    controller.set_step(z, y, u, z2);
                }
                return Ok(Synthesized { controller, k, product_states: p.num_states(), game_nodes: sol.explored });
            }
            if !sol.saturated {
                break;
            }
            continue;
        }
        let g = kcounter_game(p, k);
        let sol = solve_safety(&g);
        if sol.winning {
            let controller = extract_controller(&g, &sol, output_names, input_names);
            return Ok(Synthesized {
                controller,
                k,
                product_states: p.num_states(),
                game_nodes: g.num_env_nodes(),
            });
        }
        if !g.saturated {
            // No counter ever reached k: every larger bound explores the same game.
            break;
        }
    }
    Err(SynthesisError::Unrealizable { k_max })
}

/// Builds the product of `sys` and `spec` and synthesizes a controller.
pub fn synthesize(
    sys: &FiniteSystem,
    pm: &PredicateMaps,
    spec: &Uca,
    opts: SynthesisOptions,
) -> Result<Synthesized, SynthesisError> {
    let p = build_product(sys, pm, spec, ProductOptions { strict: opts.strict, ..Default::default() })?;
    let k_max = opts.k_max.unwrap_or_else(|| default_k_max(&p, sys));
    synthesize_product(&p, sys.output_names().to_vec(), sys.input_names().to_vec(), k_max, opts.antichain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{ltl_to_uca, parse_ltl, ApSplit};
    use crate::product::tests::{g_not_p_spec, s2_preds};
    use crate::system::tests::s2;
    use crate::system::{closed_loop_prefixes, ExternalPrefix, InputId, OutputId, Strategy};

    fn spec(s: &str) -> Uca {
        ltl_to_uca(&parse_ltl(s, &ApSplit::outputs_only(["p"])).unwrap())
    }

    #[test]
    fn s2_safety_gives_always_b() {
        let r = synthesize(&s2(), &s2_preds(), &g_not_p_spec(), SynthesisOptions::default()).unwrap();
        assert_eq!(r.k, 0);
        assert_eq!(r.controller.num_states(), 1);
        let c = &r.controller;
        let mut p = ExternalPrefix::new(OutputId(0));
        for _ in 0..5 {
            assert_eq!(c.input_for(&p), Some(InputId(1)));
            p.push(InputId(1), OutputId(0));
        }
    }

    #[test]
    fn s2_false_unrealizable() {
        let r = synthesize(&s2(), &s2_preds(), &spec("false"), SynthesisOptions { k_max: Some(4), strict: false, antichain: false });
        assert_eq!(r.unwrap_err(), SynthesisError::Unrealizable { k_max: 4 });
    }

    #[test]
    fn s2_true_avoids_deadlock() {
        let r = synthesize(&s2(), &s2_preds(), &spec("true"), SynthesisOptions::default()).unwrap();
        let c = &r.controller;
        // Lowest id first: `a`; once x1 may be occupied, `b` is never offered.
        assert_eq!(c.input_for(&ExternalPrefix::new(OutputId(0))), Some(InputId(0)));
        for k in 0..8 {
            assert!(closed_loop_prefixes(&s2(), c, k).is_ok());
        }
    }

    #[test]
    fn bottom_forced_loses() {
        // Single state, single input that is disabled: every word hits ⊥.
        let mut b = crate::system::FiniteSystemBuilder::with_sizes(1, 1, 1);
        b.initial_id(crate::StateId(0)).unwrap();
        b.output_id(crate::StateId(0), OutputId(0)).unwrap();
        let sys = b.build().unwrap();
        let pm = PredicateMaps::state_only(vec!["p".into()], 1, vec![vec![crate::Valuation::EMPTY]]).unwrap();
        let r = synthesize(&sys, &pm, &spec("true"), SynthesisOptions { k_max: Some(6), strict: false, antichain: false });
        assert!(matches!(r, Err(SynthesisError::Unrealizable { .. })));
    }
}
