//! Prefix-by-prefix check of the refined controller against its abstract
//! counterpart, on finite pairs.
//!
//! For every concrete closed-loop prefix up to a depth:
//! (a) the prefix-based controller agrees with the running one;
//! (b) the tracked abstract prefix is a closed-loop prefix of the abstract
//!     controller on the abstraction;
//! (c) every concrete step consistent with the prefix relates to an
//!     abstract step consistent with the tracked prefix;
//! (d) the concrete input refines the abstract one and is enabled in every
//!     state consistent with the prefix.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::instance::{quotient_pair, InstanceSize, QuotientPair, SPEC_FAMILY};
use super::model_check::model_check_mealy;
use crate::efrr::EfrrRelation;
use crate::ltl::{ltl_to_uca, parse_ltl, ApSplit};
use crate::refinement::{Policy, RefinedController, RefinedStrategy};
use crate::synthesis::{synthesize, MealyController, SynthesisOptions};
use crate::system::{ExternalPrefix, FiniteSystem, InputId, StateId, Strategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RefinementClause {
    A,
    B,
    C,
    D,
}

impl RefinementClause {
    pub const ALL: [RefinementClause; 4] = [RefinementClause::A, RefinementClause::B, RefinementClause::C, RefinementClause::D];
}

impl fmt::Display for RefinementClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            RefinementClause::A => 'a',
            RefinementClause::B => 'b',
            RefinementClause::C => 'c',
            RefinementClause::D => 'd',
        };
        write!(f, "({c})")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinementWitness {
    pub clause: RefinementClause,
    pub prefix: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct RefinementReport {
    pub prefixes: usize,
    /// At most a few witnesses per clause.
    pub failures: Vec<RefinementWitness>,
    /// Closed-loop check of the refined controller on the concrete system,
    /// when the pair carries a specification.
    pub end_to_end: Option<bool>,
}

impl RefinementReport {
    pub fn holds(&self, c: RefinementClause) -> bool {
        self.failures.iter().all(|w| w.clause != c)
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.end_to_end != Some(false)
    }

    fn merge(mut self, other: RefinementReport) -> RefinementReport {
        self.prefixes += other.prefixes;
        for w in other.failures {
            if self.failures.iter().filter(|v| v.clause == w.clause).count() < 4 {
                self.failures.push(w);
            }
        }
        self
    }
}

struct Ctx<'a> {
    conc: &'a FiniteSystem,
    abs: &'a FiniteSystem,
    rel: &'a EfrrRelation,
    mealy: &'a MealyController,
    strategy: RefinedStrategy<'a>,
    depth: usize,
}

struct Node<'a> {
    prefix: ExternalPrefix,
    belief: Vec<StateId>,
    abs_belief: Vec<StateId>,
    rc: RefinedController<'a, EfrrRelation>,
    /// Belief, concrete input and abstract input of the previous step.
    prev: Option<(Vec<StateId>, InputId, InputId)>,
}

fn show(p: &ExternalPrefix, s: &FiniteSystem) -> String {
    p.display(s).to_string()
}

impl<'a> Ctx<'a> {
    fn visit(&self, node: Node<'a>, report: &mut RefinementReport) {
        report.prefixes += 1;
        let Node { prefix, belief, abs_belief, mut rc, prev } = node;
        let k = prefix.steps_len();
        let y = prefix.last_output();
        let mut fail = |clause, detail: String| {
            if report.failures.iter().filter(|w| w.clause == clause).count() < 4 {
                report.failures.push(RefinementWitness { clause, prefix: show(&prefix, self.conc), detail });
            }
        };
        let u = match rc.refined_step(&y) {
            Ok(u) => u,
            Err(e) => {
                fail(RefinementClause::B, e.to_string());
                fail(RefinementClause::D, "no concrete input".into());
                return;
            }
        };
        let ap = rc.abstract_prefix().expect("stepped").clone();
        let uh = rc.last_abstract_input().expect("stepped");
        let yh = ap.last_output();

        // (a)
        if self.strategy.input_for(&prefix) != Some(u) {
            fail(RefinementClause::A, "prefix replay disagrees with the running controller".into());
        }

        // (b)
        let abs_belief: Vec<StateId> = match &prev {
            None => self.abs.initial().iter().copied().filter(|&xh| self.abs.outputs_of(xh).contains(&yh)).collect(),
            Some((_, _, uh_prev)) => {
                let mut v: Vec<StateId> = abs_belief
                    .iter()
                    .flat_map(|&xh| self.abs.successors(xh, *uh_prev).iter().copied())
                    .filter(|&xh2| self.abs.outputs_of(xh2).contains(&yh))
                    .collect();
                v.sort();
                v.dedup();
                v
            }
        };
        if abs_belief.is_empty() {
            fail(RefinementClause::B, format!("abstract prefix {} has no consistent state", show(&ap, self.abs)));
        }
        if !self.rel.gamma[y.0].contains(&yh) {
            fail(RefinementClause::B, format!("abstract output {yh} not related to {y}"));
        }
        let mut z = self.mealy.initial();
        let mut replay_ok = true;
        for (i, &yi) in ap.outputs().iter().enumerate() {
            match self.mealy.step(z, yi) {
                Some((ui, z2)) if i == k || ap.inputs()[i] == ui => {
                    if i == k && ui != uh {
                        replay_ok = false;
                    }
                    z = z2;
                }
                _ => replay_ok = false,
            }
        }
        if !replay_ok {
            fail(RefinementClause::B, "abstract controller does not produce the tracked inputs".into());
        }

        // (c)
        match &prev {
            None => {
                for &x in &belief {
                    for &xh in &self.rel.alpha[x.0] {
                        if !self.abs.initial().contains(&xh) || !self.abs.outputs_of(xh).contains(&yh) {
                            fail(RefinementClause::C, format!("{x} relates to {xh}, not an initial state emitting {yh}"));
                        }
                    }
                }
            }
            Some((b_prev, u_prev, uh_prev)) => {
                for &x in b_prev {
                    for &x2 in self.conc.successors(x, *u_prev) {
                        if !self.conc.outputs_of(x2).contains(&y) {
                            continue;
                        }
                        for &xh in &self.rel.alpha[x.0] {
                            for &xh2 in &self.rel.alpha[x2.0] {
                                if !self.abs.successors(xh, *uh_prev).contains(&xh2)
                                    || !self.abs.outputs_of(xh2).contains(&yh)
                                {
                                    fail(
                                        RefinementClause::C,
                                        format!("step {x}->{x2} relates to {xh}->{xh2}, not an abstract step emitting {yh}"),
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }

        // (d)
        if !self.rel.beta[uh.0].contains(&u) {
            fail(RefinementClause::D, format!("{u} does not refine {uh}"));
        }
        if let Some(x) = belief.iter().find(|&&x| self.conc.successors(x, u).is_empty()) {
            fail(RefinementClause::D, format!("{u} disabled at {x}"));
        }

        if k == self.depth {
            return;
        }
        for y2 in self.conc.outputs() {
            let mut b: Vec<StateId> = belief
                .iter()
                .flat_map(|&x| self.conc.successors(x, u).iter().copied())
                .filter(|&x2| self.conc.outputs_of(x2).contains(&y2))
                .collect();
            b.sort();
            b.dedup();
            if b.is_empty() {
                continue;
            }
            let child = Node {
                prefix: prefix.extended(u, y2),
                belief: b,
                abs_belief: abs_belief.clone(),
                rc: rc.clone(),
                prev: Some((belief.clone(), u, uh)),
            };
            self.visit(child, report);
        }
    }
}

/// Checks the four clauses on every concrete closed-loop prefix with at
/// most `depth` inputs, for the lowest-id or highest-id policies given.
#[allow(clippy::too_many_arguments)]
pub fn check_refinement_clauses(
    conc: &FiniteSystem,
    abs: &FiniteSystem,
    rel: &EfrrRelation,
    mealy: &MealyController,
    gamma_policy: Policy,
    beta_policy: Policy,
    depth: usize,
) -> RefinementReport {
    let ctx = Ctx {
        conc,
        abs,
        rel,
        mealy,
        strategy: RefinedStrategy { mealy, rel, gamma_policy, beta_policy },
        depth,
    };
    conc.outputs()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|y0| {
            let mut report = RefinementReport::default();
            let belief: Vec<StateId> =
                conc.initial().iter().copied().filter(|&x| conc.outputs_of(x).contains(&y0)).collect();
            if !belief.is_empty() {
                let node = Node {
                    prefix: ExternalPrefix::new(y0),
                    belief,
                    abs_belief: Vec::new(),
                    rc: RefinedController::new(mealy, rel, gamma_policy, beta_policy),
                    prev: None,
                };
                ctx.visit(node, &mut report);
            }
            report
        })
        .reduce(RefinementReport::default, RefinementReport::merge)
}

/// The refined controller as a Mealy machine on concrete outputs, with
/// lowest-id choices from `gamma` and `beta`.
pub fn refined_mealy(mealy: &MealyController, rel: &EfrrRelation, conc: &FiniteSystem) -> MealyController {
    let mut m =
        MealyController::new(conc.output_names().to_vec(), conc.input_names().to_vec(), mealy.num_states(), mealy.initial());
    for z in 0..mealy.num_states() {
        for y in conc.outputs() {
            let Some(&yh) = rel.gamma[y.0].first() else { continue };
            let Some((uh, z2)) = mealy.step(z, yh) else { continue };
            if let Some(&u) = rel.beta[uh.0].first() {
                m.set_step(z, y, u, z2);
            }
        }
    }
    m
}

/// Relates an output of some initial concrete state to an abstract output
/// that no initial abstract state emits, breaking the output clause.
pub fn gamma_mutation(conc: &FiniteSystem, abs: &FiniteSystem, rel: &EfrrRelation) -> Option<EfrrRelation> {
    let yh = abs.outputs().find(|&yh| abs.initial().iter().all(|&xh| !abs.outputs_of(xh).contains(&yh)))?;
    let &x0 = conc.initial().first()?;
    let y = *conc.outputs_of(x0).first()?;
    let mut m = rel.clone();
    m.gamma[y.0] = vec![yh];
    Some(m)
}

/// A random quotient pair with a synthesized abstract controller.
#[derive(Clone, Debug)]
pub struct RefinementCase {
    pub seed: u64,
    pub pair: QuotientPair,
    pub formula: String,
    pub mealy: MealyController,
}

/// Builds the pair for `seed` and synthesizes on the quotient; `None` when
/// no controller is found up to a small counter bound.
pub fn refinement_case(seed: u64) -> Option<RefinementCase> {
    let pair = quotient_pair(seed, InstanceSize::SMALL);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let formula = SPEC_FAMILY[rng.gen_range(0..SPEC_FAMILY.len())].to_string();
    let aps = ApSplit::new(pair.abs_preds.input_aps().to_vec(), pair.abs_preds.output_aps().to_vec());
    let spec = ltl_to_uca(&parse_ltl(&formula, &aps).expect("family formulas parse"));
    let syn = synthesize(&pair.abs, &pair.abs_preds, &spec, SynthesisOptions { k_max: Some(3), strict: false, antichain: false }).ok()?;
    Some(RefinementCase { seed, pair, formula, mealy: syn.controller })
}

/// Clause check plus the concrete closed-loop check for one case.
pub fn oracle_refinement(case: &RefinementCase, depth: usize) -> RefinementReport {
    let p = &case.pair;
    let mut report = check_refinement_clauses(&p.conc, &p.abs, &p.rel, &case.mealy, Policy::LowestId, Policy::LowestId, depth);
    let aps = ApSplit::new(p.conc_preds.input_aps().to_vec(), p.conc_preds.output_aps().to_vec());
    let spec = ltl_to_uca(&parse_ltl(&case.formula, &aps).expect("family formulas parse"));
    let c = refined_mealy(&case.mealy, &p.rel, &p.conc);
    report.end_to_end = Some(model_check_mealy(&p.conc, &p.conc_preds, &spec, &c).holds());
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::tests::{g_not_p_spec, s2_preds};
    use crate::system::tests::s2;

    #[test]
    fn identity_pair() {
        let s = s2();
        let syn = synthesize(&s, &s2_preds(), &g_not_p_spec(), SynthesisOptions::default()).unwrap();
        let rel = EfrrRelation::identity(&s);
        let r = check_refinement_clauses(&s, &s, &rel, &syn.controller, Policy::LowestId, Policy::LowestId, 8);
        assert!(r.passed(), "{:?}", r.failures);
        assert_eq!(r.prefixes, 9);
        let bad = gamma_mutation(&s, &s, &rel).unwrap();
        let r = check_refinement_clauses(&s, &s, &bad, &syn.controller, Policy::LowestId, Policy::LowestId, 8);
        assert!(!r.holds(RefinementClause::B));
    }

    #[test]
    fn random_cases() {
        let cases: Vec<RefinementCase> = (0..40).filter_map(refinement_case).collect();
        assert!(cases.len() >= 5);
        for c in &cases {
            let r = oracle_refinement(c, 5);
            assert!(r.passed(), "seed {}: {:?} {:?}", c.seed, r.failures, r.end_to_end);
        }
    }
}
