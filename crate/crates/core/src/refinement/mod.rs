//! Running an abstract controller on a concrete plant.
//!
//! The refined controller reads a concrete output, picks one related
//! abstract output, advances the abstract controller's memory and applies
//! one concrete refinement of the abstract input. Both picks are made by a
//! [`Policy`].

pub mod trace;

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::abstraction::{ControlSystem, GriddedAbstraction, Region, VIOLATION};
use crate::efrr::EfrrRelation;
use crate::synthesis::MealyController;
use crate::system::{
    closed_loop_prefixes, CompositionError, CompositionFailure, ExternalPrefix, FiniteSystem, InputId,
    OutputId, PredicateMaps, StateId, Strategy, Valuation,
};

pub use trace::{trace_csv, trace_svg, ContinuousTrace, FiniteTrace};

/// How one element is picked from a non-empty candidate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Policy {
    #[default]
    LowestId,
    HighestId,
    Seeded(u64),
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lowest" | "lowest-id" => Ok(Policy::LowestId),
            "highest" | "highest-id" => Ok(Policy::HighestId),
            _ => s
                .strip_prefix("seeded:")
                .and_then(|n| n.parse().ok())
                .map(Policy::Seeded)
                .ok_or_else(|| format!("unknown policy `{s}` (lowest, highest, seeded:N)")),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::LowestId => f.write_str("lowest"),
            Policy::HighestId => f.write_str("highest"),
            Policy::Seeded(s) => write!(f, "seeded:{s}"),
        }
    }
}

/// A policy with its random state.
#[derive(Clone, Debug)]
pub struct Selector {
    policy: Policy,
    rng: ChaCha8Rng,
}

impl Selector {
    pub fn new(policy: Policy) -> Self {
        let seed = match policy {
            Policy::Seeded(s) => s,
            _ => 0,
        };
        Selector { policy, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Picks from candidates listed in increasing id order.
    pub fn pick<T: Clone>(&mut self, items: &[T]) -> Option<T> {
        match self.policy {
            Policy::LowestId => items.first().cloned(),
            Policy::HighestId => items.last().cloned(),
            Policy::Seeded(_) => items.choose(&mut self.rng).cloned(),
        }
    }
}

/// The concrete side of a relation, as seen by the runtime.
pub trait Concretization {
    type Input: Clone;
    type Output: ?Sized;

    /// Abstract outputs related to a concrete output, in increasing id order.
    fn gamma_of(&self, y: &Self::Output) -> Vec<OutputId>;

    /// Concrete refinements of an abstract input.
    fn beta_of(&self, u: InputId) -> Vec<Self::Input>;
}

impl Concretization for EfrrRelation {
    type Input = InputId;
    type Output = OutputId;

    fn gamma_of(&self, y: &OutputId) -> Vec<OutputId> {
        self.gamma.get(y.0).cloned().unwrap_or_default()
    }

    fn beta_of(&self, u: InputId) -> Vec<InputId> {
        self.beta.get(u.0).cloned().unwrap_or_default()
    }
}

impl Concretization for GriddedAbstraction {
    type Input = Vec<f64>;
    type Output = [f64];

    fn gamma_of(&self, y: &[f64]) -> Vec<OutputId> {
        self.gamma(y)
    }

    fn beta_of(&self, u: InputId) -> Vec<Vec<f64>> {
        self.beta(u)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RefinementError {
    #[error("step {step}: concrete output is related to no abstract output")]
    NotCovered { step: usize },
    #[error("abstract controller undefined at `{prefix}`")]
    UndefinedStrategy { prefix: String },
    #[error("abstract input {input} has no concrete refinement")]
    EmptyRefinement { input: InputId },
}

/// An abstract controller refined through a relation.
#[derive(Clone, Debug)]
pub struct RefinedController<'a, R: Concretization + ?Sized> {
    mealy: &'a MealyController,
    rel: &'a R,
    gamma_policy: Policy,
    beta_policy: Policy,
    gamma_select: Selector,
    beta_select: Selector,
    z: usize,
    prefix: Option<ExternalPrefix>,
    pending: Option<InputId>,
}

impl<'a, R: Concretization + ?Sized> RefinedController<'a, R> {
    pub fn new(mealy: &'a MealyController, rel: &'a R, gamma_policy: Policy, beta_policy: Policy) -> Self {
        RefinedController {
            mealy,
            rel,
            gamma_policy,
            beta_policy,
            gamma_select: Selector::new(gamma_policy),
            beta_select: Selector::new(beta_policy),
            z: mealy.initial(),
            prefix: None,
            pending: None,
        }
    }

    /// Back to the initial memory and policy state.
    pub fn reset(&mut self) {
        *self = RefinedController::new(self.mealy, self.rel, self.gamma_policy, self.beta_policy);
    }

    /// The abstract external prefix tracked so far (ends with the last abstract output).
    pub fn abstract_prefix(&self) -> Option<&ExternalPrefix> {
        self.prefix.as_ref()
    }

    /// The abstract input chosen at the last step.
    pub fn last_abstract_input(&self) -> Option<InputId> {
        self.pending
    }

    pub fn memory(&self) -> usize {
        self.z
    }

    /// Reads one concrete output and returns the concrete input to apply.
    pub fn refined_step(&mut self, y: &R::Output) -> Result<R::Input, RefinementError> {
        let step = self.prefix.as_ref().map_or(0, |p| p.steps_len() + 1);
        let candidates = self.rel.gamma_of(y);
        let yh = self.gamma_select.pick(&candidates).ok_or(RefinementError::NotCovered { step })?;
        let prefix = match (&self.prefix, self.pending) {
            (Some(p), Some(u)) => p.extended(u, yh),
            _ => ExternalPrefix::new(yh),
        };
        let (uh, z2) = self.mealy.step(self.z, yh).ok_or_else(|| RefinementError::UndefinedStrategy {
            prefix: describe(&prefix, self.mealy),
        })?;
        let refinements = self.rel.beta_of(uh);
        let u = self.beta_select.pick(&refinements).ok_or(RefinementError::EmptyRefinement { input: uh })?;
        self.z = z2;
        self.prefix = Some(prefix);
        self.pending = Some(uh);
        Ok(u)
    }
}

fn describe(p: &ExternalPrefix, m: &MealyController) -> String {
    let mut s = m.output_names()[p.outputs()[0].0].clone();
    for (u, y) in p.steps() {
        s += &format!(" {} {}", m.input_names()[u.0], m.output_names()[y.0]);
    }
    s
}

/// The refined controller as a strategy on concrete prefixes of a finite
/// plant; each query replays the prefix from scratch and is undefined when
/// the prefix's inputs differ from the controller's own.
pub struct RefinedStrategy<'a> {
    pub mealy: &'a MealyController,
    pub rel: &'a EfrrRelation,
    pub gamma_policy: Policy,
    pub beta_policy: Policy,
}

impl RefinedStrategy<'_> {
    /// The tracked abstract prefix and the concrete input for `prefix`.
    pub fn run(&self, prefix: &ExternalPrefix) -> Result<Option<(ExternalPrefix, InputId, InputId)>, RefinementError> {
        let mut rc = RefinedController::new(self.mealy, self.rel, self.gamma_policy, self.beta_policy);
        let mut u = rc.refined_step(&prefix.outputs()[0])?;
        for (&v, &y) in prefix.inputs().iter().zip(&prefix.outputs()[1..]) {
            if u != v {
                return Ok(None);
            }
            u = rc.refined_step(&y)?;
        }
        let uh = rc.last_abstract_input().expect("stepped at least once");
        Ok(Some((rc.abstract_prefix().expect("stepped").clone(), uh, u)))
    }
}

impl Strategy for RefinedStrategy<'_> {
    fn input_for(&self, prefix: &ExternalPrefix) -> Option<InputId> {
        self.run(prefix).ok().flatten().map(|(_, _, u)| u)
    }
}

/// One member of the projection of a concrete prefix: abstract outputs
/// from `gamma`, abstract inputs from the inverse of `beta`, each picked by
/// the policy. `None` if some candidate set is empty.
pub fn project_omega(sigma: &ExternalPrefix, q: &EfrrRelation, policy: Policy) -> Option<ExternalPrefix> {
    let mut sel = Selector::new(policy);
    let mut out = ExternalPrefix::new(sel.pick(&q.gamma[sigma.outputs()[0].0])?);
    for (u, y) in sigma.steps() {
        let pre: Vec<InputId> =
            (0..q.beta.len()).map(InputId).filter(|&uh| q.beta[uh.0].contains(&u)).collect();
        let uh = sel.pick(&pre)?;
        let yh = sel.pick(&q.gamma[y.0])?;
        out.push(uh, yh);
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BranchMode {
    /// Every resolution of the plant's and the predicate maps' non-determinism.
    #[default]
    All,
    /// One seeded trajectory.
    Random,
}

impl std::str::FromStr for BranchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(BranchMode::All),
            "random" => Ok(BranchMode::Random),
            _ => Err(format!("unknown branch mode `{s}` (all, random)")),
        }
    }
}

/// Closed-loop traces of length `steps` of a finite plant under a strategy.
///
/// The strategy is first checked for feedback composability up to the
/// horizon; a failure is returned as is.
pub fn simulate_finite<C: Strategy + ?Sized>(
    sys: &FiniteSystem,
    pm: &PredicateMaps,
    ctrl: &C,
    steps: usize,
    seed: u64,
    mode: BranchMode,
) -> Result<Vec<FiniteTrace>, CompositionError> {
    assert!(steps >= 1, "at least one step");
    closed_loop_prefixes(sys, ctrl, steps - 1)?;
    let input = |p: &ExternalPrefix| -> Result<InputId, CompositionError> {
        let u = ctrl
            .input_for(p)
            .ok_or(CompositionError { prefix: p.clone(), reason: CompositionFailure::Undefined })?;
        Ok(u)
    };
    match mode {
        BranchMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = *sys.initial().choose(&mut rng).expect("initial states exist");
            let mut t = FiniteTrace::default();
            let mut prefix: Option<ExternalPrefix> = None;
            for k in 0..steps {
                let y = *sys.outputs_of(x).choose(&mut rng).expect("outputs exist");
                let p = match (&prefix, t.inputs.last()) {
                    (Some(p), Some(&u)) => p.extended(u, y),
                    _ => ExternalPrefix::new(y),
                };
                let u = input(&p)?;
                let mu = *pm.input_letters(u).choose(&mut rng).expect("letters exist");
                let lambda = *pm.state_letters(x).choose(&mut rng).expect("letters exist");
                t.states.push(x);
                t.outputs.push(y);
                t.inputs.push(u);
                t.letters.push((mu, lambda));
                prefix = Some(p);
                if k + 1 < steps {
                    x = *sys.successors(x, u).choose(&mut rng).expect("composability checked");
                }
            }
            Ok(vec![t])
        }
        BranchMode::All => {
            let mut out = Vec::new();
            let mut stack: Vec<(FiniteTrace, Option<ExternalPrefix>, StateId)> =
                sys.initial().iter().map(|&x| (FiniteTrace::default(), None, x)).collect();
            stack.reverse();
            while let Some((t, prefix, x)) = stack.pop() {
                let mut children = Vec::new();
                for &y in sys.outputs_of(x) {
                    let p = match (&prefix, t.inputs.last()) {
                        (Some(p), Some(&u)) => p.extended(u, y),
                        _ => ExternalPrefix::new(y),
                    };
                    let u = input(&p)?;
                    for &mu in pm.input_letters(u) {
                        for &lambda in pm.state_letters(x) {
                            let mut t2 = t.clone();
                            t2.states.push(x);
                            t2.outputs.push(y);
                            t2.inputs.push(u);
                            t2.letters.push((mu, lambda));
                            if t2.states.len() == steps {
                                out.push(t2);
                                continue;
                            }
                            for &x2 in sys.successors(x, u) {
                                children.push((t2.clone(), Some(p.clone()), x2));
                            }
                        }
                    }
                }
                children.reverse();
                stack.extend(children);
            }
            out.sort();
            out.dedup();
            Ok(out)
        }
    }
}

/// Options for simulating a continuous plant.
#[derive(Clone, Debug, Default)]
pub struct SimulationOptions {
    /// Start state; drawn from the initial set (or the region of interest) if absent.
    pub x0: Option<Vec<f64>>,
    pub gamma_policy: Policy,
    pub beta_policy: Policy,
}

/// One seeded closed-loop run of the continuous plant under the refined controller.
pub fn simulate_continuous(
    cs: &ControlSystem,
    ga: &GriddedAbstraction,
    mealy: &MealyController,
    regions: &[Region],
    steps: usize,
    seed: u64,
    opts: &SimulationOptions,
) -> Result<ContinuousTrace, RefinementError> {
    assert!(steps >= 1, "at least one step");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = &ga.grid.spec;
    let mut x = match (&opts.x0, &cs.initial) {
        (Some(x0), _) => x0.clone(),
        (None, Some(b)) => b.lo.iter().zip(&b.hi).map(|(&l, &h)| rng.gen_range(l..=h)).collect(),
        (None, None) => spec.lo.iter().zip(&spec.hi).map(|(&l, &h)| rng.gen_range(l..=h)).collect(),
    };
    let mut rc = RefinedController::new(mealy, ga, opts.gamma_policy, opts.beta_policy);
    let mut t = ContinuousTrace { tau: spec.tau, ..Default::default() };
    let inside = |x: &[f64]| x.iter().zip(&spec.lo).zip(&spec.hi).all(|((v, l), h)| l <= v && v <= h);
    for _ in 0..steps {
        let y = cs.sample_output(&x, &mut rng);
        let u = rc.refined_step(&y)?;
        let mut labels: Vec<String> = regions
            .iter()
            .filter(|r| r.boxes.iter().any(|b| b.contains(&x)))
            .map(|r| r.name.clone())
            .collect();
        if !inside(&x) {
            labels.push(VIOLATION.to_string());
        }
        t.xs.push(x.clone());
        t.ys.push(y);
        t.us.push(u.clone());
        t.yhat.push(rc.abstract_prefix().expect("stepped").last_output());
        t.uhat.push(rc.last_abstract_input().expect("stepped"));
        t.labels.push(labels);
        let ds = cs.sample_disturbance(spec.rk4_steps, &mut rng);
        x = cs.flow(&x, &u, spec.tau, spec.rk4_steps, &ds);
    }
    t.final_state = x;
    Ok(t)
}

/// Predicate letter of a finite trace step, as `(input letter, state letter)`.
pub type StepLetters = (Valuation, Valuation);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::tests::integrator_1d;
    use crate::abstraction::{build_abstraction, GridSpec, HyperRect};
    use crate::ltl::{parse_ltl, ltl_to_uca, ApSplit};
    use crate::product::tests::{g_not_p_spec, s2_preds};
    use crate::synthesis::{synthesize, SynthesisOptions};
    use crate::system::tests::s2;

    fn always_b() -> MealyController {
        let mut m = MealyController::new(vec!["y0".into(), "y1".into()], vec!["a".into(), "b".into()], 1, 0);
        m.set_step(0, OutputId(0), InputId(1), 0);
        m
    }

    #[test]
    fn identity_projection() {
        let s = s2();
        let q = EfrrRelation::identity(&s);
        let sigma = ExternalPrefix::new(OutputId(0)).extended(InputId(1), OutputId(0));
        assert_eq!(project_omega(&sigma, &q, Policy::LowestId), Some(sigma.clone()));
        let mut q2 = q.clone();
        q2.gamma[0] = vec![OutputId(0), OutputId(1)];
        let p = project_omega(&sigma, &q2, Policy::LowestId).unwrap();
        assert_eq!(p.outputs(), &[OutputId(0), OutputId(0)]);
        let p = project_omega(&sigma, &q2, Policy::HighestId).unwrap();
        assert_eq!(p.outputs(), &[OutputId(1), OutputId(1)]);
    }

    #[test]
    fn refined_always_b() {
        let s = s2();
        let q = EfrrRelation::identity(&s);
        let m = always_b();
        let mut rc = RefinedController::new(&m, &q, Policy::LowestId, Policy::LowestId);
        for _ in 0..4 {
            assert_eq!(rc.refined_step(&OutputId(0)), Ok(InputId(1)));
        }
        assert!(matches!(rc.refined_step(&OutputId(1)), Err(RefinementError::UndefinedStrategy { .. })));
        let mut q2 = q.clone();
        q2.gamma[1].clear();
        let mut rc = RefinedController::new(&m, &q2, Policy::LowestId, Policy::LowestId);
        assert_eq!(rc.refined_step(&OutputId(1)), Err(RefinementError::NotCovered { step: 0 }));
    }

    #[test]
    fn s2_closed_loop_traces() {
        let s = s2();
        let m = always_b();
        let traces = simulate_finite(&s, &s2_preds(), &m, 5, 0, BranchMode::All).unwrap();
        assert_eq!(traces.len(), 1);
        let t = &traces[0];
        assert_eq!(t.outputs, vec![OutputId(0); 5]);
        assert_eq!(t.inputs, vec![InputId(1); 5]);
        assert!(t.letters.iter().all(|&(mu, l)| mu == Valuation::EMPTY && l == Valuation::EMPTY));
        let r = simulate_finite(&s, &s2_preds(), &m, 5, 9, BranchMode::Random).unwrap();
        assert_eq!(&r[0], t);
    }

    #[test]
    fn deadlocking_controller_surfaces() {
        let s = s2();
        let mut m = MealyController::new(vec!["y0".into(), "y1".into()], vec!["a".into(), "b".into()], 1, 0);
        m.set_step(0, OutputId(0), InputId(0), 0);
        m.set_step(0, OutputId(1), InputId(1), 0);
        let e = simulate_finite(&s, &s2_preds(), &m, 4, 0, BranchMode::All).unwrap_err();
        assert_eq!(e.reason, CompositionFailure::NotEnabled(InputId(1)));
    }

    #[test]
    fn refined_strategy_matches_runtime() {
        let s = s2();
        let q = EfrrRelation::identity(&s);
        let syn = synthesize(&s, &s2_preds(), &g_not_p_spec(), SynthesisOptions::default()).unwrap();
        let st = RefinedStrategy { mealy: &syn.controller, rel: &q, gamma_policy: Policy::LowestId, beta_policy: Policy::LowestId };
        let traces = simulate_finite(&s, &s2_preds(), &st, 6, 0, BranchMode::All).unwrap();
        assert!(traces.iter().all(|t| t.inputs.iter().all(|&u| u == InputId(1))));
    }

    #[test]
    fn grid_run_respects_refinement_membership() {
        let cs = integrator_1d(0.1).with_initial(HyperRect::new(vec![0.2], vec![0.3]));
        let regions = [Region { name: "goal".into(), boxes: vec![HyperRect::new(vec![1.5], vec![4.0])] }];
        let grid = GridSpec::new(vec![0.0], vec![4.0], vec![0.5], 1.0);
        let ga = build_abstraction(&cs, &grid, &regions, Default::default()).unwrap();
        let aps = ApSplit::outputs_only(ga.preds.output_aps().to_vec());
        let spec = ltl_to_uca(&parse_ltl("F goal & G !violation", &aps).unwrap());
        let opts = SynthesisOptions { k_max: Some(8), ..Default::default() };
        let syn = synthesize(&ga.system, &ga.preds, &spec, opts).unwrap();
        let t = simulate_continuous(&cs, &ga, &syn.controller, &regions, 12, 7, &Default::default()).unwrap();
        // every applied input is the refinement of the abstract controller's choice on the tracked prefix
        let mut p = ExternalPrefix::new(t.yhat[0]);
        for k in 0..t.us.len() {
            if k > 0 {
                p.push(t.uhat[k - 1], t.yhat[k]);
            }
            let uh = syn.controller.input_for(&p).unwrap();
            assert_eq!(uh, t.uhat[k]);
            assert!(ga.beta(uh).contains(&t.us[k]));
        }
        assert!(t.labels.iter().any(|l| l.contains(&"goal".to_string())));
        assert!(t.labels.iter().all(|l| !l.contains(&VIOLATION.to_string())));
    }
}
