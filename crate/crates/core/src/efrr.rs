//! Checking relation triples `(alpha, beta, gamma)` between systems.
//!
//! For two finite systems the axioms are decided exhaustively. For a
//! continuous plant and its grid abstraction they can only be falsified by
//! sampling, see [`check_sampled`].

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::abstraction::{reach_overapprox, ControlSystem, GriddedAbstraction, HyperRect};
use crate::system::{FiniteSystem, FiniteSystemBuilder, InputId, OutputId, StateId};

/// Set-valued maps from concrete to abstract states, abstract to concrete
/// inputs, and concrete to abstract outputs. Empty images are allowed; the
/// checker reports them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfrrRelation {
    pub alpha: Vec<Vec<StateId>>,
    pub beta: Vec<Vec<InputId>>,
    pub gamma: Vec<Vec<OutputId>>,
}

impl EfrrRelation {
    /// Relates every state, input and output of `sys` to itself.
    pub fn identity(sys: &FiniteSystem) -> Self {
        EfrrRelation {
            alpha: sys.states().map(|x| vec![x]).collect(),
            beta: sys.inputs().map(|u| vec![u]).collect(),
            gamma: sys.outputs().map(|y| vec![y]).collect(),
        }
    }

    /// The inverse triple; sizes are those of the abstract states, the
    /// concrete inputs and the abstract outputs.
    pub fn inverse(&self, abs_states: usize, conc_inputs: usize, abs_outputs: usize) -> Self {
        fn invert<A: Copy, B: From<usize>>(m: &[Vec<A>], n: usize, index: fn(A) -> usize) -> Vec<Vec<B>> {
            let mut out: Vec<Vec<B>> = (0..n).map(|_| Vec::new()).collect();
            for (i, image) in m.iter().enumerate() {
                for &a in image {
                    out[index(a)].push(B::from(i));
                }
            }
            out
        }
        EfrrRelation {
            alpha: invert(&self.alpha, abs_states, StateId::index),
            beta: invert(&self.beta, conc_inputs, InputId::index),
            gamma: invert(&self.gamma, abs_outputs, OutputId::index),
        }
    }

    /// The same relation with `alpha` and `gamma` cut down to the given concrete states.
    pub fn restrict_states(&self, keep: &[bool]) -> Self {
        let mut r = self.clone();
        for (x, image) in r.alpha.iter_mut().enumerate() {
            if !keep[x] {
                image.clear();
            }
        }
        r
    }

    /// Text form: one `[alpha]`, `[beta]` and `[gamma]` section with lines
    /// `from -> to to ...` over the two systems' names.
    pub fn to_text(&self, conc: &FiniteSystem, abs: &FiniteSystem) -> String {
        let mut out = String::from("[alpha]\n");
        for x in conc.states() {
            let image: Vec<&str> = self.alpha[x.0].iter().map(|&a| abs.state_name(a)).collect();
            out += &format!("{} -> {}\n", conc.state_name(x), image.join(" "));
        }
        out += "[beta]\n";
        for u in abs.inputs() {
            let image: Vec<&str> = self.beta[u.0].iter().map(|&c| conc.input_name(c)).collect();
            out += &format!("{} -> {}\n", abs.input_name(u), image.join(" "));
        }
        out += "[gamma]\n";
        for y in conc.outputs() {
            let image: Vec<&str> = self.gamma[y.0].iter().map(|&a| abs.output_name(a)).collect();
            out += &format!("{} -> {}\n", conc.output_name(y), image.join(" "));
        }
        out
    }

    pub fn from_text(text: &str, conc: &FiniteSystem, abs: &FiniteSystem) -> Result<Self, RelationError> {
        let mut rel = EfrrRelation {
            alpha: vec![Vec::new(); conc.num_states()],
            beta: vec![Vec::new(); abs.num_inputs()],
            gamma: vec![Vec::new(); conc.num_outputs()],
        };
        let mut section = "";
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match name.trim() {
                    "alpha" => "alpha",
                    "beta" => "beta",
                    "gamma" => "gamma",
                    other => return Err(RelationError::Syntax(i + 1, format!("unknown section `{other}`"))),
                };
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| RelationError::Syntax(i + 1, "expected `from -> to ...`".into()))?;
            let (lhs, rhs) = (lhs.trim(), rhs.split_whitespace());
            let unknown = |n: &str| RelationError::Syntax(i + 1, format!("unknown name `{n}`"));
            match section {
                "alpha" => {
                    let x = conc.state_id(lhs).ok_or_else(|| unknown(lhs))?;
                    for n in rhs {
                        rel.alpha[x.0].push(abs.state_id(n).ok_or_else(|| unknown(n))?);
                    }
                }
                "beta" => {
                    let u = abs.input_id(lhs).ok_or_else(|| unknown(lhs))?;
                    for n in rhs {
                        rel.beta[u.0].push(conc.input_id(n).ok_or_else(|| unknown(n))?);
                    }
                }
                "gamma" => {
                    let y = conc.output_id(lhs).ok_or_else(|| unknown(lhs))?;
                    for n in rhs {
                        rel.gamma[y.0].push(abs.output_id(n).ok_or_else(|| unknown(n))?);
                    }
                }
                _ => return Err(RelationError::Syntax(i + 1, "entry outside a section".into())),
            }
        }
        for v in rel.alpha.iter_mut() {
            v.sort_unstable();
            v.dedup();
        }
        for v in rel.beta.iter_mut() {
            v.sort_unstable();
            v.dedup();
        }
        for v in rel.gamma.iter_mut() {
            v.sort_unstable();
            v.dedup();
        }
        Ok(rel)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelationError {
    #[error("line {0}: {1}")]
    Syntax(usize, String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Clause {
    /// Initial states relate to a non-empty set of initial abstract states.
    A1,
    /// Refinements of abstractly enabled inputs exist and are enabled.
    A2i,
    /// Related successors are abstract successors.
    A2ii,
    /// Related outputs are abstract outputs of every related state.
    A3,
}

impl Clause {
    pub const ALL: [Clause; 4] = [Clause::A1, Clause::A2i, Clause::A2ii, Clause::A3];
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::A1 => "A1",
            Clause::A2i => "A2.i",
            Clause::A2ii => "A2.ii",
            Clause::A3 => "A3",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub clause: Clause,
    pub x: usize,
    pub xhat: Option<usize>,
    pub uhat: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EfrrReport {
    pub violations: Vec<Violation>,
}

impl EfrrReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn fails(&self, c: Clause) -> bool {
        self.violations.iter().any(|v| v.clause == c)
    }

    /// One JSON object per violation followed by a verdict line.
    pub fn to_jsonl(&self, direction: &str) -> String {
        let mut out = String::new();
        for v in &self.violations {
            out += &serde_json::json!({"direction": direction, "violation": v}).to_string();
            out.push('\n');
        }
        let verdict = if self.passed() { "pass" } else { "fail" };
        out += &serde_json::json!({"direction": direction, "verdict": verdict, "violations": self.violations.len()})
            .to_string();
        out.push('\n');
        out
    }
}

fn names(ids: impl IntoIterator<Item = usize>) -> String {
    let v: Vec<String> = ids.into_iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

/// Decides whether `abs` is a sound abstraction of `conc` under `q`,
/// listing every violated clause with a witness.
pub fn check_sound_abstraction(conc: &FiniteSystem, abs: &FiniteSystem, q: &EfrrRelation) -> EfrrReport {
    let mut violations = Vec::new();
    for &x in conc.initial() {
        let image = &q.alpha[x.0];
        if image.is_empty() {
            violations.push(Violation { clause: Clause::A1, x: x.0, xhat: None, uhat: None, detail: "alpha(x) empty".into() });
        }
        for &xh in image {
            if !abs.is_initial(xh) {
                violations.push(Violation {
                    clause: Clause::A1,
                    x: x.0,
                    xhat: Some(xh.0),
                    uhat: None,
                    detail: "related state is not initial".into(),
                });
            }
        }
    }
    let per_state: Vec<Vec<Violation>> = conc
        .states()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|x| {
            let mut out = Vec::new();
            let y_image: BTreeSet<OutputId> =
                conc.outputs_of(x).iter().flat_map(|y| q.gamma[y.0].iter().copied()).collect();
            for &xh in &q.alpha[x.0] {
                for uh in abs.inputs().filter(|&uh| abs.is_enabled(xh, uh)) {
                    let beta = &q.beta[uh.0];
                    let w = |clause, detail: String| Violation { clause, x: x.0, xhat: Some(xh.0), uhat: Some(uh.0), detail };
                    if beta.is_empty() {
                        out.push(w(Clause::A2i, "beta(uhat) empty".into()));
                    }
                    let disabled: Vec<usize> = beta.iter().filter(|&&u| !conc.is_enabled(x, u)).map(|u| u.0).collect();
                    if !disabled.is_empty() {
                        out.push(w(Clause::A2i, format!("inputs {} disabled at x", names(disabled))));
                    }
                    let image: BTreeSet<StateId> = beta
                        .iter()
                        .flat_map(|&u| conc.successors(x, u))
                        .flat_map(|x2| q.alpha[x2.0].iter().copied())
                        .collect();
                    if image.is_empty() {
                        out.push(w(Clause::A2ii, "alpha(F(x, beta(uhat))) empty".into()));
                    }
                    let succ = abs.successors(xh, uh);
                    let missing: Vec<usize> =
                        image.iter().filter(|s| succ.binary_search(s).is_err()).map(|s| s.0).collect();
                    if !missing.is_empty() {
                        out.push(w(Clause::A2ii, format!("related successors {} not abstract successors", names(missing))));
                    }
                }
                let w = |detail: String| Violation { clause: Clause::A3, x: x.0, xhat: Some(xh.0), uhat: None, detail };
                if y_image.is_empty() {
                    out.push(w("gamma(H(x)) empty".into()));
                }
                let missing: Vec<usize> = y_image.iter().filter(|&&y| !abs.emits(xh, y)).map(|y| y.0).collect();
                if !missing.is_empty() {
                    out.push(w(format!("related outputs {} not emitted", names(missing))));
                }
            }
            out
        })
        .collect();
    violations.extend(per_state.into_iter().flatten());
    EfrrReport { violations }
}

/// Both directions: `abs` abstracts `conc` under `q` and `conc` abstracts `abs` under the inverse.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RealizationReport {
    pub forward: EfrrReport,
    pub inverse: EfrrReport,
}

impl RealizationReport {
    pub fn passed(&self) -> bool {
        self.forward.passed() && self.inverse.passed()
    }
}

pub fn check_sound_realization(conc: &FiniteSystem, abs: &FiniteSystem, q: &EfrrRelation) -> RealizationReport {
    let inv = q.inverse(abs.num_states(), conc.num_inputs(), abs.num_outputs());
    RealizationReport {
        forward: check_sound_abstraction(conc, abs, q),
        inverse: check_sound_abstraction(abs, conc, &inv),
    }
}

/// What a sampled counterexample contradicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SampledKind {
    Successor,
    Output,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledViolation {
    pub kind: SampledKind,
    pub x: Vec<f64>,
    pub cell: usize,
    pub input: usize,
    /// Endpoint of the step, or the sampled output.
    pub value: Vec<f64>,
    pub missing: Vec<usize>,
}

/// Outcome of sampling; absence of violations proves nothing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledReport {
    pub samples: usize,
    pub violations: usize,
    pub witnesses: Vec<SampledViolation>,
    pub proving: bool,
}

const MAX_WITNESSES: usize = 16;

/// Falsification of the abstraction by simulation with the sampling time the abstraction was built for.
pub fn check_sampled(cs: &ControlSystem, ga: &GriddedAbstraction, samples: usize, seed: u64) -> SampledReport {
    check_sampled_with_tau(cs, ga, ga.grid.spec.tau, samples, seed)
}

/// Sample `t` goes to the (cell, input) pair `t mod (cells * inputs)`: a
/// uniform point of the cell, a uniform piecewise-constant disturbance
/// signal and one simulated step of length `tau`.
pub fn check_sampled_with_tau(
    cs: &ControlSystem,
    ga: &GriddedAbstraction,
    tau: f64,
    samples: usize,
    seed: u64,
) -> SampledReport {
    let nc = ga.grid.num_cells();
    let nu = cs.inputs.len();
    let steps = ga.grid.spec.rk4_steps;
    let found: Vec<SampledViolation> = (0..samples)
        .into_par_iter()
        .flat_map_iter(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let (cell, u) = ((t / nu) % nc, t % nu);
            let b = ga.grid.cell_box(cell);
            let x: Vec<f64> = b.lo.iter().zip(&b.hi).map(|(&l, &h)| rng.gen_range(l..=h)).collect();
            let ds = cs.sample_disturbance(steps, &mut rng);
            let end = cs.flow(&x, &cs.inputs[u], tau, steps, &ds);
            let y = cs.sample_output(&x, &mut rng);
            let mut out = Vec::new();
            let targets = ga.alpha(&end);
            let outs = ga.gamma(&y);
            for xh in ga.alpha(&x) {
                let succ = ga.system.successors(xh, InputId(u));
                let missing: Vec<usize> =
                    targets.iter().filter(|s| succ.binary_search(s).is_err()).map(|s| s.0).collect();
                if !missing.is_empty() {
                    out.push(SampledViolation {
                        kind: SampledKind::Successor,
                        x: x.clone(),
                        cell: xh.0,
                        input: u,
                        value: end.clone(),
                        missing,
                    });
                }
                let missing: Vec<usize> = outs.iter().filter(|&&y| !ga.system.emits(xh, y)).map(|y| y.0).collect();
                if !missing.is_empty() {
                    out.push(SampledViolation {
                        kind: SampledKind::Output,
                        x: x.clone(),
                        cell: xh.0,
                        input: u,
                        value: y.clone(),
                        missing,
                    });
                }
            }
            out
        })
        .collect();
    SampledReport {
        samples,
        violations: found.len(),
        witnesses: found.into_iter().take(MAX_WITNESSES).collect(),
        proving: false,
    }
}

/// A finite concrete system on a lattice of sample points with spacing
/// `h`, extending `margin` beyond the grid, paired with its relation to the
/// grid abstraction.
///
/// A point inside the region of interest steps to every lattice point in
/// the reach box of the point itself; a point outside is absorbing.
/// Outputs are the points themselves (observed exactly) and are related to
/// the abstract outputs containing them. The abstraction must use noisy
/// outputs.
pub fn lattice_pair(cs: &ControlSystem, ga: &GriddedAbstraction, h: f64, margin: f64) -> (FiniteSystem, EfrrRelation) {
    let spec = &ga.grid.spec;
    let n = spec.dim();
    let axis: Vec<Vec<f64>> = (0..n)
        .map(|d| {
            let (lo, hi) = (spec.lo[d] - margin, spec.hi[d] + margin);
            let k = ((hi - lo) / h).round() as usize;
            (0..=k).map(|i| lo + i as f64 * h).collect()
        })
        .collect();
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for a in &axis {
        points = points
            .into_iter()
            .flat_map(|p| a.iter().map(move |&v| {
                let mut q = p.clone();
                q.push(v);
                q
            }))
            .collect();
    }
    let region = HyperRect::new(spec.lo.clone(), spec.hi.clone());
    let np = points.len();
    let mut b = FiniteSystemBuilder::with_sizes(np, cs.inputs.len(), np);
    for i in 0..np {
        b.initial_id(StateId(i)).expect("valid id");
        b.output_id(StateId(i), OutputId(i)).expect("valid id");
        for (u, uv) in cs.inputs.iter().enumerate() {
            if !region.contains(&points[i]) {
                b.transition_id(StateId(i), InputId(u), StateId(i)).expect("valid id");
                continue;
            }
            if let Some(r) = reach_overapprox(cs, &HyperRect::point(&points[i]), uv, spec.tau, spec.rk4_steps) {
                for (j, p) in points.iter().enumerate() {
                    if r.contains(p) {
                        b.transition_id(StateId(i), InputId(u), StateId(j)).expect("valid id");
                    }
                }
            }
        }
    }
    let sys = b.build().expect("every point has an output");
    let rel = EfrrRelation {
        alpha: points.iter().map(|p| ga.alpha(p)).collect(),
        beta: (0..cs.inputs.len()).map(|u| vec![InputId(u)]).collect(),
        gamma: points.iter().map(|p| ga.gamma(p)).collect(),
    };
    (sys, rel)
}
