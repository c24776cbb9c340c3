//! The stages behind the command-line tool. Every stage reads text files
//! and returns or writes text, deterministically for a given seed.
//!
//! A bundle is a directory holding `problem.toml`, `abstract.sys`,
//! `spec.hoa` and, for finite problems, `concrete.sys` and `relation.rel`.
//! `synthesize` adds `controller.txt` to a bundle.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use crate::abstraction::{build_abstraction, AbstractionOptions, GriddedAbstraction};
use crate::automaton::hoa::hoa_export;
use crate::automaton::Uca;
use crate::efrr::{check_sampled, check_sound_abstraction, check_sound_realization, EfrrRelation};
use crate::ltl::{ltl_to_uca, parse_ltl, ApSplit};
use crate::oracle;
use crate::problem::{read, Plant, Problem, ProblemError};
use crate::product::{build_product, product_hoa, ProductOptions};
use crate::refinement::trace::{finite_traces_csv, trace_csv, trace_svg, ContinuousTrace};
use crate::refinement::{simulate_continuous, simulate_finite, BranchMode, Policy, RefinedStrategy, SimulationOptions};
use crate::synthesis::{synthesize, MealyController, SynthesisError, SynthesisOptions};
use crate::system::text::{parse_system, write_system};
use crate::system::{FiniteSystem, PredicateMaps};

pub const PROBLEM: &str = "problem.toml";
pub const CONCRETE: &str = "concrete.sys";
pub const ABSTRACT: &str = "abstract.sys";
pub const RELATION: &str = "relation.rel";
pub const SPEC: &str = "spec.hoa";
pub const CONTROLLER: &str = "controller.txt";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("abstraction: {0}")]
    Abstraction(#[from] crate::abstraction::AbstractionError),
    #[error("{0}")]
    Synthesis(#[from] SynthesisError),
    #[error("product: {0}")]
    Product(#[from] crate::product::ProductError),
    #[error("system file: {0}")]
    System(#[from] crate::system::text::TextError),
    #[error("relation file: {0}")]
    Relation(#[from] crate::efrr::RelationError),
    #[error("controller file: {0}")]
    Controller(#[from] crate::synthesis::mealy::MealyError),
    #[error("{0}")]
    Refinement(#[from] crate::refinement::RefinementError),
    #[error("{0}")]
    Composition(#[from] crate::system::CompositionError),
    #[error("{0}")]
    Ltl(#[from] crate::ltl::LtlError),
    #[error("{0}")]
    Usage(String),
}

fn usage(msg: impl Into<String>) -> PipelineError {
    PipelineError::Usage(msg.into())
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

fn read_text(path: &Path) -> Result<String, PipelineError> {
    Ok(read(path)?)
}

/// A problem file, or the problem of a bundle directory.
pub fn load_problem(path: &Path) -> Result<Problem, PipelineError> {
    if path.is_dir() {
        Ok(Problem::load(&path.join(PROBLEM))?)
    } else {
        Ok(Problem::load(path)?)
    }
}

/// The abstraction a problem describes, with what is needed to refine it.
#[derive(Clone, Debug)]
pub enum Abstraction {
    /// A finite plant related to itself by the identity.
    Finite { sys: FiniteSystem, pm: PredicateMaps, rel: EfrrRelation },
    Gridded(Box<GriddedAbstraction>),
}

impl Abstraction {
    pub fn system(&self) -> &FiniteSystem {
        match self {
            Abstraction::Finite { sys, .. } => sys,
            Abstraction::Gridded(ga) => &ga.system,
        }
    }

    pub fn preds(&self) -> &PredicateMaps {
        match self {
            Abstraction::Finite { pm, .. } => pm,
            Abstraction::Gridded(ga) => &ga.preds,
        }
    }
}

pub fn abstraction_of(problem: &Problem, jobs: Option<usize>) -> Result<Abstraction, PipelineError> {
    match &problem.plant {
        Plant::Finite(f) => Ok(Abstraction::Finite {
            sys: f.sys.clone(),
            pm: f.pm.clone(),
            rel: EfrrRelation::identity(&f.sys),
        }),
        Plant::Continuous(c) => {
            let ga = build_abstraction(&c.cs, &c.grid, &c.regions, AbstractionOptions { jobs })?;
            Ok(Abstraction::Gridded(Box::new(ga)))
        }
    }
}

/// Compiles an LTL formula over the given propositions to HOA.
pub fn cmd_spec_compile(formula: &str, inputs: &[String], outputs: &[String]) -> Result<String, PipelineError> {
    let aps = ApSplit::new(inputs.to_vec(), outputs.to_vec());
    Ok(hoa_export(&ltl_to_uca(&parse_ltl(formula, &aps)?)))
}

/// Compiles a problem's specification (including `G !violation` for
/// continuous plants) to HOA.
pub fn cmd_spec_compile_problem(path: &Path) -> Result<String, PipelineError> {
    Ok(hoa_export(&load_problem(path)?.spec_automaton()?))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractSummary {
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub transitions: usize,
}

/// Builds the abstraction and writes a bundle to `out`.
pub fn cmd_abstract(path: &Path, out: &Path, jobs: Option<usize>) -> Result<AbstractSummary, PipelineError> {
    let problem = load_problem(path)?;
    let abs = abstraction_of(&problem, jobs)?;
    fs::create_dir_all(out).map_err(|source| PipelineError::Io { path: out.to_path_buf(), source })?;
    let mut file = problem.file.clone();
    if let Some(h) = &file.spec.hoa {
        write(&out.join("spec_input.hoa"), &read_text(&problem.dir.join(h))?)?;
        file.spec.hoa = Some("spec_input.hoa".into());
    }
    if let Abstraction::Finite { sys, pm, rel } = &abs {
        write(&out.join(CONCRETE), &write_system(sys, pm))?;
        write(&out.join(RELATION), &rel.to_text(sys, sys))?;
        file.system.as_mut().expect("finite problem").file = CONCRETE.into();
    }
    let toml = toml::to_string(&file).map_err(|e| usage(format!("cannot serialize problem: {e}")))?;
    write(&out.join(PROBLEM), &toml)?;
    write(&out.join(ABSTRACT), &write_system(abs.system(), abs.preds()))?;
    write(&out.join(SPEC), &hoa_export(&problem.spec_automaton()?))?;
    let s = abs.system();
    let transitions = s.states().flat_map(|x| s.inputs().map(move |u| s.successors(x, u).len())).sum();
    Ok(AbstractSummary { states: s.num_states(), inputs: s.num_inputs(), outputs: s.num_outputs(), transitions })
}

/// The abstraction of a bundle, rebuilt from its problem and compared with
/// the stored `abstract.sys`; for a problem file, built directly.
pub fn load_abstraction(path: &Path, jobs: Option<usize>) -> Result<(Problem, Abstraction), PipelineError> {
    let problem = load_problem(path)?;
    let abs = abstraction_of(&problem, jobs)?;
    if path.is_dir() {
        let stored = read_text(&path.join(ABSTRACT))?;
        if stored != write_system(abs.system(), abs.preds()) {
            return Err(usage(format!("{}: abstract.sys does not match problem.toml; re-run abstract", path.display())));
        }
    }
    Ok((problem, abs))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SynthesizeFlags {
    pub k_max: Option<usize>,
    pub strict: bool,
    pub antichain: bool,
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct SynthesisSummary {
    pub k: usize,
    pub memory_states: usize,
    pub product_states: usize,
    pub game_nodes: usize,
    pub controller: MealyController,
    pub written: Option<PathBuf>,
}

/// Synthesizes on the abstraction. Command-line flags override the
/// problem's `[synthesis]` section. A bundle gets `controller.txt`;
/// otherwise the controller is written to `out` when given.
pub fn cmd_synthesize(path: &Path, flags: SynthesizeFlags, out: Option<&Path>) -> Result<SynthesisSummary, PipelineError> {
    let (problem, sys, pm) = if path.is_dir() {
        let problem = load_problem(path)?;
        let (sys, pm) = parse_system(&read_text(&path.join(ABSTRACT))?)?;
        (problem, sys, pm)
    } else {
        let problem = load_problem(path)?;
        let abs = abstraction_of(&problem, flags.jobs)?;
        (problem, abs.system().clone(), abs.preds().clone())
    };
    let spec = problem.spec_automaton()?;
    let opts = SynthesisOptions {
        k_max: flags.k_max.or(problem.file.synthesis.k_max),
        strict: flags.strict || problem.file.synthesis.strict,
        antichain: flags.antichain || problem.file.synthesis.antichain,
    };
    let syn = synthesize(&sys, &pm, &spec, opts)?;
    let target = match out {
        Some(p) => Some(p.to_path_buf()),
        None if path.is_dir() => Some(path.join(CONTROLLER)),
        None => None,
    };
    if let Some(t) = &target {
        write(t, &syn.controller.to_text())?;
    }
    Ok(SynthesisSummary {
        k: syn.k,
        memory_states: syn.controller.num_states(),
        product_states: syn.product_states,
        game_nodes: syn.game_nodes,
        controller: syn.controller,
        written: target,
    })
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub passed: bool,
    pub jsonl: String,
}

/// Exact relation check for finite bundles; sampled (falsification-only)
/// check for gridded ones.
pub fn cmd_check_efrr(path: &Path, samples: usize, seed: u64, realization: bool) -> Result<CheckReport, PipelineError> {
    if path.is_dir() && path.join(RELATION).exists() {
        let (conc, _) = parse_system(&read_text(&path.join(CONCRETE))?)?;
        let (abs, _) = parse_system(&read_text(&path.join(ABSTRACT))?)?;
        let rel = EfrrRelation::from_text(&read_text(&path.join(RELATION))?, &conc, &abs)?;
        return Ok(if realization {
            let r = check_sound_realization(&conc, &abs, &rel);
            CheckReport { passed: r.passed(), jsonl: r.forward.to_jsonl("forward") + &r.inverse.to_jsonl("inverse") }
        } else {
            let r = check_sound_abstraction(&conc, &abs, &rel);
            CheckReport { passed: r.passed(), jsonl: r.to_jsonl("forward") }
        });
    }
    let (problem, abs) = load_abstraction(path, None)?;
    match (&problem.plant, abs) {
        (Plant::Continuous(c), Abstraction::Gridded(ga)) => {
            if realization {
                return Err(usage("realization checks need a finite pair"));
            }
            let r = check_sampled(&c.cs, &ga, samples, seed);
            let mut jsonl = String::new();
            for w in &r.witnesses {
                jsonl += &json!({"direction": "sampled", "violation": w}).to_string();
                jsonl.push('\n');
            }
            let verdict = if r.violations == 0 { "no violation found" } else { "fail" };
            jsonl += &json!({
                "direction": "sampled",
                "verdict": verdict,
                "samples": r.samples,
                "violations": r.violations,
                "proving": r.proving,
            })
            .to_string();
            jsonl.push('\n');
            Ok(CheckReport { passed: r.violations == 0, jsonl })
        }
        (_, Abstraction::Finite { sys, rel, .. }) => {
            let r = check_sound_abstraction(&sys, &sys, &rel);
            Ok(CheckReport { passed: r.passed(), jsonl: r.to_jsonl("forward") })
        }
        _ => unreachable!("plant and abstraction kinds agree"),
    }
}

#[derive(Clone, Debug)]
pub struct SimulateFlags {
    pub steps: usize,
    pub seed: u64,
    pub mode: BranchMode,
    /// Overrides both selection policies.
    pub policy: Option<Policy>,
    pub plot: bool,
}

#[derive(Clone, Debug)]
pub struct SimulationOutput {
    pub csv: String,
    pub svg: Option<String>,
    pub trace: Option<ContinuousTrace>,
}

/// Runs the refined controller on the concrete plant.
pub fn cmd_simulate(path: &Path, controller: &Path, flags: &SimulateFlags) -> Result<SimulationOutput, PipelineError> {
    let (problem, abs) = load_abstraction(path, None)?;
    let mealy = MealyController::from_text(&read_text(controller)?)?;
    if mealy.output_names() != abs.system().output_names() || mealy.input_names() != abs.system().input_names() {
        return Err(usage("controller does not match the abstraction's outputs and inputs"));
    }
    let (gp, bp) = problem.policies()?;
    let (gp, bp) = flags.policy.map_or((gp, bp), |p| (p, p));
    match abs {
        Abstraction::Finite { sys, pm, rel } => {
            let strategy = RefinedStrategy { mealy: &mealy, rel: &rel, gamma_policy: gp, beta_policy: bp };
            let traces = simulate_finite(&sys, &pm, &strategy, flags.steps, flags.seed, flags.mode)?;
            Ok(SimulationOutput { csv: finite_traces_csv(&sys, &pm, &traces), svg: None, trace: None })
        }
        Abstraction::Gridded(ga) => {
            let Plant::Continuous(c) = &problem.plant else { unreachable!("gridded abstractions come from continuous plants") };
            let opts = SimulationOptions { x0: problem.file.simulation.x0.clone(), gamma_policy: gp, beta_policy: bp };
            let t = simulate_continuous(&c.cs, &ga, &mealy, &c.regions, flags.steps, flags.seed, &opts)?;
            let csv = trace_csv(&t, ga.system.output_names(), ga.system.input_names());
            let svg = flags.plot.then(|| trace_svg(&t, &c.grid, &c.regions));
            Ok(SimulationOutput { csv, svg, trace: Some(t) })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Hoa,
    Dot,
    Csv,
    Svg,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hoa" => Ok(ExportFormat::Hoa),
            "dot" => Ok(ExportFormat::Dot),
            "csv" => Ok(ExportFormat::Csv),
            "svg" => Ok(ExportFormat::Svg),
            other => Err(format!("unknown format `{other}` (expected hoa, dot, csv or svg)")),
        }
    }
}

/// Exports an artifact:
/// - `hoa`: the specification automaton of a problem or bundle, or with
///   `product` the product automaton with the abstraction;
/// - `dot`: a controller file, or the abstraction of a problem or bundle;
/// - `csv`: a controller's step table, or the abstraction's transitions;
/// - `svg`: the grid and regions of a continuous problem.
pub fn cmd_export(path: &Path, format: ExportFormat, product: bool) -> Result<String, PipelineError> {
    let is_controller = path.is_file() && path.extension().is_some_and(|e| e == "txt");
    if is_controller {
        let m = MealyController::from_text(&read_text(path)?)?;
        return match format {
            ExportFormat::Dot => Ok(m.to_dot()),
            ExportFormat::Csv => Ok(controller_csv(&m)),
            _ => Err(usage("controllers export to dot or csv")),
        };
    }
    let problem = load_problem(path)?;
    match format {
        ExportFormat::Hoa if !product => Ok(hoa_export(&problem.spec_automaton()?)),
        ExportFormat::Hoa => {
            let abs = abstraction_of(&problem, None)?;
            let p = build_product(abs.system(), abs.preds(), &problem.spec_automaton()?, ProductOptions::default())?;
            Ok(product_hoa(&p))
        }
        ExportFormat::Dot => Ok(system_dot(abstraction_of(&problem, None)?.system())),
        ExportFormat::Csv => Ok(system_csv(abstraction_of(&problem, None)?.system())),
        ExportFormat::Svg => match &problem.plant {
            Plant::Continuous(c) => {
                let t = ContinuousTrace { tau: c.grid.tau, ..Default::default() };
                Ok(trace_svg(&t, &c.grid, &c.regions))
            }
            Plant::Finite(_) => Err(usage("svg export needs a continuous problem")),
        },
    }
}

fn controller_csv(m: &MealyController) -> String {
    let mut out = String::from("z,y,u,z_next\n");
    for z in 0..m.num_states() {
        for (y, yn) in m.output_names().iter().enumerate() {
            if let Some((u, z2)) = m.step(z, crate::system::OutputId(y)) {
                let _ = writeln!(out, "{z},{yn},{},{z2}", m.input_names()[u.0]);
            }
        }
    }
    out
}

fn system_csv(s: &FiniteSystem) -> String {
    let mut out = String::from("state,input,successors\n");
    for x in s.states() {
        for u in s.inputs() {
            let succ: Vec<&str> = s.successors(x, u).iter().map(|&x2| s.state_name(x2)).collect();
            if !succ.is_empty() {
                let _ = writeln!(out, "{},{},{}", s.state_name(x), s.input_name(u), succ.join(" "));
            }
        }
    }
    out
}

fn system_dot(s: &FiniteSystem) -> String {
    let mut out = String::from("digraph system {\n  rankdir=LR;\n");
    for x in s.states() {
        let outs: Vec<&str> = s.outputs_of(x).iter().map(|&y| s.output_name(y)).collect();
        let shape = if s.is_initial(x) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  {} [shape={shape}, label=\"{}\\n{}\"];", x.0, s.state_name(x), outs.join(","));
    }
    for x in s.states() {
        for u in s.inputs() {
            for &x2 in s.successors(x, u) {
                let _ = writeln!(out, "  {} -> {} [label=\"{}\"];", x.0, x2.0, s.input_name(u));
            }
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Efrr,
    Blocking,
    Soundness,
    Completeness,
    Refinement,
    Ltl,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Efrr, Suite::Blocking, Suite::Soundness, Suite::Completeness, Suite::Refinement, Suite::Ltl];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Efrr => "efrr",
            Suite::Blocking => "blocking",
            Suite::Soundness => "soundness",
            Suite::Completeness => "completeness",
            Suite::Refinement => "refinement",
            Suite::Ltl => "ltl",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (expected efrr, blocking, soundness, completeness, refinement or ltl)"))
    }
}

/// Runs one oracle on one seeded instance; the JSON object has at least
/// `suite`, `seed` and `pass`.
pub fn verify_one(suite: Suite, seed: u64) -> serde_json::Value {
    use crate::oracle::*;
    let base = |pass: bool, extra: serde_json::Value| {
        let mut v = json!({"suite": suite.name(), "seed": seed, "pass": pass});
        if let (Some(o), Some(e)) = (v.as_object_mut(), extra.as_object()) {
            o.extend(e.clone());
        }
        v
    };
    match suite {
        Suite::Efrr => {
            let (c, a, q) = thickened_pair(seed);
            let reference = reference_clauses(&c, &a, &q);
            let got: std::collections::BTreeSet<_> =
                check_sound_abstraction(&c, &a, &q).violations.iter().map(|v| v.clause).collect();
            let clauses: Vec<String> = reference.iter().map(|c| c.to_string()).collect();
            base(got == reference, json!({"violated": clauses}))
        }
        Suite::Blocking => {
            let inst = RandomInstance::random(seed, InstanceSize::SMALL);
            let v = oracle_language(&inst, CAPS.max_prefix, CAPS.max_period);
            let cex = v.counterexample.as_ref().map(|(w, r)| format!("{w:?} {r:?}"));
            base(v.passed(), json!({"formula": inst.formula, "words": v.words, "counterexample": cex}))
        }
        Suite::Soundness => {
            let inst = RandomInstance::random(seed, InstanceSize::SMALL);
            match synthesize(&inst.sys, &inst.pm, &inst.spec, SynthesisOptions::default()) {
                Ok(s) => {
                    let composable = crate::system::closed_loop_prefixes(&inst.sys, &s.controller, 12).is_ok();
                    let verdict = model_check_mealy(&inst.sys, &inst.pm, &inst.spec, &s.controller);
                    base(
                        composable && verdict.holds(),
                        json!({"formula": inst.formula, "realizable": true, "k": s.k, "verdict": format!("{verdict:?}")}),
                    )
                }
                Err(_) => base(true, json!({"formula": inst.formula, "realizable": false})),
            }
        }
        Suite::Completeness => {
            let inst = RandomInstance::random(seed, InstanceSize::TINY);
            let v = oracle_completeness(&inst, CAPS.max_mealy_states);
            base(
                v.agree(),
                json!({"formula": inst.formula, "enumeration": v.brute_force, "synthesis": v.synthesized, "k_bound": v.k_bound}),
            )
        }
        Suite::Refinement => match refinement_case(seed) {
            Some(c) => {
                let r = oracle_refinement(&c, 8);
                let failures: Vec<String> = r.failures.iter().map(|w| format!("{} at {}: {}", w.clause, w.prefix, w.detail)).collect();
                base(r.passed(), json!({"formula": c.formula, "prefixes": r.prefixes, "failures": failures, "closed_loop": r.end_to_end}))
            }
            None => base(true, json!({"realizable": false})),
        },
        Suite::Ltl => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let aps = ApSplit::new(["r"], ["p", "q"]);
            let f = FORMULA_CORPUS[rng.gen_range(0..FORMULA_CORPUS.len())];
            let phi = parse_ltl(f, &aps).expect("corpus parses");
            let uca: Uca = ltl_to_uca(&phi);
            let prefix: Vec<usize> = (0..rng.gen_range(0..=4)).map(|_| rng.gen_range(0..8)).collect();
            let period: Vec<usize> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(0..8)).collect();
            let a = crate::automaton::uca_accepts_lasso(&uca, &prefix, &period);
            let b = oracle::eval_lasso(&phi.root, &aps, &prefix, &period);
            base(a == b, json!({"formula": f, "prefix": prefix, "period": period, "automaton": a, "direct": b}))
        }
    }
}

/// JSON lines for `count` seeds starting at `seed` on each selected suite,
/// followed by one summary line per suite.
pub fn cmd_verify(seed: u64, count: u64, suites: &[Suite]) -> (String, bool) {
    use rayon::prelude::*;
    let mut out = String::new();
    let mut all = true;
    for &suite in suites {
        let lines: Vec<serde_json::Value> = (seed..seed + count).into_par_iter().map(|s| verify_one(suite, s)).collect();
        let failed = lines.iter().filter(|v| v["pass"] != json!(true)).count();
        for l in &lines {
            out += &l.to_string();
            out.push('\n');
        }
        out += &json!({"suite": suite.name(), "summary": true, "count": count, "failed": failed}).to_string();
        out.push('\n');
        all &= failed == 0;
    }
    (out, all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_lines() {
        let (out, ok) = cmd_verify(0, 3, &[Suite::Efrr, Suite::Ltl]);
        assert!(ok);
        assert_eq!(out.lines().count(), 8);
        let first: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
        assert_eq!(first["suite"], "efrr");
    }
}
