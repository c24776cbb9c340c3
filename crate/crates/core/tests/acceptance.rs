//! Acceptance criteria. Prints one line per criterion and exits nonzero if any fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use abocs::automaton::uca_accepts_lasso;
use abocs::abstraction::build_abstraction;
use abocs::efrr::{check_sampled, check_sampled_with_tau, check_sound_abstraction, Clause};
use abocs::ltl::{ltl_to_uca, parse_ltl, ApSplit};
use abocs::oracle::{
    check_refinement_clauses, gamma_mutation, refinement_case, model_check_mealy, mutate_product, oracle_refinement, oracle_language,
    oracle_language_on, oracle_completeness, reference_clauses, thickened_pair, eval_lasso, InstanceSize,
    RefinementClause, ProductMutation, RandomInstance, CAPS, FORMULA_CORPUS,
};
use abocs::pipeline::{
    abstraction_of, cmd_simulate, cmd_synthesize, load_problem, Abstraction, SimulateFlags, SynthesizeFlags,
};
use abocs::problem::Plant;
use abocs::product::build_product;
use abocs::refinement::{BranchMode, ContinuousTrace, Policy};
use abocs::synthesis::{synthesize, SynthesisOptions};
use abocs::system::closed_loop_prefixes;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn efrr_suite() -> Outcome {
    let mut disagreements = 0;
    let mut failing = 0;
    for seed in 0..200 {
        let (c, a, q) = thickened_pair(seed);
        let reference = reference_clauses(&c, &a, &q);
        let got: BTreeSet<Clause> = check_sound_abstraction(&c, &a, &q).violations.iter().map(|v| v.clause).collect();
        if got != reference {
            disagreements += 1;
        }
        if !reference.is_empty() {
            failing += 1;
        }
    }
    outcome(disagreements == 0, format!("200 pairs, {failing} failing some clause, {disagreements} disagreements"))
}

fn language_suite() -> Outcome {
    let results: Vec<(usize, bool, bool, bool)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let inst = RandomInstance::random(seed, InstanceSize::SMALL);
            let v = oracle_language(&inst, CAPS.max_prefix, CAPS.max_period);
            let p = build_product(&inst.sys, &inst.pm, &inst.spec, Default::default()).unwrap();
            let mutant = |m| {
                !oracle_language_on(&mutate_product(&p, m), &inst.sys, &inst.pm, &inst.spec, CAPS.max_prefix, CAPS.max_period)
                    .passed()
            };
            (v.words, v.passed(), mutant(ProductMutation::BottomAccepting), mutant(ProductMutation::DropBottomRule))
        })
        .collect();
    let words: usize = results.iter().map(|r| r.0).sum();
    let bad = results.iter().filter(|r| !r.1).count();
    let m1 = results.iter().filter(|r| r.2).count();
    let m2 = results.iter().filter(|r| r.3).count();
    outcome(
        bad == 0 && m1 > 0 && m2 > 0,
        format!("{words} words, {bad} counterexamples; mutants caught on {m1} / {m2} instances"),
    )
}

fn soundness_suite() -> Outcome {
    let results: Vec<Option<bool>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let inst = RandomInstance::random(1000 + seed, InstanceSize::SMALL);
            let syn = synthesize(&inst.sys, &inst.pm, &inst.spec, SynthesisOptions::default()).ok()?;
            let composable = closed_loop_prefixes(&inst.sys, &syn.controller, 12).is_ok();
            Some(composable && model_check_mealy(&inst.sys, &inst.pm, &inst.spec, &syn.controller).holds())
        })
        .collect();
    let realizable = results.iter().flatten().count();
    let failures = results.iter().flatten().filter(|ok| !**ok).count();
    outcome(failures == 0, format!("{realizable}/100 realizable, {failures} controllers failing"))
}

fn completeness_suite() -> Outcome {
    let verdicts: Vec<_> = (0..30u64)
        .into_par_iter()
        .map(|seed| oracle_completeness(&RandomInstance::random(2000 + seed, InstanceSize::TINY), CAPS.max_mealy_states))
        .collect();
    let agree = verdicts.iter().filter(|v| v.agree()).count();
    let realizable = verdicts.iter().filter(|v| v.brute_force).count();
    outcome(agree == 30, format!("{agree}/30 agree, {realizable} realizable"))
}

fn refinement_suite() -> Outcome {
    let mut cases = Vec::new();
    let mut seed = 0;
    while cases.len() < 50 && seed < 2000 {
        if let Some(c) = refinement_case(seed) {
            cases.push(c);
        }
        seed += 1;
    }
    let reports: Vec<_> = cases.par_iter().map(|c| oracle_refinement(c, 8)).collect();
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let prefixes: usize = reports.iter().map(|r| r.prefixes).sum();
    let mutated = cases
        .iter()
        .find_map(|c| {
            let p = &c.pair;
            let bad = gamma_mutation(&p.conc, &p.abs, &p.rel)?;
            Some(!check_refinement_clauses(&p.conc, &p.abs, &bad, &c.mealy, Policy::LowestId, Policy::LowestId, 8).holds(RefinementClause::B))
        })
        .unwrap_or(false);
    outcome(
        cases.len() == 50 && failed == 0 && mutated,
        format!("{} pairs, {prefixes} prefixes, {failed} failing; mutated gamma breaks (b): {mutated}", cases.len()),
    )
}

fn ltl_suite() -> Outcome {
    let aps = ApSplit::new(["r"], ["p", "q"]);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut disagreements = 0;
    let mut pairs = 0;
    for f in FORMULA_CORPUS {
        let phi = parse_ltl(f, &aps).unwrap();
        let uca = ltl_to_uca(&phi);
        for _ in 0..20 {
            let letters = 1 << 3;
            let prefix: Vec<usize> = (0..rng.gen_range(0..=4)).map(|_| rng.gen_range(0..letters)).collect();
            let period: Vec<usize> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(0..letters)).collect();
            pairs += 1;
            if uca_accepts_lasso(&uca, &prefix, &period) != eval_lasso(&phi.root, &aps, &prefix, &period) {
                disagreements += 1;
            }
        }
    }
    outcome(disagreements == 0, format!("{pairs} pairs, {disagreements} disagreements"))
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

const SAMPLES_PER_PAIR: usize = 10_000;

fn sampling_suite() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for name in ["linear_1d.toml", "linear_2d.toml"] {
        let problem = load_problem(&example(name)).expect("example loads");
        let Plant::Continuous(c) = &problem.plant else { panic!("{name} is continuous") };
        let ga = build_abstraction(&c.cs, &c.grid, &c.regions, Default::default()).expect("abstraction");
        let pairs = ga.grid.num_cells() * c.cs.inputs.len();
        let sound = check_sampled(&c.cs, &ga, SAMPLES_PER_PAIR * pairs, 1);
        let mut half = c.grid.clone();
        half.tau /= 2.0;
        let short = build_abstraction(&c.cs, &half, &c.regions, Default::default()).expect("abstraction");
        let control = check_sampled_with_tau(&c.cs, &short, c.grid.tau, 100 * pairs, 1);
        pass &= sound.violations == 0 && control.violations > 0;
        details.push(format!(
            "{name}: {} samples, {} violations; half-tau control {} violations",
            sound.samples, sound.violations, control.violations
        ));
    }
    outcome(pass, details.join("; "))
}

/// Synthesizes a continuous example and simulates it with its `[simulation]` settings.
fn synthesize_and_simulate(name: &str) -> Result<(usize, ContinuousTrace), String> {
    let path = example(name);
    let problem = load_problem(&path).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ctrl = dir.path().join("controller.txt");
    let s = cmd_synthesize(&path, SynthesizeFlags::default(), Some(&ctrl)).map_err(|e| e.to_string())?;
    let sim = &problem.file.simulation;
    let flags = SimulateFlags {
        steps: sim.steps.unwrap_or(100),
        seed: sim.seed.unwrap_or(0),
        mode: BranchMode::Random,
        policy: None,
        plot: false,
    };
    let out = cmd_simulate(&path, &ctrl, &flags).map_err(|e| e.to_string())?;
    Ok((s.k, out.trace.expect("continuous trace")))
}

fn bad_steps(t: &ContinuousTrace, avoid: &str) -> usize {
    t.labels.iter().filter(|l| l.iter().any(|n| n == avoid || n == "violation")).count()
}

fn tiles_scenario() -> Outcome {
    let (k, t) = match synthesize_and_simulate("gridworld_tiles.toml") {
        Ok(r) => r,
        Err(e) => return outcome(false, e),
    };
    let mut visits: Vec<&str> = Vec::new();
    for l in &t.labels {
        for goal in ["pickup", "dropoff"] {
            if l.iter().any(|n| n == goal) && visits.last() != Some(&goal) {
                visits.push(goal);
            }
        }
    }
    let bad = bad_steps(&t, "obstacle");
    outcome(
        visits.len() >= 4 && bad == 0,
        format!("k={k}, {} steps, {} pickup/dropoff alternations, {bad} obstacle/violation steps", t.labels.len(), visits.len() - 1),
    )
}

fn noisy_scenario() -> Outcome {
    let path = example("gridworld_noisy.toml");
    let problem = load_problem(&path).expect("example loads");
    let Ok(Abstraction::Gridded(ga)) = abstraction_of(&problem, None) else {
        return outcome(false, "not a gridded abstraction");
    };
    let widest = (0..ga.grid.num_cells())
        .map(|c| ga.system.outputs_of(abocs::system::StateId(c)).len())
        .max()
        .unwrap_or(0);
    let (k, t) = match synthesize_and_simulate("gridworld_noisy.toml") {
        Ok(r) => r,
        Err(e) => return outcome(false, e),
    };
    let reached = t.labels.iter().position(|l| l.iter().any(|n| n == "target"));
    let bad = bad_steps(&t, "obstacle");
    outcome(
        widest > 1 && reached.is_some() && bad == 0,
        format!("max |H(x)| = {widest}, k={k}, target reached at step {reached:?}, {bad} obstacle/violation steps"),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("1 relation axioms vs reference", Duration::from_secs(10), efrr_suite),
        ("2 language/blocking biconditional", Duration::from_secs(120), language_suite),
        ("3 synthesized controllers sound", Duration::from_secs(300), soundness_suite),
        ("4 realizability matches enumeration", Duration::from_secs(600), completeness_suite),
        ("5 refinement clauses (a)-(d)", Duration::from_secs(300), refinement_suite),
        ("6 sampled abstraction soundness", Duration::from_secs(60), sampling_suite),
        ("7 tile-output gridworld", Duration::from_secs(600), tiles_scenario),
        ("8 noisy-output gridworld", Duration::from_secs(600), noisy_scenario),
        ("9 automaton vs direct LTL evaluation", Duration::from_secs(30), ltl_suite),
    ];
    let mut all = true;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let pass = o.pass && took <= budget;
        all &= pass;
        println!(
            "[{}] {name}: {} ({:.2}s, budget {}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
