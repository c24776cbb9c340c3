//! Reach-avoid on a planar integrator observed through noise as wide as a
//! cell, so each cell may report any neighbouring cell.
//!
//! Run with `cargo run --release --example gridworld_noisy`.

use std::path::Path;

use abocs::pipeline::{abstraction_of, cmd_simulate, cmd_synthesize, load_problem, Abstraction, SimulateFlags, SynthesizeFlags};
use abocs::refinement::BranchMode;
use abocs::system::StateId;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/gridworld_noisy.toml");
    let problem = load_problem(&path).expect("problem loads");
    let Abstraction::Gridded(ga) = abstraction_of(&problem, None).expect("abstraction") else { unreachable!() };
    let centre = ga.grid.num_cells() / 2 + ga.grid.counts()[0] / 2;
    let seen: Vec<&str> = ga.system.outputs_of(StateId(centre)).iter().map(|&y| ga.system.output_name(y)).collect();
    println!("cell {} may report {} outputs: {}", ga.system.state_name(StateId(centre)), seen.len(), seen.join(" "));

    let dir = tempfile::tempdir().expect("temp dir");
    let ctrl = dir.path().join("controller.txt");
    let s = cmd_synthesize(&path, SynthesizeFlags::default(), Some(&ctrl)).expect("realizable");
    println!("realizable at k={} with {} memory states", s.k, s.memory_states);

    for seed in 0..5 {
        let flags = SimulateFlags { steps: 60, seed, mode: BranchMode::Random, policy: None, plot: false };
        let t = cmd_simulate(&path, &ctrl, &flags).expect("simulation").trace.expect("continuous trace");
        let reached = t.labels.iter().position(|l| l.iter().any(|n| n == "target"));
        let hit = t.labels.iter().any(|l| l.iter().any(|n| n == "obstacle" || n == "violation"));
        println!("seed {seed}: start {:.2?}, target reached at step {reached:?}, obstacle hit: {hit}", t.xs[0]);
    }
}
