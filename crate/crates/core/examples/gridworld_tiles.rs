//! Pickup and delivery on a planar integrator that only sees which tile it
//! is in. Synthesizes a controller, runs it on the continuous plant and
//! writes the trajectory as SVG.
//!
//! Run with `cargo run --release --example gridworld_tiles [out.svg]`.

use std::path::Path;

use abocs::pipeline::{cmd_simulate, cmd_synthesize, load_problem, SimulateFlags, SynthesizeFlags};
use abocs::refinement::BranchMode;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/gridworld_tiles.toml");
    let problem = load_problem(&path).expect("problem loads");
    let dir = tempfile::tempdir().expect("temp dir");
    let ctrl = dir.path().join("controller.txt");

    let s = cmd_synthesize(&path, SynthesizeFlags::default(), Some(&ctrl)).expect("realizable");
    println!("realizable at k={} with {} memory states", s.k, s.memory_states);

    let flags = SimulateFlags {
        steps: problem.file.simulation.steps.unwrap_or(500),
        seed: problem.file.simulation.seed.unwrap_or(0),
        mode: BranchMode::Random,
        policy: None,
        plot: true,
    };
    let out = cmd_simulate(&path, &ctrl, &flags).expect("simulation");
    let t = out.trace.expect("continuous trace");
    let mut last = "";
    let mut visits = Vec::new();
    for (i, l) in t.labels.iter().enumerate() {
        for goal in ["pickup", "dropoff"] {
            if l.iter().any(|n| n == goal) && last != goal {
                visits.push(format!("{goal}@{i}"));
                last = goal;
            }
        }
        assert!(!l.iter().any(|n| n == "obstacle" || n == "violation"), "step {i}: {l:?}");
    }
    println!("{} steps, {} goal visits: {} ...", t.labels.len(), visits.len(), visits[..visits.len().min(8)].join(" "));

    let svg = std::env::args().nth(1).unwrap_or_else(|| "gridworld_tiles.svg".into());
    std::fs::write(&svg, out.svg.expect("plot requested")).expect("write svg");
    println!("trajectory written to {svg}");
}
