//! Builds the grid abstraction of a linear plant and falsification-tests it
//! by simulation, once as built and once against a plant run for twice the
//! sampling time the abstraction assumed.
//!
//! Run with `cargo run --release --example sampled_abstraction [problem.toml]`.

use std::path::PathBuf;

use abocs::abstraction::build_abstraction;
use abocs::efrr::{check_sampled, check_sampled_with_tau};
use abocs::pipeline::load_problem;
use abocs::problem::Plant;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/linear_1d.toml"));
    let problem = load_problem(&path).expect("problem loads");
    let Plant::Continuous(c) = &problem.plant else {
        eprintln!("{} is not a continuous problem", path.display());
        std::process::exit(1);
    };
    let ga = build_abstraction(&c.cs, &c.grid, &c.regions, Default::default()).expect("abstraction");
    let pairs = ga.grid.num_cells() * c.cs.inputs.len();
    println!("{} cells, {} inputs", ga.grid.num_cells(), c.cs.inputs.len());

    let r = check_sampled(&c.cs, &ga, 1000 * pairs, 0);
    println!("as built: {} samples, {} violations", r.samples, r.violations);

    let mut half = c.grid.clone();
    half.tau /= 2.0;
    let short = build_abstraction(&c.cs, &half, &c.regions, Default::default()).expect("abstraction");
    let r = check_sampled_with_tau(&c.cs, &short, c.grid.tau, 1000 * pairs, 0);
    println!("built for tau/2, run for tau: {} samples, {} violations", r.samples, r.violations);
    if let Some(w) = r.witnesses.first() {
        println!("  e.g. x = {:?} in cell {} under input {} ends at {:?}", w.x, w.cell, w.input, w.value);
    }
}
