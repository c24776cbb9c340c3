//! Bounded synthesis on a small finite plant whose state predicate `p` is
//! never observed directly.
//!
//! Run with `cargo run --example finite_synthesis`.

use abocs::ltl::{ltl_to_uca, parse_ltl, ApSplit};
use abocs::oracle::model_check_mealy;
use abocs::synthesis::{synthesize, SynthesisOptions};
use abocs::system::text::parse_system;

const PLANT: &str = include_str!("s2.sys");

fn main() {
    let (sys, pm) = parse_system(PLANT).expect("valid plant");
    let aps = ApSplit::new(pm.input_aps().to_vec(), pm.output_aps().to_vec());

    for formula in ["G !p", "F p", "G F p"] {
        let spec = ltl_to_uca(&parse_ltl(formula, &aps).expect("valid formula"));
        match synthesize(&sys, &pm, &spec, SynthesisOptions::default()) {
            Ok(s) => {
                let checked = model_check_mealy(&sys, &pm, &spec, &s.controller).holds();
                println!("{formula}: realizable at k={}, model check {}", s.k, if checked { "passes" } else { "FAILS" });
                print!("{}", s.controller.to_text());
            }
            Err(e) => println!("{formula}: {e}"),
        }
    }
}
