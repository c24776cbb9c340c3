//! Translates LTL formulas to universal co-Büchi automata and prints them
//! in HOA format.
//!
//! Run with `cargo run --example ltl_to_hoa -- "G (r -> F g)"`.

use abocs::automaton::uca_accepts_lasso;
use abocs::ltl::{ltl_to_uca, parse_ltl, ApSplit};

fn main() {
    let formula = std::env::args().nth(1).unwrap_or_else(|| "G (r -> F g)".to_string());
    // `r` is read from the plant, `g` is set by the controller.
    let aps = ApSplit::new(["g"], ["r"]);
    let phi = match parse_ltl(&formula, &aps) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let uca = ltl_to_uca(&phi);
    print!("{}", abocs::automaton::hoa::hoa_export(&uca));

    // Letters index valuations with inputs in the low bits: 0 = {}, 1 = {g}, 2 = {r}, 3 = {r, g}.
    for (name, prefix, period) in [
        ("(r g)^w", vec![], vec![3]),
        ("r (.)^w", vec![2], vec![0]),
        ("(r, g)^w", vec![], vec![2, 1]),
    ] {
        println!("{name}: {}", if uca_accepts_lasso(&uca, &prefix, &period) { "accepted" } else { "rejected" });
    }
}
