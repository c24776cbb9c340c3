//! Checks relation triples between finite systems: the identity, a
//! coarsened abstraction, and a broken relation.
//!
//! Run with `cargo run --example relation_check`.

use abocs::efrr::{check_sound_abstraction, check_sound_realization, EfrrRelation};
use abocs::oracle::thickened_pair;
use abocs::system::text::parse_system;
use abocs::system::StateId;

const SEED: u64 = 0;

fn main() {
    let (sys, _) = parse_system(include_str!("s2.sys")).expect("valid plant");
    let id = EfrrRelation::identity(&sys);
    println!("identity realization passes: {}", check_sound_realization(&sys, &sys, &id).passed());

    // Extra abstract transitions and outputs: sound one way, not the other.
    let (conc, abs, q) = thickened_pair(SEED);
    let fwd = check_sound_abstraction(&conc, &abs, &q);
    let both = check_sound_realization(&conc, &abs, &q);
    println!(
        "thickened pair: {} concrete / {} abstract states, abstraction passes: {}, realization passes: {}",
        conc.num_states(),
        abs.num_states(),
        fwd.passed(),
        both.passed()
    );

    // An initial state related to nothing violates the first clause.
    let mut broken = id.clone();
    broken.alpha[StateId(0).index()].clear();
    print!("{}", check_sound_abstraction(&sys, &sys, &broken).to_jsonl("forward"));
}
