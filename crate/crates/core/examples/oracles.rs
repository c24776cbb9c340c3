//! Runs every reference oracle on a handful of seeded random instances and
//! prints one JSON line per check.
//!
//! Run with `cargo run --release --example oracles [count]`.

use abocs::pipeline::{cmd_verify, Suite};

fn main() {
    let count = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let (jsonl, ok) = cmd_verify(0, count, &Suite::ALL);
    print!("{jsonl}");
    println!("{}", if ok { "all oracles agree" } else { "disagreement found" });
}
