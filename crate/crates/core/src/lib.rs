//! Output-feedback controller synthesis for LTL specifications over
//! unobservable state predicates.
//!
//! The pipeline has three stages:
//!
//! 1. [`abstraction`] builds a finite abstract system from a sampled,
//!    disturbed control system, together with the relation triple
//!    `(alpha, beta, gamma)` linking concrete and abstract states, inputs
//!    and outputs ([`efrr`] checks that triple).
//! 2. [`ltl`] compiles the specification into a universal co-Büchi
//!    automaton, [`product`] combines it with the abstract system, and
//!    [`synthesis`] solves bounded synthesis by a k-counter safety game,
//!    yielding a [`synthesis::MealyController`].
//! 3. [`refinement`] runs the abstract controller on the concrete plant.
//!
//! [`oracle`] holds brute-force reference implementations used by the test
//! suites; they share data types but no algorithms with the main modules.

pub mod abstraction;
pub mod automaton;
pub mod efrr;
pub mod graph;
pub mod ltl;
pub mod oracle;
pub mod pipeline;
pub mod problem;
pub mod product;
pub mod refinement;
pub mod synthesis;
pub mod system;

pub use automaton::{Alphabet, Uca};
pub use system::{
    Belief, ExternalPrefix, FiniteSystem, FiniteSystemBuilder, InputId, OutputId, PredicateMaps,
    StateId, Strategy, Valuation,
};
