//! Brute-force reference checks for small instances.
//!
//! Nothing here calls the product, game, graph or checker code of the rest
//! of the crate; only the data types are shared. All procedures are
//! exponential and guarded by [`CAPS`].

pub mod efrr_ref;
pub mod instance;
pub mod refinement_check;
pub mod ltl_eval;
pub mod model_check;
pub mod language;

pub use efrr_ref::{reference_clauses, thickened_pair};
pub use instance::{quotient_pair, InstanceSize, QuotientPair, RandomInstance, SPEC_FAMILY};
pub use refinement_check::{
    check_refinement_clauses, gamma_mutation, refinement_case, oracle_refinement, refined_mealy, RefinementCase, RefinementClause, RefinementReport,
    RefinementWitness,
};
pub use ltl_eval::{eval_lasso, FORMULA_CORPUS};
pub use model_check::{brute_force_realizable, model_check_mealy, oracle_completeness, ClosedLoopVerdict, CompletenessVerdict};
pub use language::{biconditional, enumerate_lassos, mutate_product, oracle_language, oracle_language_on, ProductMutation, LanguageVerdict};

/// Size limits shared by every oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeCaps {
    pub max_states: usize,
    pub max_prefix: usize,
    pub max_period: usize,
    pub max_mealy_states: usize,
}

pub const CAPS: SizeCaps = SizeCaps { max_states: 5, max_prefix: 3, max_period: 3, max_mealy_states: 3 };
