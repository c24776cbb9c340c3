//! Exhaustive check of the product's language against blocking, path and
//! specification facts on all short lasso words.

use super::instance::RandomInstance;
use crate::automaton::Uca;
use crate::product::{build_product, semantics_record, LassoWord, ProductUca, SemanticsRecord};
use crate::system::{FiniteSystem, InputId, OutputId, PredicateMaps};

/// All lasso words with `|prefix| <= max_prefix` and `1 <= |period| <= max_period`.
pub fn enumerate_lassos(ny: usize, nu: usize, max_prefix: usize, max_period: usize) -> Vec<LassoWord> {
    let letters: Vec<(OutputId, InputId)> =
        (0..ny).flat_map(|y| (0..nu).map(move |u| (OutputId(y), InputId(u)))).collect();
    let words = |len: usize| -> Vec<Vec<(OutputId, InputId)>> {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|w| {
                    letters.iter().map(move |&l| {
                        let mut v = w.clone();
                        v.push(l);
                        v
                    })
                })
                .collect();
        }
        out
    };
    let mut all = Vec::new();
    for a in 0..=max_prefix {
        let prefixes = words(a);
        for b in 1..=max_period {
            for period in words(b) {
                for prefix in &prefixes {
                    all.push(LassoWord::new(prefix.clone(), period.clone()));
                }
            }
        }
    }
    all
}

#[derive(Clone, Debug)]
pub struct LanguageVerdict {
    pub words: usize,
    pub counterexample: Option<(LassoWord, SemanticsRecord)>,
}

impl LanguageVerdict {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// `in_lang ⇔ (¬in_iblock ∧ (¬in_epaths ∨ spec_holds))`.
pub fn biconditional(r: &SemanticsRecord) -> bool {
    r.in_lang == (!r.in_iblock && (!r.in_epaths || r.spec_holds))
}

pub fn oracle_language(inst: &RandomInstance, max_prefix: usize, max_period: usize) -> LanguageVerdict {
    let p = build_product(&inst.sys, &inst.pm, &inst.spec, Default::default()).expect("instance alphabet matches");
    oracle_language_on(&p, &inst.sys, &inst.pm, &inst.spec, max_prefix, max_period)
}

/// Same check against a given (possibly altered) product.
pub fn oracle_language_on(
    p: &ProductUca,
    sys: &FiniteSystem,
    pm: &PredicateMaps,
    spec: &Uca,
    max_prefix: usize,
    max_period: usize,
) -> LanguageVerdict {
    let words = enumerate_lassos(sys.num_outputs(), sys.num_inputs(), max_prefix, max_period);
    let n = words.len();
    let counterexample = words.into_iter().find_map(|w| {
        let r = semantics_record(p, sys, pm, spec, &w);
        (!biconditional(&r)).then_some((w, r))
    });
    LanguageVerdict { words: n, counterexample }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductMutation {
    /// The blocking state is no longer rejecting.
    BottomAccepting,
    /// Transitions into the blocking state are removed.
    DropBottomRule,
}

pub fn mutate_product(p: &ProductUca, m: ProductMutation) -> ProductUca {
    let mut out = p.clone();
    let bot = p.bottom();
    match m {
        ProductMutation::BottomAccepting => out.uca.set_rejecting(bot, false),
        ProductMutation::DropBottomRule => {
            for s in (0..p.num_states()).filter(|&s| s != bot) {
                for l in 0..p.uca.num_letters() {
                    let succ: Vec<usize> = p.uca.successors(s, l).iter().copied().filter(|&t| t != bot).collect();
                    out.uca.set_successors(s, l, succ);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::tests::s2_preds;
    use crate::system::tests::s2;

    #[test]
    fn s2_passes_and_mutants_fail() {
        let inst = RandomInstance::new(s2(), s2_preds(), "G !p").unwrap();
        let v = oracle_language(&inst, 3, 3);
        assert_eq!(v.words, 85 * 84);
        assert!(v.passed(), "{:?}", v.counterexample);
        let p = build_product(&inst.sys, &inst.pm, &inst.spec, Default::default()).unwrap();
        for m in [ProductMutation::BottomAccepting, ProductMutation::DropBottomRule] {
            let v = oracle_language_on(&mutate_product(&p, m), &inst.sys, &inst.pm, &inst.spec, 3, 3);
            assert!(!v.passed(), "{m:?}");
        }
        let t = RandomInstance::new(s2(), s2_preds(), "true").unwrap();
        assert!(oracle_language(&t, 3, 3).passed());
    }
}
