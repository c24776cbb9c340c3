//! On-the-fly solving of the k-counter game with antichain pruning.
//!
//! Only nodes reachable under the current candidate strategy are expanded.
//! A successor that is pointwise dominated by a non-losing node already in
//! the strategy is redirected to it, and a node dominating a proven-losing
//! node is losing. Both rules follow from counter monotonicity, so the
//! verdict equals that of the full game; only the controller may differ.
//! Domination is only tested between nodes with the same set of product
//! states.

use std::collections::HashMap;

use super::game::{consistent_outputs, step, CounterFunction, Step};
use crate::product::ProductUca;
use crate::system::{InputId, OutputId};

/// Controller steps are `(memory, output, input, next memory)` with memory
/// 0 initial.
#[derive(Clone, Debug)]
pub struct PrunedSolution {
    pub winning: bool,
    pub saturated: bool,
    pub explored: usize,
    pub memory: usize,
    pub steps: Vec<(usize, OutputId, InputId, usize)>,
}

type Expansion = Vec<(OutputId, Vec<Option<u32>>)>;

struct Arena<'a> {
    p: &'a ProductUca,
    k: usize,
    nodes: Vec<CounterFunction>,
    index: HashMap<CounterFunction, u32>,
    by_support: HashMap<Box<[u32]>, Vec<u32>>,
    losing: Vec<bool>,
    expansion: Vec<Option<Expansion>>,
    saturated: bool,
    scratch: Vec<i32>,
    touched: Vec<u32>,
}

fn support(cf: &CounterFunction) -> Box<[u32]> {
    cf.entries().iter().map(|e| e.0).collect()
}

impl Arena<'_> {
    fn intern(&mut self, cf: CounterFunction) -> u32 {
        if let Some(&id) = self.index.get(&cf) {
            return id;
        }
        let id = self.nodes.len() as u32;
        let peers = self.by_support.entry(support(&cf)).or_default();
        let losing = peers.iter().any(|&l| self.losing[l as usize] && self.nodes[l as usize].le(&cf));
        peers.push(id);
        self.index.insert(cf.clone(), id);
        self.nodes.push(cf);
        self.losing.push(losing);
        self.expansion.push(None);
        id
    }

    fn expand(&mut self, e: u32) {
        if self.expansion[e as usize].is_some() {
            return;
        }
        let cf = self.nodes[e as usize].clone();
        let nu = self.p.num_inputs();
        let mut out = Vec::new();
        for y in consistent_outputs(self.p, &cf) {
            let mut moves = Vec::with_capacity(nu);
            for u in 0..nu {
                match step(self.p, &cf, y, InputId(u), self.k, &mut self.scratch, &mut self.touched) {
                    Step::Unsafe => {
                        self.saturated = true;
                        moves.push(None);
                    }
                    Step::Node(next) => {
                        if next.entries().iter().any(|&(_, c)| c as usize == self.k) {
                            self.saturated = true;
                        }
                        moves.push(Some(self.intern(next)));
                    }
                }
            }
            out.push((y, moves));
        }
        self.expansion[e as usize] = Some(out);
    }

    /// The node to continue with instead of `t`, if any: `t` itself, or an
    /// expanded non-losing node of the same support dominating it.
    fn resolve(&mut self, t: u32) -> Option<u32> {
        let tu = t as usize;
        if self.losing[tu] {
            return None;
        }
        let peers = &self.by_support[&support(&self.nodes[tu])];
        if peers.iter().any(|&l| self.losing[l as usize] && self.nodes[l as usize].le(&self.nodes[tu])) {
            self.losing[tu] = true;
            return None;
        }
        if self.expansion[tu].is_some() {
            return Some(t);
        }
        let cover = peers.iter().copied().filter(|&a| {
            let a = a as usize;
            !self.losing[a] && self.expansion[a].is_some() && self.nodes[tu].le(&self.nodes[a])
        });
        Some(cover.min().unwrap_or(t))
    }
}

/// Per node and consistent output: current input and the node played to.
type Choices = Vec<Vec<(usize, u32)>>;

struct Search<'a> {
    a: Arena<'a>,
    choice: Choices,
    deps: Vec<Vec<(u32, u32)>>,
    to_expand: Vec<u32>,
    newly_losing: Vec<u32>,
}

impl Search<'_> {
    fn grow(&mut self) {
        let n = self.a.nodes.len();
        if self.deps.len() < n {
            self.deps.resize(n, Vec::new());
            self.choice.resize(n, Vec::new());
        }
    }

    fn mark_losing(&mut self, e: u32) {
        self.a.losing[e as usize] = true;
        self.newly_losing.push(e);
    }

    /// Picks the first input from `from` on whose successor is not known
    /// to lose; marks `e` losing if there is none.
    fn choose(&mut self, e: u32, yi: usize, from: usize) -> bool {
        let moves = self.a.expansion[e as usize].as_ref().expect("expanded")[yi].1.clone();
        for (u, m) in moves.iter().enumerate().skip(from) {
            let Some(raw) = *m else { continue };
            if let Some(t) = self.a.resolve(raw) {
                self.grow();
                self.choice[e as usize][yi] = (u, t);
                self.deps[t as usize].push((e, yi as u32));
                if self.a.expansion[t as usize].is_none() {
                    self.to_expand.push(t);
                }
                return true;
            } else if self.a.losing[raw as usize] {
                // Found losing by subsumption; its dependants are re-examined too.
                self.newly_losing.push(raw);
            }
        }
        self.mark_losing(e);
        false
    }

    fn expand(&mut self, e: u32) {
        self.a.expand(e);
        self.grow();
        let outputs = self.a.expansion[e as usize].as_ref().expect("expanded").len();
        self.choice[e as usize] = vec![(usize::MAX, u32::MAX); outputs];
        for yi in 0..outputs {
            if !self.choose(e, yi, 0) {
                return;
            }
        }
    }
}

pub fn solve_pruned(p: &ProductUca, k: usize) -> PrunedSolution {
    let mut init: Vec<(u32, u16)> =
        p.uca.initial().iter().map(|&s| (s as u32, u16::from(p.is_rejecting(s)))).collect();
    init.sort_unstable();
    let init = CounterFunction(init.into_boxed_slice());
    let lose = |saturated, explored| PrunedSolution { winning: false, saturated, explored, memory: 0, steps: Vec::new() };
    if init.entries().iter().any(|&(_, c)| c as usize > k) {
        return lose(true, 0);
    }
    let arena = Arena {
        p,
        k,
        nodes: Vec::new(),
        index: HashMap::new(),
        by_support: HashMap::new(),
        losing: Vec::new(),
        expansion: Vec::new(),
        saturated: false,
        scratch: vec![-1; p.num_states()],
        touched: Vec::new(),
    };
    let mut s = Search { a: arena, choice: Vec::new(), deps: Vec::new(), to_expand: Vec::new(), newly_losing: Vec::new() };
    let root = s.a.intern(init);
    s.to_expand.push(root);
    loop {
        if s.a.losing[root as usize] {
            return lose(s.a.saturated, s.a.nodes.len());
        }
        if let Some(t) = s.newly_losing.pop() {
            s.grow();
            for (e, yi) in std::mem::take(&mut s.deps[t as usize]) {
                let (u, target) = s.choice[e as usize][yi as usize];
                if s.a.losing[e as usize] || target != t {
                    continue;
                }
                // Retry the same input first: its successor may resolve elsewhere.
                s.choose(e, yi as usize, u);
            }
        } else if let Some(e) = s.to_expand.pop() {
            if !s.a.losing[e as usize] && s.a.expansion[e as usize].is_none() {
                s.expand(e);
            }
        } else {
            break;
        }
    }
    // Number the nodes reachable along the choices.
    let mut memory: HashMap<u32, usize> = HashMap::from([(root, 0)]);
    let mut order = vec![root];
    let mut steps = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let e = order[i];
        let outputs: Vec<OutputId> =
            s.a.expansion[e as usize].as_ref().expect("expanded").iter().map(|(y, _)| *y).collect();
        for (yi, y) in outputs.into_iter().enumerate() {
            let (u, t) = s.choice[e as usize][yi];
            let next = *memory.entry(t).or_insert_with(|| {
                order.push(t);
                order.len() - 1
            });
            steps.push((i, y, InputId(u), next));
        }
        i += 1;
    }
    PrunedSolution { winning: true, saturated: s.a.saturated, explored: s.a.nodes.len(), memory: order.len(), steps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{model_check_mealy, InstanceSize, RandomInstance};
    use crate::product::{build_product, ProductOptions};
    use crate::synthesis::{kcounter_game, solve_safety, synthesize, SynthesisOptions};

    #[test]
    fn same_verdict_as_full_game() {
        for seed in 0..60 {
            let inst = RandomInstance::random(seed, InstanceSize::SMALL);
            let p = build_product(&inst.sys, &inst.pm, &inst.spec, ProductOptions::default()).unwrap();
            for k in 0..4 {
                let full = solve_safety(&kcounter_game(&p, k)).winning;
                let pruned = solve_pruned(&p, k);
                assert_eq!(full, pruned.winning, "seed {seed} k {k}");
            }
        }
    }

    #[test]
    fn pruned_controllers_pass_model_check() {
        let mut realizable = 0;
        for seed in 0..80 {
            let inst = RandomInstance::random(500 + seed, InstanceSize::SMALL);
            let opts = SynthesisOptions { antichain: true, ..Default::default() };
            if let Ok(s) = synthesize(&inst.sys, &inst.pm, &inst.spec, opts) {
                realizable += 1;
                assert!(model_check_mealy(&inst.sys, &inst.pm, &inst.spec, &s.controller).holds(), "seed {seed}");
            }
        }
        assert!(realizable > 5);
    }
}
