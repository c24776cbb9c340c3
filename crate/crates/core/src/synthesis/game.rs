//! k-counter determinization of a product automaton into a safety game.
//!
//! Environment nodes are counter functions: for every product state some
//! run may currently occupy, the largest number of rejecting visits along
//! such a run. The environment picks an output consistent with the
//! occupied states, the system answers with an input, and the counters
//! advance. A node is unsafe once a counter exceeds `k`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::product::ProductUca;
use crate::system::{InputId, OutputId};

/// Sorted `(product state, counter)` pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CounterFunction(pub Box<[(u32, u16)]>);

impl CounterFunction {
    pub fn entries(&self) -> &[(u32, u16)] {
        &self.0
    }

    pub fn get(&self, p: usize) -> Option<u16> {
        self.0
            .binary_search_by_key(&(p as u32), |e| e.0)
            .ok()
            .map(|i| self.0[i].1)
    }

    /// Pointwise order: every state of `self` is present in `other` with a
    /// counter at least as large.
    pub fn le(&self, other: &CounterFunction) -> bool {
        self.0.iter().all(|&(p, c)| other.get(p as usize).is_some_and(|d| c <= d))
    }
}

/// Successor of a system move.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Node(u32),
    Unsafe,
}

/// A system node: environment node `env` after observing `output`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystemNode {
    pub env: u32,
    pub output: OutputId,
}

#[derive(Clone, Debug)]
pub struct SafetyGame {
    pub k: usize,
    pub num_inputs: usize,
    /// Environment nodes; index 0 is the initial node unless it is unsafe.
    pub env_nodes: Vec<CounterFunction>,
    /// The initial move (the initial counter function may already be unsafe).
    pub initial: Move,
    /// For each environment node, the range of its system nodes.
    pub env_range: Vec<std::ops::Range<u32>>,
    pub sys_nodes: Vec<SystemNode>,
    /// `moves[s * num_inputs + u]`.
    pub moves: Vec<Move>,
    /// Whether some counter reached exactly `k` or a move was unsafe.
    pub saturated: bool,
}

impl SafetyGame {
    pub fn moves_of(&self, s: usize) -> &[Move] {
        &self.moves[s * self.num_inputs..(s + 1) * self.num_inputs]
    }

    pub fn sys_nodes_of(&self, e: usize) -> impl Iterator<Item = usize> {
        let r = self.env_range[e].clone();
        (r.start as usize)..(r.end as usize)
    }

    pub fn num_env_nodes(&self) -> usize {
        self.env_nodes.len()
    }
}

pub(crate) enum Step {
    Node(CounterFunction),
    Unsafe,
}

pub(crate) fn step(
    p: &ProductUca,
    cf: &CounterFunction,
    y: OutputId,
    u: InputId,
    k: usize,
    scratch: &mut Vec<i32>,
    touched: &mut Vec<u32>,
) -> Step {
    for &(s, c) in cf.entries() {
        for &t in p.successors(s as usize, y, u) {
            let v = c as i32 + i32::from(p.is_rejecting(t));
            if v > k as i32 {
                for &t in touched.iter() {
                    scratch[t as usize] = -1;
                }
                touched.clear();
                return Step::Unsafe;
            }
            let slot = &mut scratch[t];
            if *slot < 0 {
                touched.push(t as u32);
            }
            if v > *slot {
                *slot = v;
            }
        }
    }
    touched.sort_unstable();
    let entries: Box<[(u32, u16)]> =
        touched.iter().map(|&t| (t, scratch[t as usize] as u16)).collect();
    for &t in touched.iter() {
        scratch[t as usize] = -1;
    }
    touched.clear();
    Step::Node(CounterFunction(entries))
}

/// Outputs the environment may pick at a counter function.
pub(crate) fn consistent_outputs(p: &ProductUca, cf: &CounterFunction) -> Vec<OutputId> {
    (0..p.num_outputs())
        .map(OutputId)
        .filter(|&y| {
            cf.entries().iter().any(|&(s, _)| {
                (0..p.num_inputs()).any(|u| !p.successors(s as usize, y, InputId(u)).is_empty())
            })
        })
        .collect()
}

/// Explores the safety game reachable from the initial counter function.
pub fn kcounter_game(p: &ProductUca, k: usize) -> SafetyGame {
    let nu = p.num_inputs();
    let mut init: Vec<(u32, u16)> = p
        .uca
        .initial()
        .iter()
        .map(|&s| (s as u32, u16::from(p.is_rejecting(s))))
        .collect();
    init.sort_unstable();
    let init = CounterFunction(init.into_boxed_slice());
    let mut g = SafetyGame {
        k,
        num_inputs: nu,
        env_nodes: Vec::new(),
        initial: Move::Unsafe,
        env_range: Vec::new(),
        sys_nodes: Vec::new(),
        moves: Vec::new(),
        saturated: false,
    };
    if init.entries().iter().any(|&(_, c)| c as usize > k) {
        g.saturated = true;
        return g;
    }
    let mut index: HashMap<CounterFunction, u32> = HashMap::new();
    index.insert(init.clone(), 0);
    g.env_nodes.push(init);
    g.initial = Move::Node(0);

    let n = p.num_states();
    let mut frontier: Vec<u32> = vec![0];
    while !frontier.is_empty() {
        let expanded: Vec<Vec<(OutputId, Vec<Step>)>> = frontier
            .par_iter()
            .map_init(
                || (vec![-1i32; n], Vec::new()),
                |(scratch, touched), &e| {
                    let cf = &g.env_nodes[e as usize];
                    consistent_outputs(p, cf)
                        .into_iter()
                        .map(|y| {
                            let steps = (0..nu)
                                .map(|u| step(p, cf, y, InputId(u), k, scratch, touched))
                                .collect();
                            (y, steps)
                        })
                        .collect()
                },
            )
            .collect();
        let mut next = Vec::new();
        // Environment nodes are numbered in BFS order, so ranges are
        // contiguous as long as frontier nodes are appended in order.
        for (&e, outs) in frontier.iter().zip(expanded) {
            debug_assert_eq!(e as usize, g.env_range.len());
            let start = g.sys_nodes.len() as u32;
            for (y, steps) in outs {
                g.sys_nodes.push(SystemNode { env: e, output: y });
                for s in steps {
                    let mv = match s {
                        Step::Unsafe => {
                            g.saturated = true;
                            Move::Unsafe
                        }
                        Step::Node(cf) => {
                            if cf.entries().iter().any(|&(_, c)| c as usize == k) {
                                g.saturated = true;
                            }
                            let id = match index.get(&cf) {
                                Some(&id) => id,
                                None => {
                                    let id = g.env_nodes.len() as u32;
                                    index.insert(cf.clone(), id);
                                    g.env_nodes.push(cf);
                                    next.push(id);
                                    id
                                }
                            };
                            Move::Node(id)
                        }
                    };
                    g.moves.push(mv);
                }
            }
            g.env_range.push(start..g.sys_nodes.len() as u32);
        }
        frontier = next;
    }
    g
}

/// Result of solving a safety game.
#[derive(Clone, Debug)]
pub struct Solution {
    pub winning: bool,
    /// Per environment node: whether the system wins from it.
    pub env_winning: Vec<bool>,
    /// Per system node: inputs keeping the play among winning nodes.
    pub permissive: Vec<Vec<InputId>>,
}

/// Environment attractor to the unsafe moves (least fixpoint).
pub fn solve_safety(g: &SafetyGame) -> Solution {
    let ne = g.num_env_nodes();
    let ns = g.sys_nodes.len();
    let nu = g.num_inputs;
    let mut losing = vec![false; ne];
    // Remaining non-losing moves per system node.
    let mut alive = vec![0u32; ns];
    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); ne];
    let mut queue: Vec<u32> = Vec::new();
    for s in 0..ns {
        for mv in g.moves_of(s) {
            match *mv {
                Move::Unsafe => {}
                Move::Node(t) => {
                    alive[s] += 1;
                    preds[t as usize].push(s as u32);
                }
            }
        }
        if alive[s] == 0 {
            let e = g.sys_nodes[s].env as usize;
            if !losing[e] {
                losing[e] = true;
                queue.push(e as u32);
            }
        }
    }
    while let Some(t) = queue.pop() {
        for &s in &preds[t as usize] {
            let s = s as usize;
            alive[s] -= 1;
            if alive[s] == 0 {
                let e = g.sys_nodes[s].env as usize;
                if !losing[e] {
                    losing[e] = true;
                    queue.push(e as u32);
                }
            }
        }
    }
    let permissive = (0..ns)
        .map(|s| {
            (0..nu)
                .filter(|&u| matches!(g.moves[s * nu + u], Move::Node(t) if !losing[t as usize]))
                .map(InputId)
                .collect()
        })
        .collect();
    let winning = matches!(g.initial, Move::Node(0)) && !losing[0];
    Solution { winning, env_winning: losing.iter().map(|l| !l).collect(), permissive }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::tests::{g_not_p_spec, s2_preds};
    use crate::product::{build_product, ProductOptions};
    use crate::system::tests::s2;

    #[test]
    fn s2_k0_permits_only_b() {
        let p = build_product(&s2(), &s2_preds(), &g_not_p_spec(), ProductOptions::default()).unwrap();
        let g = kcounter_game(&p, 0);
        assert!(g.num_env_nodes() <= 12);
        let sol = solve_safety(&g);
        assert!(sol.winning);
        let first = g.sys_nodes_of(0).next().unwrap();
        assert_eq!(g.sys_nodes[first].output, OutputId(0));
        assert_eq!(sol.permissive[first], vec![InputId(1)]);
    }

    #[test]
    fn monotone_counters() {
        let p = build_product(&s2(), &s2_preds(), &g_not_p_spec(), ProductOptions::default()).unwrap();
        for k in 0..3 {
            let g = kcounter_game(&p, k);
            let sol = solve_safety(&g);
            for a in 0..g.num_env_nodes() {
                for b in 0..g.num_env_nodes() {
                    if g.env_nodes[a].le(&g.env_nodes[b]) && sol.env_winning[b] {
                        assert!(sol.env_winning[a]);
                    }
                }
            }
        }
    }
}
