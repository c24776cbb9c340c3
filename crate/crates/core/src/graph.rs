//! Small explicit-graph utilities over dense node indices.

/// Nodes reachable from `roots` (inclusive).
pub fn reachable(adj: &[Vec<usize>], roots: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack: Vec<usize> = Vec::new();
    for r in roots {
        if !seen[r] {
            seen[r] = true;
            stack.push(r);
        }
    }
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

pub fn reverse(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut rev = vec![Vec::new(); adj.len()];
    for (v, succ) in adj.iter().enumerate() {
        for &w in succ {
            rev[w].push(v);
        }
    }
    rev
}

/// Strongly connected components (iterative Tarjan), in reverse topological order.
pub fn sccs(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSET: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSET; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSET {
            continue;
        }
        call.push((root, 0));
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i == 0 {
                index[v] = next;
                low[v] = next;
                next += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = adj[v].get(*i) {
                *i += 1;
                if index[w] == UNSET {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                out.push(comp);
            }
        }
    }
    out
}

/// Nodes lying on some cycle (non-trivial SCC or self-loop).
pub fn on_cycle(adj: &[Vec<usize>]) -> Vec<bool> {
    let mut cyc = vec![false; adj.len()];
    for comp in sccs(adj) {
        if comp.len() > 1 || adj[comp[0]].contains(&comp[0]) {
            for v in comp {
                cyc[v] = true;
            }
        }
    }
    cyc
}

/// Whether some cycle reachable from `roots` passes through a marked node.
pub fn reachable_marked_cycle(
    adj: &[Vec<usize>],
    roots: impl IntoIterator<Item = usize>,
    marked: impl Fn(usize) -> bool,
) -> bool {
    let seen = reachable(adj, roots);
    let restricted: Vec<Vec<usize>> = adj
        .iter()
        .enumerate()
        .map(|(v, s)| if seen[v] { s.clone() } else { Vec::new() })
        .collect();
    on_cycle(&restricted)
        .iter()
        .enumerate()
        .any(|(v, &c)| c && seen[v] && marked(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scc_shapes() {
        let adj = vec![vec![1], vec![2], vec![0, 3], vec![3], vec![]];
        let mut comps: Vec<Vec<usize>> = sccs(&adj)
            .into_iter()
            .map(|mut c| {
                c.sort();
                c
            })
            .collect();
        comps.sort();
        assert_eq!(comps, vec![vec![0, 1, 2], vec![3], vec![4]]);
        assert_eq!(on_cycle(&adj), vec![true, true, true, true, false]);
        assert!(reachable_marked_cycle(&adj, [0], |v| v == 3));
        assert!(!reachable_marked_cycle(&adj, [3], |v| v == 0));
        assert!(!reachable_marked_cycle(&adj, [4], |_| true));
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let n = 200_000;
        let adj: Vec<Vec<usize>> = (0..n).map(|i| vec![(i + 1) % n]).collect();
        assert_eq!(sccs(&adj).len(), 1);
    }
}
