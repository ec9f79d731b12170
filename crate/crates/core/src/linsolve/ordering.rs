//! Fill-reducing orderings for symmetric sparse matrices.
//!
//! Small graphs use a plain minimum-degree heuristic on the explicit
//! elimination graph. Larger graphs are split by nested dissection with
//! breadth-first level-set separators, and the pieces fall back to minimum
//! degree below [`DISSECTION_LEAF`] vertices. Every tie is broken by the lower
//! original index, so the permutation depends only on the sparsity pattern.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::SparseMatrix;

/// Subgraphs at or below this size are ordered by minimum degree.
pub const DISSECTION_LEAF: usize = 96;

/// Returns `perm` where `perm[k]` is the original index eliminated at step `k`.
pub fn fill_reducing_order(pattern: &SparseMatrix) -> Vec<usize> {
    let adj = pattern_adjacency(pattern);
    let n = adj.len();
    let mut perm = Vec::with_capacity(n);
    let mut scratch = Scratch::new(n);
    let mut stack: Vec<Task> = vec![Task::Split((0..n).collect())];
    let mut next_label = 0;
    // Depth-first with separators emitted after both halves.
    while let Some(task) = stack.pop() {
        match task {
            Task::Emit(nodes) => perm.extend(nodes),
            Task::Split(nodes) => {
                if nodes.len() <= DISSECTION_LEAF {
                    perm.extend(minimum_degree_subset(&adj, &nodes, &mut scratch.label, &mut next_label));
                    continue;
                }
                match dissect(&adj, &nodes, &mut scratch, &mut next_label) {
                    Some((a, b, sep)) => {
                        stack.push(Task::Emit(sep));
                        stack.push(Task::Split(b));
                        stack.push(Task::Split(a));
                    }
                    None => perm.extend(minimum_degree_subset(&adj, &nodes, &mut scratch.label, &mut next_label)),
                }
            }
        }
    }
    perm
}

enum Task {
    Split(Vec<usize>),
    Emit(Vec<usize>),
}

fn pattern_adjacency(pattern: &SparseMatrix) -> Vec<Vec<usize>> {
    (0..pattern.rows()).map(|i| pattern.row(i).map(|(j, _)| j).filter(|&j| j != i).collect()).collect()
}

/// Per-node scratch shared by the dissection passes.
struct Scratch {
    label: Vec<usize>,
    level: Vec<usize>,
    visit: Vec<usize>,
    stamp: usize,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self { label: vec![usize::MAX; n], level: vec![0; n], visit: vec![usize::MAX; n], stamp: 0 }
    }

    /// Breadth-first search over nodes labelled `tag`; fills `level` and
    /// returns the visiting order.
    fn bfs(&mut self, adj: &[Vec<usize>], start: usize, tag: usize) -> Vec<usize> {
        self.stamp += 1;
        let stamp = self.stamp;
        self.visit[start] = stamp;
        self.level[start] = 0;
        let mut order = vec![start];
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &u in &adj[v] {
                if self.label[u] == tag && self.visit[u] != stamp {
                    self.visit[u] = stamp;
                    self.level[u] = self.level[v] + 1;
                    order.push(u);
                }
            }
        }
        order
    }
}

/// Splits `nodes` into two parts and a separator. `None` if the subgraph is
/// disconnected in a way that makes one side empty and no split helps.
fn dissect(
    adj: &[Vec<usize>],
    nodes: &[usize],
    scratch: &mut Scratch,
    next_label: &mut usize,
) -> Option<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let tag = *next_label;
    *next_label += 1;
    for &v in nodes {
        scratch.label[v] = tag;
    }
    let start = *nodes.iter().min().expect("nonempty");
    let mut order = scratch.bfs(adj, start, tag);
    if order.len() < nodes.len() {
        // Disconnected: peel off the component of `start`.
        let stamp = scratch.stamp;
        let mut comp = order;
        comp.sort_unstable();
        let rest: Vec<usize> = nodes.iter().copied().filter(|&v| scratch.visit[v] != stamp).collect();
        return Some((comp, rest, Vec::new()));
    }
    // Pseudo-peripheral start: move to the farthest node while the
    // eccentricity keeps growing.
    let mut ecc = scratch.level[*order.last().unwrap()];
    for _ in 0..8 {
        let far = order.iter().copied().filter(|&v| scratch.level[v] == ecc).min().unwrap();
        let candidate = scratch.bfs(adj, far, tag);
        let e = scratch.level[*candidate.last().unwrap()];
        order = candidate;
        if e <= ecc {
            ecc = e;
            break;
        }
        ecc = e;
    }
    if ecc < 2 {
        return None;
    }
    let (level, label) = (&scratch.level, &scratch.label);
    let mut counts = vec![0usize; ecc + 1];
    for &v in &order {
        counts[level[v]] += 1;
    }
    let half = nodes.len() / 2;
    let mut acc = 0;
    let mut mid = 1;
    for (l, &c) in counts.iter().enumerate() {
        if acc + c > half {
            mid = l;
            break;
        }
        acc += c;
    }
    let mid = mid.clamp(1, ecc - 1);
    // Level `mid` nodes without neighbors beyond it join the lower part.
    let (mut a, mut b, mut sep) = (Vec::new(), Vec::new(), Vec::new());
    for &v in nodes {
        let l = level[v];
        if l < mid {
            a.push(v);
        } else if l > mid {
            b.push(v);
        } else if adj[v].iter().any(|&u| label[u] == tag && level[u] > mid) {
            sep.push(v);
        } else {
            a.push(v);
        }
    }
    if a.is_empty() || b.is_empty() {
        return None;
    }
    Some((a, b, sep))
}

/// Minimum degree restricted to the subgraph induced by `nodes`; returns
/// original indices.
fn minimum_degree_subset(
    adj: &[Vec<usize>],
    nodes: &[usize],
    label: &mut [usize],
    next_label: &mut usize,
) -> Vec<usize> {
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    let tag = *next_label;
    *next_label += 1;
    for &v in &sorted {
        label[v] = tag;
    }
    let local: Vec<Vec<usize>> = sorted
        .iter()
        .map(|&v| {
            let mut l: Vec<usize> =
                adj[v].iter().filter(|&&u| label[u] == tag).map(|u| sorted.binary_search(u).unwrap()).collect();
            l.sort_unstable();
            l
        })
        .collect();
    minimum_degree_adj(local).into_iter().map(|i| sorted[i]).collect()
}

/// Plain minimum degree on the whole pattern.
pub fn minimum_degree(pattern: &SparseMatrix) -> Vec<usize> {
    minimum_degree_adj(pattern_adjacency(pattern))
}

fn minimum_degree_adj(mut adj: Vec<Vec<usize>>) -> Vec<usize> {
    let n = adj.len();
    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|i| Reverse((adj[i].len(), i))).collect();
    let mut perm = Vec::with_capacity(n);

    while let Some(Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || deg != adj[v].len() {
            continue;
        }
        eliminated[v] = true;
        perm.push(v);
        let clique = std::mem::take(&mut adj[v]);
        for &u in &clique {
            let merged = merge_without(&adj[u], &clique, u, v);
            adj[u] = merged;
            heap.push(Reverse((adj[u].len(), u)));
        }
    }
    perm
}

/// Sorted union of `a` and `b`, excluding `skip_a` and `skip_b`.
fn merge_without(a: &[usize], b: &[usize], skip_a: usize, skip_b: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if next != skip_a && next != skip_b {
            out.push(next);
        }
    }
    out
}
