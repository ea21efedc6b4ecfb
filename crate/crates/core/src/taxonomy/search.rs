//! Tree search: a neighbor-joining start followed by randomized hill-climbing
//! over leaf swaps and subtree regrafts, restarted from perturbed copies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::quartet::{QuartetScore, QuartetTable};
use super::tree::UnrootedTree;
use crate::similarity::DistanceMatrix;
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 0x005E_ED0F_7EE5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchParams {
    pub restarts: usize,
    /// A restart stops after this many consecutive non-improving mutations.
    pub mutation_cap: usize,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self { restarts: 50, mutation_cap: 10_000, seed: DEFAULT_SEED }
    }
}

/// Neighbor-joining topology for `matrix` (branch lengths are discarded).
/// The diagonal is ignored.
pub fn neighbor_joining(matrix: &DistanceMatrix) -> Result<UnrootedTree> {
    let n = matrix.len();
    if n < UnrootedTree::MIN_LEAVES {
        return Err(Error::TooFewLeaves { got: n, min: UnrootedTree::MIN_LEAVES });
    }
    let total = 2 * n - 2;
    let mut d = vec![vec![0.0f64; total]; total];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[i][j] = matrix.get(i, j);
            }
        }
    }
    let mut adj = vec![Vec::with_capacity(3); total];
    let mut active: Vec<usize> = (0..n).collect();
    let mut next = n;

    while active.len() > 3 {
        let m = active.len() as f64;
        let r: Vec<f64> = active.iter().map(|&i| active.iter().map(|&k| d[i][k]).sum()).collect();
        let mut best = (f64::INFINITY, 0, 1);
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                let q = (m - 2.0) * d[active[a]][active[b]] - r[a] - r[b];
                if q < best.0 {
                    best = (q, a, b);
                }
            }
        }
        let (_, a, b) = best;
        let (i, j) = (active[a], active[b]);
        let u = next;
        next += 1;
        adj[u].extend([i, j]);
        adj[i].push(u);
        adj[j].push(u);
        for &k in &active {
            if k != i && k != j {
                let v = (d[i][k] + d[j][k] - d[i][j]) / 2.0;
                d[u][k] = v;
                d[k][u] = v;
            }
        }
        active.remove(b);
        active.remove(a);
        active.push(u);
    }
    let u = next;
    for &k in &active {
        adj[u].push(k);
        adj[k].push(u);
    }
    let tree = UnrootedTree::from_parts_unchecked(matrix.labels.clone(), adj);
    debug_assert!(tree.validate().is_ok());
    Ok(tree)
}

fn replace(list: &mut [usize], from: usize, to: usize) {
    if let Some(x) = list.iter_mut().find(|x| **x == from) {
        *x = to;
    }
}

fn swap_leaves(tree: &mut UnrootedTree, rng: &mut ChaCha8Rng) {
    let n = tree.leaf_count();
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let adj = tree.adj_mut();
    let (p, q) = (adj[i][0], adj[j][0]);
    if p == q {
        return;
    }
    replace(&mut adj[p], i, j);
    replace(&mut adj[q], j, i);
    adj[i][0] = q;
    adj[j][0] = p;
}

/// Subtree prune and regraft.
fn regraft(tree: &mut UnrootedTree, rng: &mut ChaCha8Rng) {
    let n = tree.leaf_count();
    let total = tree.node_count();
    let u = rng.random_range(n..total);
    let adj = tree.adj_mut();
    let v = adj[u][rng.random_range(0..3)];
    let others: Vec<usize> = adj[u].iter().copied().filter(|&x| x != v).collect();
    let (a, b) = (others[0], others[1]);

    replace(&mut adj[a], u, b);
    replace(&mut adj[b], u, a);
    adj[u] = vec![v];

    let mut pruned = vec![false; total];
    let mut stack = vec![u];
    pruned[u] = true;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !pruned[y] {
                pruned[y] = true;
                stack.push(y);
            }
        }
    }
    let mut targets = Vec::new();
    for (x, nb) in adj.iter().enumerate() {
        if pruned[x] {
            continue;
        }
        for &y in nb {
            if x < y && !pruned[y] && !((x, y) == (a, b) || (x, y) == (b, a)) {
                targets.push((x, y));
            }
        }
    }
    let (c, d) = if targets.is_empty() { (a, b) } else { targets[rng.random_range(0..targets.len())] };
    replace(&mut adj[c], d, u);
    replace(&mut adj[d], c, u);
    adj[u] = vec![v, c, d];
}

fn mutate(tree: &mut UnrootedTree, rng: &mut ChaCha8Rng) {
    if rng.random_bool(0.5) {
        swap_leaves(tree, rng);
    } else {
        regraft(tree, rng);
    }
}

fn climb(start: &UnrootedTree, table: &QuartetTable, params: &SearchParams, restart: usize) -> (UnrootedTree, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(restart as u64);
    let mut tree = start.clone();
    if restart > 0 {
        for _ in 0..2 * tree.leaf_count() {
            mutate(&mut tree, &mut rng);
        }
    }
    let mut cost = table.raw_cost(&tree);
    let mut best = (tree.clone(), cost);
    let mut stale = 0;
    while stale < params.mutation_cap {
        let mut cand = tree.clone();
        mutate(&mut cand, &mut rng);
        let c = table.raw_cost(&cand);
        if c < cost {
            stale = 0;
        } else {
            stale += 1;
        }
        if c <= cost {
            // equal-cost moves are taken to drift across plateaus
            tree = cand;
            cost = c;
            if cost < best.1 {
                best = (tree.clone(), cost);
            }
        }
    }
    best
}

/// Fits an unrooted tree to `matrix` by maximizing the normalized quartet
/// score. Deterministic for a given seed, whatever the thread count.
pub fn fit_tree(matrix: &DistanceMatrix, params: &SearchParams) -> Result<(UnrootedTree, QuartetScore)> {
    let n = matrix.len();
    if n < UnrootedTree::MIN_LEAVES {
        return Err(Error::TooFewLeaves { got: n, min: UnrootedTree::MIN_LEAVES });
    }
    let table = QuartetTable::new(matrix);
    let start = neighbor_joining(matrix)?;
    let restarts = params.restarts.max(1);
    let results = run_restarts(restarts, |r| climb(&start, &table, params, r));
    let (tree, cost) =
        results.into_iter().reduce(|best, cur| if cur.1 < best.1 { cur } else { best }).expect("at least one restart");
    Ok((tree, table.score_raw(cost)))
}

#[cfg(feature = "parallel")]
fn run_restarts<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_restarts<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    (0..count).map(f).collect()
}
