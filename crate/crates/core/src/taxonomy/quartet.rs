//! Quartet-benefit scoring of a tree against a distance matrix.
//!
//! Every 4-subset `{u, v, w, x}` of leaves has three possible pairings
//! (`uv|wx`, `uw|vx`, `ux|vw`), costing `d(a,b) + d(c,d)`. A binary tree
//! induces exactly one of them. The tree's raw cost sums the induced pairings;
//! it is normalized between the sums of per-quartet minimum and maximum costs.

use serde::{Deserialize, Serialize};

use super::tree::UnrootedTree;
use crate::similarity::DistanceMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuartetScore {
    pub raw_cost: f64,
    pub min_cost: f64,
    pub max_cost: f64,
    /// `(max - raw) / (max - min)`, or 1 when every tree costs the same.
    pub normalized: f64,
}

impl QuartetScore {
    fn new(raw_cost: f64, min_cost: f64, max_cost: f64) -> Self {
        let normalized =
            if max_cost > min_cost { ((max_cost - raw_cost) / (max_cost - min_cost)).clamp(0.0, 1.0) } else { 1.0 };
        Self { raw_cost, min_cost, max_cost, normalized }
    }
}

/// Pairing costs of all quartets of an `n`-leaf matrix, precomputed once so
/// each candidate tree costs one pass over the quartets.
#[derive(Debug, Clone)]
pub struct QuartetTable {
    n: usize,
    costs: Vec<[f64; 3]>,
    min_cost: f64,
    max_cost: f64,
}

impl QuartetTable {
    pub fn new(matrix: &DistanceMatrix) -> Self {
        let n = matrix.len();
        let d = |a: usize, b: usize| matrix.get(a, b);
        let mut costs = Vec::with_capacity(choose4(n));
        let (mut lo, mut hi) = (0.0, 0.0);
        for_each_quartet(n, |[i, j, k, l]| {
            let c = [d(i, j) + d(k, l), d(i, k) + d(j, l), d(i, l) + d(j, k)];
            lo += c[0].min(c[1]).min(c[2]);
            hi += c[0].max(c[1]).max(c[2]);
            costs.push(c);
        });
        Self { n, costs, min_cost: lo, max_cost: hi }
    }

    pub fn leaf_count(&self) -> usize {
        self.n
    }

    /// Raw cost of a tree whose leaf `i` corresponds to matrix row `i`.
    pub fn raw_cost(&self, tree: &UnrootedTree) -> f64 {
        let d = tree.leaf_distances();
        let mut total = 0.0;
        let mut q = 0;
        for_each_quartet(self.n, |[i, j, k, l]| {
            let s = [d[i][j] + d[k][l], d[i][k] + d[j][l], d[i][l] + d[j][k]];
            // In a binary tree the induced pairing has the strictly shortest paths.
            let pick = if s[0] < s[1] && s[0] < s[2] {
                0
            } else if s[1] < s[2] {
                1
            } else {
                2
            };
            total += self.costs[q][pick];
            q += 1;
        });
        total
    }

    pub fn score_raw(&self, raw: f64) -> QuartetScore {
        QuartetScore::new(raw, self.min_cost, self.max_cost)
    }

    pub fn score(&self, tree: &UnrootedTree) -> QuartetScore {
        self.score_raw(self.raw_cost(tree))
    }
}

fn choose4(n: usize) -> usize {
    if n < 4 {
        0
    } else {
        n * (n - 1) * (n - 2) * (n - 3) / 24
    }
}

fn for_each_quartet(n: usize, mut f: impl FnMut([usize; 4])) {
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    f([i, j, k, l]);
                }
            }
        }
    }
}

/// Scores `tree` against `matrix`. Leaves are matched to matrix rows by label.
pub fn quartet_score(tree: &UnrootedTree, matrix: &DistanceMatrix) -> Result<QuartetScore> {
    let n = matrix.len();
    if n < UnrootedTree::MIN_LEAVES {
        return Err(Error::TooFewLeaves { got: n, min: UnrootedTree::MIN_LEAVES });
    }
    if tree.leaf_count() != n {
        return Err(Error::Topology(format!("tree has {} leaves, matrix has {n} labels", tree.leaf_count())));
    }
    let aligned = if tree.labels() == matrix.labels.as_slice() { tree.clone() } else { tree.relabel(&matrix.labels)? };
    Ok(QuartetTable::new(matrix).score(&aligned))
}
