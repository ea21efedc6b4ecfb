use std::collections::VecDeque;

use crate::{Error, Result};

/// Leaf-labelled unrooted binary tree.
///
/// Nodes `0..n` are the leaves (node `i` carries `labels[i]`); nodes
/// `n..2n-2` are internal and have exactly three neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnrootedTree {
    labels: Vec<String>,
    adj: Vec<Vec<usize>>,
}

impl UnrootedTree {
    pub const MIN_LEAVES: usize = 4;

    /// Builds a tree from an undirected edge list and validates its shape.
    pub fn from_edges(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        if n < Self::MIN_LEAVES {
            return Err(Error::TooFewLeaves { got: n, min: Self::MIN_LEAVES });
        }
        let nodes = 2 * n - 2;
        let mut adj = vec![Vec::with_capacity(3); nodes];
        for &(a, b) in edges {
            if a >= nodes || b >= nodes || a == b {
                return Err(Error::Topology(format!("bad edge ({a}, {b})")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let tree = Self { labels, adj };
        tree.validate()?;
        Ok(tree)
    }

    pub(crate) fn from_parts_unchecked(labels: Vec<String>, adj: Vec<Vec<usize>>) -> Self {
        Self { labels, adj }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if n < Self::MIN_LEAVES {
            return Err(Error::TooFewLeaves { got: n, min: Self::MIN_LEAVES });
        }
        if self.adj.len() != 2 * n - 2 {
            return Err(Error::Topology(format!("expected {} nodes, found {}", 2 * n - 2, self.adj.len())));
        }
        for (v, nb) in self.adj.iter().enumerate() {
            let want = if v < n { 1 } else { 3 };
            if nb.len() != want {
                return Err(Error::Topology(format!("node {v} has degree {}, expected {want}", nb.len())));
            }
        }
        let edges: usize = self.adj.iter().map(Vec::len).sum::<usize>() / 2;
        if edges != 2 * n - 3 || self.bfs_from(0).contains(&usize::MAX) {
            return Err(Error::Topology("tree is not connected and acyclic".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::Topology(format!("leaf `{dup}` appears twice")));
        }
        Ok(())
    }

    pub fn leaf_count(&self) -> usize {
        self.labels.len()
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    /// Each undirected edge once, as `(smaller, larger)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.adj.len());
        for (a, nb) in self.adj.iter().enumerate() {
            out.extend(nb.iter().filter(|&&b| a < b).map(|&b| (a, b)));
        }
        out
    }

    pub(crate) fn adj_mut(&mut self) -> &mut Vec<Vec<usize>> {
        &mut self.adj
    }

    /// Same topology with leaf labels permuted into `order`.
    pub fn relabel(&self, order: &[String]) -> Result<Self> {
        if order.len() != self.labels.len() {
            return Err(Error::Topology("label count mismatch".into()));
        }
        let mut adj = self.adj.clone();
        let mut perm = Vec::with_capacity(order.len());
        for l in order {
            perm.push(
                self.labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::Topology(format!("no leaf `{l}` in tree")))?,
            );
        }
        // new leaf i = old leaf perm[i]
        let mut map: Vec<usize> = (0..adj.len()).collect();
        for (new, &old) in perm.iter().enumerate() {
            map[old] = new;
        }
        let mut out = vec![Vec::new(); adj.len()];
        for (old, nb) in adj.iter_mut().enumerate() {
            out[map[old]] = nb.iter().map(|&x| map[x]).collect();
        }
        Ok(Self { labels: order.to_vec(), adj: out })
    }

    fn bfs_from(&self, start: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.adj.len()];
        let mut q = VecDeque::from([start]);
        dist[start] = 0;
        while let Some(v) = q.pop_front() {
            for &w in &self.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        dist
    }

    /// Edge-count path lengths between every pair of leaves.
    pub fn leaf_distances(&self) -> Vec<Vec<u32>> {
        let n = self.labels.len();
        (0..n).map(|i| self.bfs_from(i)[..n].iter().map(|&d| d as u32).collect()).collect()
    }

    /// Leaves on the `b` side of edge `(a, b)`.
    fn side(&self, a: usize, b: usize) -> Vec<bool> {
        let n = self.labels.len();
        let mut inside = vec![false; n];
        let mut stack = vec![(b, a)];
        while let Some((v, from)) = stack.pop() {
            if v < n {
                inside[v] = true;
            }
            stack.extend(self.adj[v].iter().filter(|&&w| w != from).map(|&w| (w, v)));
        }
        inside
    }

    /// Leaf bipartitions induced by each edge, each as a membership mask.
    pub fn splits(&self) -> Vec<Vec<bool>> {
        self.edges().into_iter().map(|(a, b)| self.side(a, b)).collect()
    }

    /// Whether some edge separates exactly `group` from the other leaves.
    pub fn has_split(&self, group: &[&str]) -> bool {
        let mask: Vec<bool> = self.labels.iter().map(|l| group.contains(&l.as_str())).collect();
        let inverse: Vec<bool> = mask.iter().map(|b| !b).collect();
        self.splits().iter().any(|s| *s == mask || *s == inverse)
    }

    /// Newick text rooted at the internal node next to leaf 0, without branch
    /// lengths.
    pub fn to_newick(&self) -> String {
        let root = self.adj[0][0];
        let mut out = String::new();
        self.write_newick(root, usize::MAX, &mut out);
        out.push(';');
        out
    }

    fn write_newick(&self, v: usize, from: usize, out: &mut String) {
        if v < self.labels.len() {
            out.push_str(&newick_label(&self.labels[v]));
            return;
        }
        out.push('(');
        let mut first = true;
        for &w in self.adj[v].iter().filter(|&&w| w != from) {
            if !first {
                out.push(',');
            }
            first = false;
            self.write_newick(w, v, out);
        }
        out.push(')');
    }
}

fn newick_label(label: &str) -> String {
    let plain = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '/' | '+' | '|' | '*' | '#' | '@'));
    if plain {
        label.to_string()
    } else {
        let mut s = String::from("'");
        for c in label.chars() {
            if c == '\'' {
                s.push('\'');
            }
            s.push(c);
        }
        s.push('\'');
        s
    }
}

/// Caterpillar-shaped tree over `labels`, mostly for tests and as a fallback.
pub fn caterpillar(labels: Vec<String>) -> Result<UnrootedTree> {
    let n = labels.len();
    if n < UnrootedTree::MIN_LEAVES {
        return Err(Error::TooFewLeaves { got: n, min: UnrootedTree::MIN_LEAVES });
    }
    let mut edges = vec![(0, n), (1, n)];
    for k in 0..n - 3 {
        edges.push((n + k, n + k + 1));
        edges.push((k + 2, n + k + 1));
    }
    edges.push((n - 1, 2 * n - 3));
    UnrootedTree::from_edges(labels, &edges)
}
