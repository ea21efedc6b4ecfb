//! Equal-angle drawing of an unrooted tree: every subtree gets a wedge of the
//! circle proportional to its leaf count, and unit-length edges bisect it.

use ncdkit::UnrootedTree;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    /// Leaf label; `None` for internal nodes.
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layout {
    pub nodes: Vec<Point>,
    pub edges: Vec<(usize, usize)>,
}

fn leaf_counts(tree: &UnrootedTree, node: usize, parent: usize, out: &mut [usize]) -> usize {
    let n = tree.leaf_count();
    let mut count = usize::from(node < n);
    for &next in tree.neighbors(node) {
        if next != parent {
            count += leaf_counts(tree, next, node, out);
        }
    }
    out[node] = count;
    count
}

/// Coordinates normalized to the unit square `[0, 1] x [0, 1]`.
pub fn equal_angle(tree: &UnrootedTree) -> Layout {
    let n = tree.leaf_count();
    let total = tree.node_count();
    let root = n; // first internal node
    let mut below = vec![0; total];
    leaf_counts(tree, root, usize::MAX, &mut below);

    let mut pos = vec![(0.0f64, 0.0f64); total];
    // (node, parent, wedge start, wedge size)
    let mut stack = vec![(root, usize::MAX, 0.0f64, std::f64::consts::TAU)];
    while let Some((node, parent, start, size)) = stack.pop() {
        let mut angle = start;
        for &child in tree.neighbors(node) {
            if child == parent {
                continue;
            }
            let wedge = size * below[child] as f64 / below[node].max(1) as f64;
            let mid = angle + wedge / 2.0;
            pos[child] = (pos[node].0 + mid.cos(), pos[node].1 + mid.sin());
            stack.push((child, node, angle, wedge));
            angle += wedge;
        }
    }

    let (min_x, max_x) = pos.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let (min_y, max_y) = pos.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let span = (max_x - min_x).max(max_y - min_y).max(f64::EPSILON);
    let nodes = pos
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| Point {
            x: (x - min_x) / span,
            y: (y - min_y) / span,
            label: (i < n).then(|| tree.labels()[i].clone()),
        })
        .collect();
    Layout { nodes, edges: tree.edges() }
}
