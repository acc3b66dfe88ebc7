use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::seed::StageRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means `ceil(sqrt(p))`.
    pub mtry: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { max_depth: None, min_samples_leaf: 1, mtry: None }
    }
}

impl TreeConfig {
    pub fn mtry_for(&self, p: usize) -> usize {
        self.mtry.unwrap_or_else(|| (p as f64).sqrt().ceil() as usize).clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    /// `x[feature] <= threshold` goes left.
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf { vote: bool },
}

/// Binary CART tree over Gini impurity, stored as a flat node array
/// (root at index 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

struct Split {
    feature: usize,
    threshold: f64,
    /// `n * weighted child Gini`; lower is better.
    score: f64,
}

/// `n * gini` of a two-class node, i.e. `2 * pos * neg / n`.
#[inline]
fn scaled_gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        2.0 * pos as f64 * (n - pos) as f64 / n as f64
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t >= b {
        a
    } else {
        t
    }
}

fn best_split(
    x: &Matrix,
    y: &[bool],
    samples: &[usize],
    features: &[usize],
    min_leaf: usize,
    buf: &mut Vec<(f64, bool)>,
) -> Option<Split> {
    let n = samples.len();
    let pos_total = samples.iter().filter(|&&i| y[i]).count();
    let parent = scaled_gini(pos_total, n);
    let mut best: Option<Split> = None;
    for &f in features {
        buf.clear();
        buf.extend(samples.iter().map(|&i| (x.get(i, f), y[i])));
        buf.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut pos_left = 0;
        for k in 1..n {
            pos_left += buf[k - 1].1 as usize;
            if buf[k - 1].0 == buf[k].0 || k < min_leaf || n - k < min_leaf {
                continue;
            }
            let score = scaled_gini(pos_left, k) + scaled_gini(pos_total - pos_left, n - k);
            // Strict improvement: earlier (lower feature, lower threshold) wins ties.
            if score < parent && best.as_ref().is_none_or(|b| score < b.score) {
                best = Some(Split { feature: f, threshold: midpoint(buf[k - 1].0, buf[k].0), score });
            }
        }
    }
    best
}

impl DecisionTree {
    /// Grows a tree on `samples` (row indices into `x`, repeats allowed).
    pub fn fit(x: &Matrix, y: &[bool], samples: &[usize], config: &TreeConfig, rng: &mut StageRng) -> DecisionTree {
        let p = x.n_cols();
        let mtry = config.mtry_for(p);
        let min_leaf = config.min_samples_leaf.max(1);
        let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { vote: false }];
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, samples.to_vec(), 0)];
        let mut buf = Vec::new();
        while let Some((id, rows, depth)) = stack.pop() {
            let pos = rows.iter().filter(|&&i| y[i]).count();
            // Ties vote negative.
            let leaf = TreeNode::Leaf { vote: 2 * pos > rows.len() };
            let pure = pos == 0 || pos == rows.len();
            if pure || rows.len() < 2 * min_leaf || config.max_depth.is_some_and(|d| depth >= d) {
                nodes[id] = leaf;
                continue;
            }
            let mut features = index::sample(rng, p, mtry).into_vec();
            features.sort_unstable();
            let Some(split) = best_split(x, y, &rows, &features, min_leaf, &mut buf) else {
                nodes[id] = leaf;
                continue;
            };
            let (left, right): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| x.get(i, split.feature) <= split.threshold);
            let l = nodes.len();
            nodes.push(TreeNode::Leaf { vote: false });
            nodes.push(TreeNode::Leaf { vote: false });
            nodes[id] = TreeNode::Split {
                feature: split.feature as u32,
                threshold: split.threshold,
                left: l as u32,
                right: l as u32 + 1,
            };
            stack.push((l + 1, right, depth + 1));
            stack.push((l, left, depth + 1));
        }
        DecisionTree { nodes, n_features: p, max_depth: config.max_depth, min_samples_leaf: min_leaf }
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        let mut k = 0usize;
        loop {
            match self.nodes[k] {
                TreeNode::Leaf { vote } => return vote,
                TreeNode::Split { feature, threshold, left, right } => {
                    k = if row[feature as usize] <= threshold { left as usize } else { right as usize };
                }
            }
        }
    }

    /// Index of the leaf `row` lands in.
    pub fn leaf_of(&self, row: &[f64]) -> usize {
        let mut k = 0usize;
        while let TreeNode::Split { feature, threshold, left, right } = self.nodes[k] {
            k = if row[feature as usize] <= threshold { left as usize } else { right as usize };
        }
        k
    }

    pub fn uses_feature(&self, f: usize) -> bool {
        self.nodes.iter().any(|n| matches!(n, TreeNode::Split { feature, .. } if *feature as usize == f))
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, k: usize) -> usize {
            match t.nodes[k] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(t, left as usize).max(walk(t, right as usize)),
            }
        }
        walk(self, 0)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::classifier::transform::box_cox;
    use crate::seed;

    fn fit(x: &Matrix, y: &[bool], config: TreeConfig) -> DecisionTree {
        let all: Vec<usize> = (0..y.len()).collect();
        DecisionTree::fit(x, y, &all, &config, &mut seed::rng(1))
    }

    #[test]
    fn separable_one_feature() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [10.0], [11.0], [12.0]]);
        let y = [false, false, false, true, true, true];
        let t = fit(&x, &y, TreeConfig::default());
        assert_eq!(t.nodes.len(), 3);
        assert_eq!(t.nodes[0], TreeNode::Split { feature: 0, threshold: 6.5, left: 1, right: 2 });
        for (i, &c) in y.iter().enumerate() {
            assert_eq!(t.predict(x.row(i)), c);
        }
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // Both features separate perfectly; feature 0 must be chosen.
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]);
        let t = fit(&x, &[false, true], TreeConfig { mtry: Some(2), ..Default::default() });
        assert!(matches!(t.nodes[0], TreeNode::Split { feature: 0, .. }));
    }

    #[test]
    fn tied_leaf_votes_negative() {
        let x = Matrix::from_rows(&[[1.0], [1.0]]);
        let t = fit(&x, &[true, false], TreeConfig::default());
        assert_eq!(t.nodes, vec![TreeNode::Leaf { vote: false }]);
    }

    #[test]
    fn depth_and_leaf_limits() {
        let x = Matrix::from_rows(&(0..32).map(|i| [i as f64]).collect::<Vec<_>>());
        let y: Vec<bool> = (0..32).map(|i| i % 2 == 0).collect();
        assert!(fit(&x, &y, TreeConfig { max_depth: Some(3), ..Default::default() }).depth() <= 3);
        let t = fit(&x, &y, TreeConfig { min_samples_leaf: 5, ..Default::default() });
        let mut counts = std::collections::HashMap::new();
        for i in 0..32 {
            *counts.entry(t.leaf_of(x.row(i))).or_insert(0) += 1;
        }
        assert!(counts.values().all(|&c| c >= 5));
    }

    proptest! {
        #[test]
        fn box_cox_keeps_single_feature_partitions(
            vals in prop::collection::vec(1.0f64..1e6, 4..60),
            labels in prop::collection::vec(any::<bool>(), 60),
            k in -200i32..=200,
        ) {
            let n = vals.len();
            let y = &labels[..n];
            let raw = Matrix::from_rows(&vals.iter().map(|&v| [v]).collect::<Vec<_>>());
            let lambda = k as f64 / 100.0;
            let bc = Matrix::from_rows(&vals.iter().map(|&v| [box_cox(v, lambda)]).collect::<Vec<_>>());
            prop_assume!((0..n).all(|i| (0..n).all(|j| (vals[i] < vals[j]) == (bc.get(i, 0) < bc.get(j, 0)))));
            let a = fit(&raw, y, TreeConfig::default());
            let b = fit(&bc, y, TreeConfig::default());
            prop_assert_eq!(a.nodes.len(), b.nodes.len());
            for i in 0..n {
                for j in 0..n {
                    let same_a = a.leaf_of(raw.row(i)) == a.leaf_of(raw.row(j));
                    let same_b = b.leaf_of(bc.row(i)) == b.leaf_of(bc.row(j));
                    prop_assert_eq!(same_a, same_b);
                }
            }
        }

        #[test]
        fn training_paths_never_empty(
            rows in prop::collection::vec(prop::collection::vec(0u8..6, 3), 2..50),
            labels in prop::collection::vec(any::<bool>(), 50),
        ) {
            let x = Matrix::from_rows(&rows.iter().map(|r| r.iter().map(|&v| v as f64).collect::<Vec<_>>()).collect::<Vec<_>>());
            let y = &labels[..rows.len()];
            let t = fit(&x, y, TreeConfig::default());
            let mut hit = vec![false; t.nodes.len()];
            for i in 0..rows.len() {
                hit[t.leaf_of(x.row(i))] = true;
            }
            for (k, n) in t.nodes.iter().enumerate() {
                if matches!(n, TreeNode::Leaf { .. }) {
                    prop_assert!(hit[k], "leaf {} reached by no training row", k);
                }
            }
        }
    }
}
