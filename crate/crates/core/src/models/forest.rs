use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    /// Fraction of class 1 among the training rows that reached the leaf.
    Leaf { value: f64 },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A CART classification tree stored as a flat node list; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Candidate features per split; `None` means all.
    pub max_features: Option<usize>,
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

/// Impurity differences below this are ties; float rounding must not decide
/// between splits that are equally good.
const TIE: f64 = 1e-12;

/// Best split of `rows` on `feature`: weighted Gini of the children and the
/// midpoint threshold. Ties keep the lowest threshold.
pub fn best_threshold(x: &[Vec<f64>], y: &[f64], rows: &[usize], feature: usize) -> Option<(f64, f64)> {
    let mut sorted: Vec<(f64, f64)> = rows.iter().map(|&r| (x[r][feature], y[r])).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len() as f64;
    let total_pos: f64 = sorted.iter().map(|s| s.1).sum();
    let mut left_pos = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..sorted.len() - 1 {
        left_pos += sorted[i].1;
        if sorted[i].0 == sorted[i + 1].0 {
            continue;
        }
        let nl = (i + 1) as f64;
        let nr = n - nl;
        let impurity = (nl * gini(left_pos, nl) + nr * gini(total_pos - left_pos, nr)) / n;
        let threshold = sorted[i].0 + (sorted[i + 1].0 - sorted[i].0) / 2.0;
        if best.is_none_or(|(b, _)| impurity < b - TIE) {
            best = Some((impurity, threshold));
        }
    }
    best
}

impl Tree {
    /// Grows a tree on `rows` (which may repeat, as in a bootstrap sample).
    /// A node becomes a leaf when it is pure, has reached `max_depth`, or no
    /// candidate feature takes two distinct values in it.
    pub fn grow(
        x: &[Vec<f64>],
        y: &[f64],
        rows: &[usize],
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> Tree {
        let mut tree = Tree { nodes: Vec::new() };
        tree.grow_node(x, y, rows.to_vec(), 0, params, rng);
        tree
    }

    fn grow_node(
        &mut self,
        x: &[Vec<f64>],
        y: &[f64],
        rows: Vec<usize>,
        depth: usize,
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let id = self.nodes.len();
        let pos: f64 = rows.iter().map(|&r| y[r]).sum();
        let value = pos / rows.len() as f64;
        self.nodes.push(Node::Leaf { value });
        let pure = pos == 0.0 || pos == rows.len() as f64;
        if pure || params.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let d = x[rows[0]].len();
        let k = params.max_features.unwrap_or(d).clamp(1, d);
        let mut candidates: Vec<usize> = sample(rng, d, k).into_vec();
        candidates.sort_unstable();
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in &candidates {
            if let Some((impurity, threshold)) = best_threshold(x, y, &rows, f) {
                if best.is_none_or(|(b, _, _)| impurity < b - TIE) {
                    best = Some((impurity, f, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| x[r][feature] <= threshold);
        let left = self.grow_node(x, y, left_rows, depth + 1, params, rng);
        let right = self.grow_node(x, y, right_rows, depth + 1, params, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    /// Candidate features per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            max_features: None,
            bootstrap: true,
        }
    }
}

/// Rows drawn with replacement for tree `tree` of a forest seeded with `seed`.
/// Tree growth continues on the same random stream.
pub fn bootstrap_sample(n: usize, seed: u64, tree: usize) -> (Vec<usize>, ChaCha8Rng) {
    let mut rng = rng::derived(seed, tree as u64);
    let rows = (0..n).map(|_| rng.random_range(0..n)).collect();
    (rows, rng)
}

/// Trains a forest; trees are grown in parallel, each on its own derived
/// random stream, so the result does not depend on scheduling.
pub fn fit_forest(
    x: &[Vec<f64>],
    y: &[f64],
    params: &ForestParams,
    seed: u64,
) -> Result<Vec<Tree>, ModelError> {
    if params.n_trees < 1 {
        return Err(ModelError::Parameter("n_trees must be at least 1".into()));
    }
    if params.max_features == Some(0) {
        return Err(ModelError::Parameter("max_features must be at least 1".into()));
    }
    let n = x.len();
    let d = x.first().map_or(0, Vec::len);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        max_features: Some(
            params
                .max_features
                .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize),
        ),
    };
    Ok((0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let (rows, mut rng) = if params.bootstrap {
                bootstrap_sample(n, seed, t)
            } else {
                ((0..n).collect(), rng::derived(seed, t as u64))
            };
            Tree::grow(x, y, &rows, &tree_params, &mut rng)
        })
        .collect())
}

pub fn forest_predict(trees: &[Tree], x: &[f64]) -> f64 {
    trees.iter().map(|t| t.predict(x)).sum::<f64>() / trees.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_node_is_a_leaf() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let y = [1.0, 1.0, 1.0];
        let tree = Tree::grow(&x, &y, &[0, 1, 2], &TreeParams { max_depth: None, max_features: None }, &mut rng::seeded(0));
        assert_eq!(tree.nodes, [Node::Leaf { value: 1.0 }]);
    }

    #[test]
    fn separable_threshold() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i >= 6 { 1.0 } else { 0.0 }).collect();
        let rows: Vec<usize> = (0..10).collect();
        let tree = Tree::grow(&x, &y, &rows, &TreeParams { max_depth: Some(1), max_features: None }, &mut rng::seeded(0));
        match &tree.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 5.5),
            other => panic!("expected a split, got {other:?}"),
        }
        assert_eq!(tree.predict(&[7.0]), 1.0);
        assert_eq!(tree.predict(&[2.0]), 0.0);
    }

    #[test]
    fn constant_feature_cannot_split() {
        let x = vec![vec![1.0], vec![1.0]];
        let y = [0.0, 1.0];
        let tree = Tree::grow(&x, &y, &[0, 1], &TreeParams { max_depth: None, max_features: None }, &mut rng::seeded(0));
        assert_eq!(tree.nodes, [Node::Leaf { value: 0.5 }]);
    }

    #[test]
    fn forest_is_deterministic() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64, i as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 7 % 13) > 6) as u8 as f64).collect();
        let p = ForestParams { n_trees: 8, ..Default::default() };
        assert_eq!(fit_forest(&x, &y, &p, 4).unwrap(), fit_forest(&x, &y, &p, 4).unwrap());
        assert!(fit_forest(&x, &y, &ForestParams { n_trees: 0, ..p }, 4).is_err());
    }
}
