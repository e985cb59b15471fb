//! Depth-bounded CART regression trees on scalar inputs: greedy splits
//! minimizing child sum-of-squared-errors, leaves holding target means.
//! No pruning; min_samples_leaf is 1.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub root: TreeNode,
    pub max_depth: usize,
}

fn mean(points: &[(f64, f64)]) -> f64 {
    points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64
}

fn sse(points: &[(f64, f64)]) -> f64 {
    let m = mean(points);
    points.iter().map(|p| (p.1 - m) * (p.1 - m)).sum()
}

fn build(data: &[(f64, f64)], depth_left: usize) -> TreeNode {
    let pure = data.iter().all(|p| p.1 == data[0].1);
    if depth_left == 0 || pure {
        return TreeNode::Leaf { value: mean(data) };
    }
    // candidate thresholds: midpoints between consecutive distinct z values,
    // scanned in ascending order so equal-SSE ties keep the smaller one
    let mut best: Option<(f64, f64, usize)> = None;
    for i in 0..data.len() - 1 {
        let (a, b) = (data[i].0, data[i + 1].0);
        if a < b {
            let mut thr = (a + b) / 2.0;
            if thr >= b {
                // midpoint rounded up to b; keep b on the right of the <= rule
                thr = a;
            }
            let split = i + 1;
            let total = sse(&data[..split]) + sse(&data[split..]);
            if best.is_none_or(|(_, s, _)| total < s) {
                best = Some((thr, total, split));
            }
        }
    }
    match best {
        None => TreeNode::Leaf { value: mean(data) }, // single distinct z
        Some((threshold, _, split)) => TreeNode::Split {
            threshold,
            left: Box::new(build(&data[..split], depth_left - 1)),
            right: Box::new(build(&data[split..], depth_left - 1)),
        },
    }
}

/// Fit a regression tree of depth at most `max_depth` to `(z, target)`
/// pairs. Duplicate pairs are kept with multiplicity.
pub fn fit_regression_tree(pairs: &[(f64, f64)], max_depth: usize) -> Result<RegressionTree> {
    if pairs.is_empty() {
        return Err(Error::Invalid("cannot fit a tree on zero pairs".into()));
    }
    if pairs.iter().any(|&(z, t)| !z.is_finite() || !t.is_finite()) {
        return Err(Error::Invalid("tree inputs must be finite".into()));
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(RegressionTree {
        root: build(&sorted, max_depth),
        max_depth,
    })
}

impl RegressionTree {
    /// Route `z` to a leaf: left on `z <= threshold`, right otherwise.
    /// Performs at most `max_depth` comparisons.
    pub fn predict(&self, z: f64) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    threshold,
                    left,
                    right,
                } => {
                    node = if z <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Like `predict`, also returning the number of comparisons taken.
    pub fn predict_counting(&self, z: f64) -> (f64, usize) {
        let mut node = &self.root;
        let mut comparisons = 0;
        loop {
            match node {
                TreeNode::Leaf { value } => return (*value, comparisons),
                TreeNode::Split {
                    threshold,
                    left,
                    right,
                } => {
                    comparisons += 1;
                    node = if z <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(left).max(go(right)),
            }
        }
        go(&self.root)
    }

    pub fn n_leaves(&self) -> usize {
        fn go(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => go(left) + go(right),
            }
        }
        go(&self.root)
    }

    /// Root split threshold, if the root is not a leaf.
    pub fn root_split(&self) -> Option<f64> {
        match &self.root {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split { threshold, .. } => Some(*threshold),
        }
    }

    /// Pack into a complete tree of depth `d` for branch-free routing:
    /// `thresholds` gets `2^d - 1` slots, `values` gets `2^d`. Shallow
    /// leaves are replicated down the left spine (filler thresholds route
    /// every query left). Routing semantics stay identical to `predict`.
    pub(crate) fn fill_complete(&self, d: usize, thresholds: &mut [f64], values: &mut [f64]) {
        let n_int = (1usize << d) - 1;
        debug_assert_eq!(thresholds.len(), n_int);
        debug_assert_eq!(values.len(), 1usize << d);
        fn go(
            node: &TreeNode,
            heap_idx: usize,
            level: usize,
            d: usize,
            n_int: usize,
            thresholds: &mut [f64],
            values: &mut [f64],
        ) {
            if level == d {
                let v = match node {
                    TreeNode::Leaf { value } => *value,
                    TreeNode::Split { .. } => unreachable!("tree deeper than declared depth"),
                };
                values[heap_idx - n_int] = v;
                return;
            }
            match node {
                TreeNode::Leaf { .. } => {
                    thresholds[heap_idx] = f64::INFINITY;
                    go(
                        node,
                        2 * heap_idx + 1,
                        level + 1,
                        d,
                        n_int,
                        thresholds,
                        values,
                    );
                    go(
                        node,
                        2 * heap_idx + 2,
                        level + 1,
                        d,
                        n_int,
                        thresholds,
                        values,
                    );
                }
                TreeNode::Split {
                    threshold,
                    left,
                    right,
                } => {
                    thresholds[heap_idx] = *threshold;
                    go(
                        left,
                        2 * heap_idx + 1,
                        level + 1,
                        d,
                        n_int,
                        thresholds,
                        values,
                    );
                    go(
                        right,
                        2 * heap_idx + 2,
                        level + 1,
                        d,
                        n_int,
                        thresholds,
                        values,
                    );
                }
            }
        }
        go(&self.root, 0, 0, d, n_int, thresholds, values);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn step_data_splits_at_midpoint() {
        let pairs = [(0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (3.0, 1.0)];
        let t = fit_regression_tree(&pairs, 1).unwrap();
        assert_eq!(t.root_split(), Some(1.5));
        assert_eq!(t.predict(0.9), 0.0);
        assert_eq!(t.predict(1.6), 1.0);
        let mse: f64 = pairs.iter().map(|&(z, y)| (t.predict(z) - y).powi(2)).sum();
        assert_eq!(mse, 0.0);
    }

    #[test]
    fn tie_at_threshold_goes_left() {
        let pairs = [(0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (3.0, 1.0)];
        let t = fit_regression_tree(&pairs, 1).unwrap();
        assert_eq!(t.predict(1.5), 0.0);
    }

    #[test]
    fn constant_targets_collapse_to_single_leaf() {
        // 0.75 * 3 and its mean are exact in binary
        let pairs = [(0.0, 0.75), (1.0, 0.75), (5.0, 0.75)];
        for d in [1, 2, 4] {
            let t = fit_regression_tree(&pairs, d).unwrap();
            assert_eq!(t.root, TreeNode::Leaf { value: 0.75 });
            assert_eq!(t.predict(-100.0), 0.75);
        }
    }

    #[test]
    fn single_leaf_tree_predicts_its_value_everywhere() {
        let t = RegressionTree {
            root: TreeNode::Leaf { value: 0.7 },
            max_depth: 1,
        };
        for z in [-1e9, 0.0, 3.5, 1e9] {
            assert_eq!(t.predict(z), 0.7);
        }
    }

    #[test]
    fn equal_sse_tie_resolves_to_smaller_threshold() {
        // both candidate splits of this set have SSE 0.5
        let pairs = [(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)];
        let t = fit_regression_tree(&pairs, 1).unwrap();
        let sse_at = |split: usize| {
            let m1: f64 = pairs[..split].iter().map(|p| p.1).sum::<f64>() / split as f64;
            let m2: f64 =
                pairs[split..].iter().map(|p| p.1).sum::<f64>() / (pairs.len() - split) as f64;
            pairs[..split]
                .iter()
                .map(|p| (p.1 - m1) * (p.1 - m1))
                .sum::<f64>()
                + pairs[split..]
                    .iter()
                    .map(|p| (p.1 - m2) * (p.1 - m2))
                    .sum::<f64>()
        };
        assert_eq!(sse_at(1), sse_at(2));
        assert_eq!(t.root_split(), Some(0.5));
    }

    #[test]
    fn single_distinct_z_becomes_leaf() {
        let pairs = [(2.0, 1.0), (2.0, 3.0)];
        let t = fit_regression_tree(&pairs, 4).unwrap();
        assert_eq!(t.root, TreeNode::Leaf { value: 2.0 });
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(fit_regression_tree(&[], 1).is_err());
    }

    #[test]
    fn duplicates_keep_their_multiplicity() {
        let pairs = [(0.0, 0.0), (0.0, 0.0), (1.0, 3.0)];
        let t = fit_regression_tree(&pairs, 1).unwrap();
        // left leaf averages two identical points, not one
        assert_eq!(t.predict(0.0), 0.0);
        assert_eq!(t.predict(1.0), 3.0);
    }

    #[test]
    fn depth_is_bounded_and_comparisons_counted() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in [1usize, 2, 4] {
            let pairs: Vec<(f64, f64)> = (0..100)
                .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
                .collect();
            let t = fit_regression_tree(&pairs, d).unwrap();
            assert!(t.depth() <= d);
            for _ in 0..20 {
                let (_, comparisons) = t.predict_counting(rng.random::<f64>());
                assert!(comparisons <= d);
            }
        }
    }

    #[test]
    fn greedy_root_split_is_optimal_by_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let n = rng.random_range(2..12);
            let mut pairs: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
                .collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let t = fit_regression_tree(&pairs, 1).unwrap();
            let Some(chosen) = t.root_split() else {
                continue;
            };
            let sse_of = |pts: &[(f64, f64)]| {
                let m = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
                pts.iter().map(|p| (p.1 - m) * (p.1 - m)).sum::<f64>()
            };
            let chosen_sse = {
                let split = pairs.iter().position(|p| p.0 > chosen).unwrap();
                sse_of(&pairs[..split]) + sse_of(&pairs[split..])
            };
            for i in 0..pairs.len() - 1 {
                if pairs[i].0 < pairs[i + 1].0 {
                    let alt = sse_of(&pairs[..i + 1]) + sse_of(&pairs[i + 1..]);
                    assert!(
                        alt >= chosen_sse,
                        "candidate split {i} beats the greedy choice"
                    );
                }
            }
        }
    }

    #[test]
    fn per_leaf_residuals_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let pairs: Vec<(f64, f64)> = (0..200)
            .map(|_| (rng.random::<f64>() * 4.0, rng.random::<f64>() * 10.0))
            .collect();
        let t = fit_regression_tree(&pairs, 3).unwrap();
        use std::collections::HashMap;
        let mut residuals: HashMap<u64, f64> = HashMap::new();
        for &(z, y) in &pairs {
            let pred = t.predict(z);
            *residuals.entry(pred.to_bits()).or_insert(0.0) += y - pred;
        }
        for (_, r) in residuals {
            assert!(r.abs() < 1e-9, "leaf residual sum {r}");
        }
    }

    #[test]
    fn complete_packing_routes_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for d in [1usize, 2, 4] {
            let n = rng.random_range(1..40);
            let pairs: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
                .collect();
            let t = fit_regression_tree(&pairs, d).unwrap();
            let n_int = (1usize << d) - 1;
            let mut thr = vec![0.0; n_int];
            let mut val = vec![0.0; 1usize << d];
            t.fill_complete(d, &mut thr, &mut val);
            for _ in 0..50 {
                let z = rng.random::<f64>() * 2.0 - 0.5;
                let mut idx = 0usize;
                for _ in 0..d {
                    idx = 2 * idx + 1 + usize::from(z > thr[idx]);
                }
                assert_eq!(val[idx - n_int], t.predict(z));
            }
        }
    }
}
