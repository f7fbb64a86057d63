use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::math;
use crate::models::{Node, RfModel, Tree};
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RfParams {
    pub n_trees: usize,
    /// Maximum number of splits on any root-to-leaf path; `None` grows until pure.
    pub max_depth: Option<usize>,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
        }
    }
}

/// Bagged CART forest: every tree sees a bootstrap sample and picks the best
/// Gini split among ⌈√f⌉ random features at each node.
pub fn train_rf(
    rows: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    params: &RfParams,
    seed: u64,
) -> Result<RfModel> {
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("a forest needs at least one tree".into()));
    }
    if rows.is_empty() || rows.len() != labels.len() {
        return Err(Error::InvalidDataset("forest training needs labelled rows".into()));
    }
    let f = rows[0].len();
    let n = rows.len();
    let trees = (0..params.n_trees)
        .map(|t| {
            let mut rng = rng::stream(seed, t as u64);
            let mut sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut b = Builder {
                rows,
                labels,
                n_classes,
                max_depth: params.max_depth,
                n_candidates: (math::ceil(math::sqrt(f as f64)) as usize).clamp(1, f.max(1)),
                features: (0..f).collect(),
                rng,
                nodes: Vec::new(),
            };
            b.grow(&mut sample, 0);
            Tree::new(b.nodes, f, n_classes)
        })
        .collect::<Result<Vec<_>>>()?;
    RfModel::new(trees, f, n_classes)
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [usize],
    n_classes: usize,
    max_depth: Option<usize>,
    n_candidates: usize,
    features: Vec<usize>,
    rng: Rng,
    nodes: Vec<Node>,
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    /// Append the subtree for `idx` in preorder and return its root index.
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let at = self.nodes.len();
        let counts = self.counts(idx);
        let majority = majority(&counts);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || self.max_depth.is_some_and(|d| depth >= d) {
            self.nodes.push(Node::Leaf { class: majority });
            return at;
        }
        let Some(split) = self.best_split(idx, &counts) else {
            self.nodes.push(Node::Leaf { class: majority });
            return at;
        };
        self.nodes.push(Node::Leaf { class: majority });
        let mut cut = 0;
        for k in 0..idx.len() {
            if self.rows[idx[k]][split.feature] <= split.threshold {
                idx.swap(k, cut);
                cut += 1;
            }
        }
        let (l, r) = idx.split_at_mut(cut);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }

    fn counts(&self, idx: &[usize]) -> Vec<u64> {
        let mut c = vec![0u64; self.n_classes];
        for &k in idx {
            c[self.labels[k]] += 1;
        }
        c
    }

    /// Best split over a fresh random feature subset, or `None` if no
    /// candidate strictly lowers the weighted Gini impurity.
    ///
    /// Minimizing `Σ_side n_side · gini_side` is the same as maximizing
    /// `Σ_side Σ_c n_{side,c}² / n_side`, which updates exactly in integers.
    fn best_split(&mut self, idx: &[usize], counts: &[u64]) -> Option<Split> {
        let n = idx.len() as u64;
        let parent = counts.iter().map(|c| c * c).sum::<u64>() as f64 / n as f64;
        let mut best: Option<Split> = None;
        for c in 0..self.n_candidates {
            let pick = self.rng.random_range(c..self.features.len());
            self.features.swap(c, pick);
            let feature = self.features[c];
            let mut order: Vec<(f64, usize)> = idx
                .iter()
                .map(|&k| (self.rows[k][feature], self.labels[k]))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0u64; self.n_classes];
            let mut right = counts.to_vec();
            let (mut sq_l, mut sq_r) = (0u64, counts.iter().map(|c| c * c).sum::<u64>());
            for p in 1..order.len() {
                let class = order[p - 1].1;
                sq_l += 2 * left[class] + 1;
                left[class] += 1;
                sq_r -= 2 * right[class] - 1;
                right[class] -= 1;
                let (a, b) = (order[p - 1].0, order[p].0);
                if a == b {
                    continue;
                }
                let nl = p as u64;
                let score = sq_l as f64 / nl as f64 + sq_r as f64 / (n - nl) as f64;
                if score > parent && best.as_ref().map_or(true, |s| score > s.score) {
                    best = Some(Split {
                        feature,
                        threshold: midpoint(a, b),
                        score,
                    });
                }
            }
        }
        best
    }
}

/// A threshold `t` with `a <= t < b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t < b {
        t
    } else {
        a
    }
}

fn majority(counts: &[u64]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}
