use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        class: usize,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Flat node table; node 0 is the root and children always follow their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn new(nodes: Vec<Node>, n_features: usize, n_classes: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Integrity("empty tree".into()));
        }
        for (k, node) in nodes.iter().enumerate() {
            match *node {
                Node::Leaf { class } if class >= n_classes => {
                    return Err(Error::Integrity(format!("node {k}: leaf class {class} ≥ {n_classes}")));
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= n_features {
                        return Err(Error::Integrity(format!(
                            "node {k}: feature {feature} ≥ {n_features}"
                        )));
                    }
                    if threshold.is_nan() {
                        return Err(Error::Integrity(format!("node {k}: NaN threshold")));
                    }
                    for child in [left, right] {
                        if child <= k || child >= nodes.len() {
                            return Err(Error::Integrity(format!(
                                "node {k}: child index {child} invalid"
                            )));
                        }
                    }
                }
                Node::Leaf { .. } => {}
            }
        }
        Ok(Self { nodes })
    }

    pub fn leaf(class: usize) -> Self {
        Self {
            nodes: vec![Node::Leaf { class }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let mut at = 0;
        // Children always have larger indices, so this visits at most len nodes.
        for _ in 0..self.nodes.len() {
            match self.nodes.get(at) {
                Some(Node::Leaf { class }) => return Ok(*class),
                Some(&Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                }) => {
                    let v = x.get(feature).ok_or(Error::DimensionMismatch {
                        expected: feature + 1,
                        got: x.len(),
                    })?;
                    at = if *v <= threshold { left } else { right };
                }
                None => break,
            }
        }
        Err(Error::Integrity(format!("traversal left the node table at {at}")))
    }

    /// Comparisons on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut max = 0;
        for (k, node) in self.nodes.iter().enumerate() {
            if let Node::Split { left, right, .. } = *node {
                depth[left] = depth[k] + 1;
                depth[right] = depth[k] + 1;
                max = max.max(depth[k] + 1);
            }
        }
        max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfModel {
    trees: Vec<Tree>,
    n_features: usize,
    n_classes: usize,
}

impl RfModel {
    pub fn new(trees: Vec<Tree>, n_features: usize, n_classes: usize) -> Result<Self> {
        if trees.is_empty() || n_classes == 0 {
            return Err(Error::Integrity("forest needs ≥ 1 tree and ≥ 1 class".into()));
        }
        let trees = trees
            .into_iter()
            .map(|t| Tree::new(t.nodes, n_features, n_classes))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            trees,
            n_features,
            n_classes,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn node_count(&self) -> usize {
        self.trees.iter().map(|t| t.nodes.len()).sum()
    }

    /// Majority vote over trees; the lowest class wins ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)?] += 1;
        }
        let mut best = 0;
        for c in 1..self.n_classes {
            if votes[c] > votes[best] {
                best = c;
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(threshold: f64) -> Tree {
        Tree::new(
            vec![
                Node::Split {
                    feature: 0,
                    threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { class: 0 },
                Node::Leaf { class: 1 },
            ],
            1,
            2,
        )
        .unwrap()
    }

    #[test]
    fn leaf_forest_votes_unanimously() {
        let rf = RfModel::new(vec![Tree::leaf(2); 5], 3, 4).unwrap();
        assert_eq!(rf.predict(&[0.0, 0.0, 0.0]).unwrap(), 2);
        assert_eq!(rf.trees()[0].depth(), 0);
    }

    #[test]
    fn boundary_goes_left() {
        let t = stump(0.5);
        assert_eq!(t.predict(&[0.5]).unwrap(), 0);
        assert_eq!(t.predict(&[0.5000001]).unwrap(), 1);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn tie_goes_to_lowest_class() {
        let rf = RfModel::new(vec![Tree::leaf(1), Tree::leaf(0)], 1, 2).unwrap();
        assert_eq!(rf.predict(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn corrupt_indices_are_rejected() {
        let bad = vec![
            Node::Split {
                feature: 0,
                threshold: 0.0,
                left: 1,
                right: 7,
            },
            Node::Leaf { class: 0 },
        ];
        assert!(matches!(Tree::new(bad, 1, 1), Err(Error::Integrity(_))));
        let cycle = vec![
            Node::Split {
                feature: 0,
                threshold: 0.0,
                left: 0,
                right: 1,
            },
            Node::Leaf { class: 0 },
        ];
        assert!(matches!(Tree::new(cycle, 1, 1), Err(Error::Integrity(_))));
        assert!(Tree::new(vec![Node::Leaf { class: 3 }], 1, 2).is_err());
        assert!(Tree::new(
            vec![
                Node::Split { feature: 4, threshold: 0.0, left: 1, right: 2 },
                Node::Leaf { class: 0 },
                Node::Leaf { class: 0 }
            ],
            2,
            1
        )
        .is_err());
    }
}
