use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Brute-force k-nearest-neighbour classifier over squared Euclidean distance.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl KnnModel {
    pub fn new(k: usize, rows: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if k == 0 || rows.len() < k {
            return Err(Error::InvalidParameter(alloc::format!(
                "k = {k} needs 1 ≤ k ≤ n = {}",
                rows.len()
            )));
        }
        if labels.len() != rows.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        let f = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != f) {
            return Err(Error::DimensionMismatch {
                expected: f,
                got: bad.len(),
            });
        }
        if let Some(&c) = labels.iter().find(|&&c| c >= n_classes) {
            return Err(Error::Integrity(alloc::format!(
                "label {c} outside class table of {n_classes}"
            )));
        }
        Ok(Self {
            k,
            rows,
            labels,
            n_classes,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.rows[0].len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Majority vote among the k nearest rows. Distance ties go to the lower
    /// row index; vote ties to the smaller summed distance, then the lower class.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(idx, r)| (squared_distance(r, x), idx))
            .collect();
        let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_key);
            dist.truncate(self.k);
        }

        let mut votes = vec![0usize; self.n_classes];
        let mut summed = vec![0.0f64; self.n_classes];
        for &(d, idx) in &dist {
            let c = self.labels[idx];
            votes[c] += 1;
            summed[c] += d;
        }
        let mut best = 0;
        for c in 1..self.n_classes {
            if votes[c] > votes[best] || (votes[c] == votes[best] && summed[c] < summed[best]) {
                best = c;
            }
        }
        Ok(best)
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_match_with_k1() {
        let m = KnnModel::new(1, vec![vec![0.0, 0.0], vec![5.0, 5.0]], vec![1, 0], 2).unwrap();
        assert_eq!(m.predict(&[5.0, 5.0]).unwrap(), 0);
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap(), 1);
    }

    #[test]
    fn majority_of_three() {
        let rows = vec![vec![0.0], vec![0.1], vec![0.2], vec![10.0]];
        let m = KnnModel::new(3, rows, vec![1, 1, 0, 0], 2).unwrap();
        assert_eq!(m.predict(&[0.05]).unwrap(), 1);
    }

    #[test]
    fn vote_tie_goes_to_closer_class() {
        let rows = vec![vec![-1.0], vec![2.0]];
        let m = KnnModel::new(2, rows, vec![0, 1], 2).unwrap();
        assert_eq!(m.predict(&[0.9]).unwrap(), 1);
        assert_eq!(m.predict(&[0.4]).unwrap(), 0);
        // Equal distances: lowest class id.
        assert_eq!(m.predict(&[0.5]).unwrap(), 0);
    }

    #[test]
    fn errors() {
        assert!(KnnModel::new(3, vec![vec![0.0]; 2], vec![0, 0], 1).is_err());
        assert!(KnnModel::new(0, vec![vec![0.0]; 2], vec![0, 0], 1).is_err());
        assert!(KnnModel::new(1, vec![vec![0.0]; 2], vec![0, 2], 2).is_err());
        let m = KnnModel::new(1, vec![vec![0.0, 1.0]], vec![0], 1).unwrap();
        assert_eq!(
            m.predict(&[0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        );
    }
}
