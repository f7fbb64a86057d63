use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::knn::squared_distance;
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => math::exp(-gamma * squared_distance(a, b)),
        }
    }
}

/// Index of the class pair `(i, j)`, `i < j`, in the order
/// (0,1), (0,2), …, (0,C−1), (1,2), …
pub fn pair_index(i: usize, j: usize, n_classes: usize) -> usize {
    debug_assert!(i < j && j < n_classes);
    i * (2 * n_classes - i - 1) / 2 + (j - i - 1)
}

/// One-vs-one multiclass SVM with a support-vector set shared by all pairs.
///
/// Support vectors are grouped by class in ascending order. For the pair
/// `(i, j)`, class-`i` vectors use coefficient row `j − 1` and class-`j`
/// vectors use row `i`, which is why `C − 1` rows suffice.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    n_classes: usize,
    kernel: Kernel,
    support_vectors: Vec<Vec<f64>>,
    sv_class: Vec<usize>,
    dual_coef: Vec<Vec<f64>>,
    intercepts: Vec<f64>,
    /// Set when at least one pair stopped at the iteration cap.
    pub capped: bool,
}

impl SvmModel {
    pub fn new(
        n_classes: usize,
        kernel: Kernel,
        support_vectors: Vec<Vec<f64>>,
        sv_class: Vec<usize>,
        dual_coef: Vec<Vec<f64>>,
        intercepts: Vec<f64>,
    ) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Integrity(format!("SVM needs ≥ 2 classes, got {n_classes}")));
        }
        let n_sv = support_vectors.len();
        if sv_class.len() != n_sv {
            return Err(Error::Integrity(format!(
                "{n_sv} support vectors but {} class tags",
                sv_class.len()
            )));
        }
        if sv_class.windows(2).any(|w| w[0] > w[1]) || sv_class.iter().any(|&c| c >= n_classes) {
            return Err(Error::Integrity(
                "support vectors must be grouped by ascending valid class".into(),
            ));
        }
        if dual_coef.len() != n_classes - 1 || dual_coef.iter().any(|r| r.len() != n_sv) {
            return Err(Error::Integrity(format!(
                "dual coefficients must be {} × {n_sv}",
                n_classes - 1
            )));
        }
        if intercepts.len() != n_classes * (n_classes - 1) / 2 {
            return Err(Error::Integrity(format!(
                "expected {} intercepts, got {}",
                n_classes * (n_classes - 1) / 2,
                intercepts.len()
            )));
        }
        if let Some(f) = support_vectors.first().map(Vec::len) {
            if support_vectors.iter().any(|s| s.len() != f) {
                return Err(Error::Integrity("ragged support-vector matrix".into()));
            }
        }
        if let Kernel::Rbf { gamma } = kernel {
            if !(gamma.is_finite() && gamma > 0.0) {
                return Err(Error::Integrity(format!("rbf gamma must be positive, got {gamma}")));
            }
        }
        Ok(Self {
            n_classes,
            kernel,
            support_vectors,
            sv_class,
            dual_coef,
            intercepts,
            capped: false,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_sv(&self) -> usize {
        self.support_vectors.len()
    }

    /// Zero when the model has no support vectors at all.
    pub fn n_features(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn sv_class(&self) -> &[usize] {
        &self.sv_class
    }

    pub fn dual_coef(&self) -> &[Vec<f64>] {
        &self.dual_coef
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    /// Decision value of every class pair, in [`pair_index`] order. Positive
    /// values favour the lower class of the pair.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.n_sv() > 0 && x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        let k: Vec<f64> = self
            .support_vectors
            .iter()
            .map(|sv| self.kernel.eval(sv, x))
            .collect();
        let mut start = vec![0usize; self.n_classes + 1];
        for &c in &self.sv_class {
            start[c + 1] += 1;
        }
        for c in 0..self.n_classes {
            start[c + 1] += start[c];
        }
        let mut out = Vec::with_capacity(self.intercepts.len());
        for i in 0..self.n_classes {
            for j in i + 1..self.n_classes {
                let from_i: f64 = (start[i]..start[i + 1])
                    .map(|s| self.dual_coef[j - 1][s] * k[s])
                    .sum();
                let from_j: f64 = (start[j]..start[j + 1])
                    .map(|s| self.dual_coef[i][s] * k[s])
                    .sum();
                out.push(from_i + from_j + self.intercepts[pair_index(i, j, self.n_classes)]);
            }
        }
        Ok(out)
    }

    /// Pairwise vote; ties go to the larger summed signed decision value,
    /// then to the lower class id.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let dec = self.decision_values(x)?;
        let mut votes = vec![0usize; self.n_classes];
        let mut score = vec![0.0f64; self.n_classes];
        let mut p = 0;
        for i in 0..self.n_classes {
            for j in i + 1..self.n_classes {
                let d = dec[p];
                if d > 0.0 {
                    votes[i] += 1;
                } else {
                    votes[j] += 1;
                }
                score[i] += d;
                score[j] -= d;
                p += 1;
            }
        }
        let mut best = 0;
        for c in 1..self.n_classes {
            if votes[c] > votes[best] || (votes[c] == votes[best] && score[c] > score[best]) {
                best = c;
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_order() {
        let mut p = 0;
        for i in 0..5 {
            for j in i + 1..5 {
                assert_eq!(pair_index(i, j, 5), p);
                p += 1;
            }
        }
    }

    #[test]
    fn single_sv_linear_self_kernel() {
        let sv = vec![1.0, 2.0, -0.5];
        let m = SvmModel::new(2, Kernel::Linear, vec![sv.clone()], vec![0], vec![vec![1.0]], vec![0.0])
            .unwrap();
        let d = m.decision_values(&sv).unwrap();
        assert_eq!(d, [1.0 + 4.0 + 0.25]);
        assert_eq!(m.predict(&sv).unwrap(), 0);
    }

    #[test]
    fn rbf_self_kernel_is_one() {
        let a = [0.3, -1.2, 4.0];
        assert_eq!(Kernel::Rbf { gamma: 0.7 }.eval(&a, &a), 1.0);
    }

    #[test]
    fn shape_validation() {
        let sv = vec![vec![0.0], vec![1.0]];
        assert!(SvmModel::new(3, Kernel::Linear, sv.clone(), vec![0, 1], vec![vec![0.0; 2]], vec![0.0; 3]).is_err());
        assert!(SvmModel::new(2, Kernel::Linear, sv.clone(), vec![1, 0], vec![vec![0.0; 2]], vec![0.0]).is_err());
        assert!(SvmModel::new(2, Kernel::Linear, sv.clone(), vec![0, 1], vec![vec![0.0; 2]], vec![]).is_err());
        assert!(SvmModel::new(2, Kernel::Rbf { gamma: 0.0 }, sv, vec![0, 1], vec![vec![0.0; 2]], vec![0.0]).is_err());
    }

    #[test]
    fn ten_class_layout_has_nine_coefficient_rows() {
        let sv: Vec<Vec<f64>> = (0..10).map(|c| vec![c as f64]).collect();
        let m = SvmModel::new(10, Kernel::Linear, sv, (0..10).collect(), vec![vec![0.0; 10]; 9], vec![0.0; 45])
            .unwrap();
        assert_eq!(m.dual_coef().len(), 9);
    }
}
