use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::models::{pair_index, Kernel, SvmModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvmParams {
    pub c: f64,
    pub kernel: Kernel,
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    /// Per-pair bound on SMO updates.
    pub max_iter: usize,
}

impl SvmParams {
    pub fn new(c: f64, kernel: Kernel) -> Self {
        Self {
            c,
            kernel,
            tolerance: 1e-3,
            max_iter: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("SVM C must be positive, got {}", self.c)));
        }
        if let Kernel::Rbf { gamma } = self.kernel {
            if !(gamma.is_finite() && gamma > 0.0) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "rbf gamma must be positive, got {gamma}"
                )));
            }
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 || self.max_iter == 0 {
            return Err(Error::InvalidParameter("SMO tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }
}

/// Dual solution of one binary problem with labels `y ∈ {+1, −1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    /// Decision function `Σ α_t y_t K(x_t, x) − rho`.
    pub rho: f64,
    pub iterations: usize,
    pub capped: bool,
}

/// SMO on `min ½ αᵀQα − Σα`, `0 ≤ α ≤ C`, `yᵀα = 0`, with
/// `Q_st = y_s y_t K_st`, choosing the maximal violating pair each step.
pub fn smo(gram: &[f64], y: &[f64], c: f64, tolerance: f64, max_iter: usize) -> BinarySolution {
    let n = y.len();
    debug_assert_eq!(gram.len(), n * n);
    let k = |s: usize, t: usize| gram[s * n + t];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);
    let mut iterations = 0;
    let mut capped = false;
    loop {
        let (mut i, mut g_max) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut g_max2) = (usize::MAX, f64::NEG_INFINITY);
        for t in 0..n {
            if up(alpha[t], y[t]) && -y[t] * grad[t] > g_max {
                i = t;
                g_max = -y[t] * grad[t];
            }
            if low(alpha[t], y[t]) && y[t] * grad[t] > g_max2 {
                j = t;
                g_max2 = y[t] * grad[t];
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max + g_max2 < tolerance {
            break;
        }
        if iterations == max_iter {
            capped = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let q_ij = y[i] * y[j] * k(i, j);
        if y[i] != y[j] {
            let quad = positive(k(i, i) + k(j, j) + 2.0 * q_ij);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = positive(k(i, i) + k(j, j) - 2.0 * q_ij);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else {
        0.0
    };
    BinarySolution {
        alpha,
        rho,
        iterations,
        capped,
    }
}

fn positive(quad: f64) -> f64 {
    if quad > 0.0 {
        quad
    } else {
        1e-12
    }
}

/// One-vs-one SVM: one SMO problem per class pair (lower class labelled +1),
/// merged into a shared support-vector set.
pub fn train_svm(rows: &[Vec<f64>], labels: &[usize], n_classes: usize, params: &SvmParams) -> Result<SvmModel> {
    params.validate()?;
    if n_classes < 2 {
        return Err(Error::InvalidDataset("an SVM needs at least two classes".into()));
    }
    if rows.is_empty() || rows.len() != labels.len() {
        return Err(Error::InvalidDataset("SVM training needs labelled rows".into()));
    }
    let mut by_class = vec![Vec::new(); n_classes];
    for (k, &l) in labels.iter().enumerate() {
        by_class[l].push(k);
    }
    let n_pairs = n_classes * (n_classes - 1) / 2;
    // (row index, pair) → signed coefficient α·y.
    let mut coef: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut intercepts = vec![0.0; n_pairs];
    let mut capped = false;
    for i in 0..n_classes {
        for j in i + 1..n_classes {
            let idx: Vec<usize> = by_class[i].iter().chain(&by_class[j]).copied().collect();
            if idx.is_empty() {
                continue;
            }
            let y: Vec<f64> = idx
                .iter()
                .map(|&k| if labels[k] == i { 1.0 } else { -1.0 })
                .collect();
            let m = idx.len();
            let mut gram = vec![0.0; m * m];
            for a in 0..m {
                for b in a..m {
                    let v = params.kernel.eval(&rows[idx[a]], &rows[idx[b]]);
                    gram[a * m + b] = v;
                    gram[b * m + a] = v;
                }
            }
            let sol = smo(&gram, &y, params.c, params.tolerance, params.max_iter);
            capped |= sol.capped;
            let p = pair_index(i, j, n_classes);
            intercepts[p] = -sol.rho;
            for (t, &a) in sol.alpha.iter().enumerate() {
                if a > 0.0 {
                    coef.insert((idx[t], p), a * y[t]);
                }
            }
        }
    }

    let mut sv_rows: Vec<usize> = coef.keys().map(|&(r, _)| r).collect();
    sv_rows.dedup();
    sv_rows.sort_by_key(|&r| (labels[r], r));
    let slot: BTreeMap<usize, usize> = sv_rows.iter().enumerate().map(|(s, &r)| (r, s)).collect();
    let mut dual = vec![vec![0.0; sv_rows.len()]; n_classes - 1];
    for i in 0..n_classes {
        for j in i + 1..n_classes {
            let p = pair_index(i, j, n_classes);
            for (&(r, q), &v) in &coef {
                if q != p {
                    continue;
                }
                let row = if labels[r] == i { j - 1 } else { i };
                dual[row][slot[&r]] = v;
            }
        }
    }
    let svs = sv_rows.iter().map(|&r| rows[r].clone()).collect();
    let sv_class = sv_rows.iter().map(|&r| labels[r]).collect();
    let mut model = SvmModel::new(n_classes, params.kernel, svs, sv_class, dual, intercepts)?;
    model.capped = capped;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::testutil::blobs;

    fn linear() -> SvmParams {
        SvmParams::new(10.0, Kernel::Linear)
    }

    #[test]
    fn separable_linear_margins() {
        let (rows, labels) = blobs(2, 2, 40, 5.0, 3);
        let m = train_svm(&rows, &labels, 2, &linear()).unwrap();
        assert!(!m.capped);
        for (x, &l) in rows.iter().zip(&labels) {
            assert_eq!(m.predict(x).unwrap(), l);
            let y = if l == 0 { 1.0 } else { -1.0 };
            let margin = y * m.decision_values(x).unwrap()[0];
            assert!(margin >= 1.0 - 1e-2, "{margin}");
        }
    }

    #[test]
    fn kkt_conditions_hold_at_convergence() {
        let (rows, labels) = blobs(3, 2, 30, 1.0, 11);
        let y: Vec<f64> = labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
        let k = Kernel::Rbf { gamma: 0.5 };
        let n = rows.len();
        let gram: Vec<f64> = (0..n * n).map(|p| k.eval(&rows[p / n], &rows[p % n])).collect();
        let c = 2.0;
        let sol = smo(&gram, &y, c, 1e-3, 100_000);
        assert!(!sol.capped);
        let eq: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(eq.abs() < 1e-9);
        for t in 0..n {
            let f: f64 = (0..n).map(|s| sol.alpha[s] * y[s] * gram[s * n + t]).sum::<f64>() - sol.rho;
            let m = y[t] * f;
            let a = sol.alpha[t];
            assert!((0.0..=c).contains(&a));
            if a == 0.0 {
                assert!(m >= 1.0 - 2e-3, "{m}");
            } else if a == c {
                assert!(m <= 1.0 + 2e-3, "{m}");
            } else {
                assert!((m - 1.0).abs() <= 2e-3, "{m}");
            }
        }
    }

    fn doubled(rows: &[Vec<f64>], labels: &[usize]) -> (Vec<Vec<f64>>, Vec<usize>) {
        (
            rows.iter().flat_map(|r| [r.clone(), r.clone()]).collect(),
            labels.iter().flat_map(|&l| [l, l]).collect(),
        )
    }

    fn agreement(a: &SvmModel, b: &SvmModel, probe: &[Vec<f64>]) -> usize {
        probe.iter().filter(|x| a.predict(x).unwrap() == b.predict(x).unwrap()).count()
    }

    #[test]
    fn duplicated_data_predicts_the_same() {
        // With no multiplier at the box bound, splitting each α over two
        // copies leaves the decision function unchanged.
        let (rows, labels) = blobs(3, 3, 25, 4.0, 5);
        let params = SvmParams::new(1e3, Kernel::Rbf { gamma: 0.3 });
        let a = train_svm(&rows, &labels, 3, &params).unwrap();
        let (rows2, labels2) = doubled(&rows, &labels);
        let b = train_svm(&rows2, &labels2, 3, &params).unwrap();
        let (probe, _) = blobs(3, 3, 40, 4.0, 6);
        assert_eq!(agreement(&a, &b, &probe), probe.len());
    }

    #[test]
    fn duplication_doubles_the_effective_box() {
        let (rows, labels) = blobs(3, 3, 25, 1.5, 5);
        let (rows2, labels2) = doubled(&rows, &labels);
        let kernel = Kernel::Rbf { gamma: 0.3 };
        let dup = train_svm(&rows2, &labels2, 3, &SvmParams::new(0.5, kernel)).unwrap();
        let wide = train_svm(&rows, &labels, 3, &SvmParams::new(1.0, kernel)).unwrap();
        let (probe, _) = blobs(3, 3, 40, 1.5, 6);
        let d1 = dup.decision_values(&probe[0]).unwrap();
        let d2 = wide.decision_values(&probe[0]).unwrap();
        for (x, y) in d1.iter().zip(&d2) {
            assert!((x - y).abs() < 0.05, "{x} vs {y}");
        }
        assert!(agreement(&dup, &wide, &probe) as f64 >= 0.97 * probe.len() as f64);
    }

    #[test]
    fn ten_classes_give_nine_rows() {
        let (rows, labels) = blobs(4, 10, 6, 3.0, 1);
        let m = train_svm(&rows, &labels, 10, &SvmParams::new(1.0, Kernel::Rbf { gamma: 0.2 })).unwrap();
        assert_eq!(m.dual_coef().len(), 9);
        assert_eq!(m.intercepts().len(), 45);
    }

    #[test]
    fn iteration_cap_is_flagged() {
        let (rows, labels) = blobs(3, 2, 30, 0.5, 2);
        let p = SvmParams { max_iter: 1, ..SvmParams::new(1.0, Kernel::Rbf { gamma: 1.0 }) };
        assert!(train_svm(&rows, &labels, 2, &p).unwrap().capped);
    }

    #[test]
    fn parameter_validation() {
        let (rows, labels) = blobs(2, 2, 5, 1.0, 0);
        assert!(train_svm(&rows, &labels, 2, &SvmParams::new(0.0, Kernel::Linear)).is_err());
        assert!(train_svm(&rows, &labels, 2, &SvmParams::new(1.0, Kernel::Rbf { gamma: -1.0 })).is_err());
    }
}
