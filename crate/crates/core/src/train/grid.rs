use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{evaluate, fit, stratified_folds, Dataset, MlpParams, ModelSpec, RfParams, SvmParams};
use crate::models::{Kernel, ModelKind};
use crate::rng;
use crate::{Error, Result};

/// Hyperparameter axes per model family. Cells are the Cartesian product of
/// the axes of one family, enumerated with the first axis outermost.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct GridSpec {
    pub knn_k: Vec<usize>,
    pub svm_c: Vec<f64>,
    pub svm_gamma: Vec<f64>,
    /// `"linear"` or `"rbf"`; gamma is ignored by linear cells.
    pub svm_kernels: Vec<String>,
    pub mlp_hidden: Vec<Vec<usize>>,
    pub mlp_learning_rate: Vec<f64>,
    pub mlp_epochs: usize,
    pub mlp_batch_size: usize,
    pub rf_trees: Vec<usize>,
    /// `None` grows trees until their leaves are pure.
    pub rf_max_depth: Vec<Option<usize>>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            knn_k: vec![1, 3, 5, 7],
            svm_c: vec![1.0, 10.0, 100.0],
            svm_gamma: vec![0.01, 0.1],
            svm_kernels: vec!["rbf".into()],
            mlp_hidden: vec![vec![800, 100]],
            mlp_learning_rate: vec![0.01],
            mlp_epochs: 200,
            mlp_batch_size: 32,
            rf_trees: vec![100],
            rf_max_depth: vec![None, Some(10)],
        }
    }
}

impl GridSpec {
    /// A grid whose only cell for `spec.kind()` is `spec`.
    pub fn fixed(spec: &ModelSpec) -> Self {
        let mut g = Self::default();
        match spec {
            ModelSpec::Knn { k } => g.knn_k = vec![*k],
            ModelSpec::Svm(p) => {
                g.svm_c = vec![p.c];
                match p.kernel {
                    Kernel::Linear => g.svm_kernels = vec!["linear".into()],
                    Kernel::Rbf { gamma } => {
                        g.svm_kernels = vec!["rbf".into()];
                        g.svm_gamma = vec![gamma];
                    }
                }
            }
            ModelSpec::Mlp(p) => {
                g.mlp_hidden = vec![p.hidden.clone()];
                g.mlp_learning_rate = vec![p.learning_rate];
                g.mlp_epochs = p.epochs;
                g.mlp_batch_size = p.batch_size;
            }
            ModelSpec::Rf(p) => {
                g.rf_trees = vec![p.n_trees];
                g.rf_max_depth = vec![p.max_depth];
            }
        }
        g
    }

    /// Every cell of `kind`, in axis order.
    pub fn cells(&self, kind: ModelKind) -> Result<Vec<ModelSpec>> {
        let empty = |name: &str| Error::InvalidParameter(format!("grid axis `{name}` is empty"));
        let positive = |name: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("grid axis `{name}` needs positive values")))
            }
        };
        let mut out = Vec::new();
        match kind {
            ModelKind::Knn => {
                if self.knn_k.is_empty() {
                    return Err(empty("knn_k"));
                }
                positive("knn_k", !self.knn_k.contains(&0))?;
                out.extend(self.knn_k.iter().map(|&k| ModelSpec::Knn { k }));
            }
            ModelKind::Svm => {
                for (name, axis) in [("svm_c", &self.svm_c), ("svm_gamma", &self.svm_gamma)] {
                    if axis.is_empty() {
                        return Err(empty(name));
                    }
                    positive(name, axis.iter().all(|&v| v.is_finite() && v > 0.0))?;
                }
                if self.svm_kernels.is_empty() {
                    return Err(empty("svm_kernels"));
                }
                for &c in &self.svm_c {
                    for name in &self.svm_kernels {
                        for &gamma in &self.svm_gamma {
                            let kernel = match name.as_str() {
                                "linear" => Kernel::Linear,
                                "rbf" => Kernel::Rbf { gamma },
                                other => {
                                    return Err(Error::InvalidParameter(format!("unknown kernel `{other}`")))
                                }
                            };
                            out.push(ModelSpec::Svm(SvmParams::new(c, kernel)));
                        }
                    }
                }
            }
            ModelKind::Mlp => {
                if self.mlp_hidden.is_empty() {
                    return Err(empty("mlp_hidden"));
                }
                if self.mlp_learning_rate.is_empty() {
                    return Err(empty("mlp_learning_rate"));
                }
                for hidden in &self.mlp_hidden {
                    for &learning_rate in &self.mlp_learning_rate {
                        let p = MlpParams {
                            hidden: hidden.clone(),
                            learning_rate,
                            epochs: self.mlp_epochs,
                            batch_size: self.mlp_batch_size,
                        };
                        p.validate()?;
                        out.push(ModelSpec::Mlp(p));
                    }
                }
            }
            ModelKind::Rf => {
                if self.rf_trees.is_empty() {
                    return Err(empty("rf_trees"));
                }
                if self.rf_max_depth.is_empty() {
                    return Err(empty("rf_max_depth"));
                }
                positive("rf_trees", !self.rf_trees.contains(&0))?;
                for &n_trees in &self.rf_trees {
                    for &max_depth in &self.rf_max_depth {
                        out.push(ModelSpec::Rf(RfParams { n_trees, max_depth }));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Cross-validation outcome of one grid cell.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvRow {
    pub spec: ModelSpec,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Mean stored-parameter count of the fold models; breaks accuracy ties.
    pub mean_param_count: f64,
    /// Why the cell was excluded, if any fold failed to train.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridResult {
    pub kind: ModelKind,
    pub best: ModelSpec,
    pub best_index: usize,
    pub folds: usize,
    pub seed: u64,
    pub table: Vec<CvRow>,
}

/// Stratified k-fold cross-validation of every cell of `kind` on the
/// `selected` columns. The highest mean accuracy wins; ties go to the cell
/// with fewer parameters, then to the earlier cell.
pub fn grid_search(
    d: &Dataset,
    selected: &[usize],
    kind: ModelKind,
    grid: &GridSpec,
    folds: usize,
    seed: u64,
) -> Result<GridResult> {
    let cells = grid.cells(kind)?;
    let assignment = stratified_folds(d, folds, rng::child_seed(seed, "folds", 0))?;
    let splits: Vec<(Dataset, Dataset)> = assignment
        .iter()
        .map(|held| {
            let mut in_fold = vec![false; d.len()];
            for &k in held {
                in_fold[k] = true;
            }
            let train: Vec<usize> = (0..d.len()).filter(|&k| !in_fold[k]).collect();
            (d.subset(&train), d.subset(held))
        })
        .collect();

    let mut table = Vec::with_capacity(cells.len());
    for (ci, spec) in cells.into_iter().enumerate() {
        let cell_seed = rng::child_seed(seed, "cell", ci as u64);
        let mut accs = Vec::with_capacity(folds);
        let mut params = 0.0;
        let mut failure = None;
        for (fi, (train, test)) in splits.iter().enumerate() {
            let outcome = fit(train, selected, &spec, rng::child_seed(cell_seed, "fold", fi as u64))
                .and_then(|m| Ok((evaluate(&m, test)?.accuracy, m.classifier.param_count())));
            match outcome {
                Ok((acc, p)) => {
                    accs.push(acc);
                    params += p as f64;
                }
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
        let n = accs.len().max(1) as f64;
        table.push(CvRow {
            spec,
            mean_accuracy: if failure.is_some() { 0.0 } else { accs.iter().sum::<f64>() / n },
            mean_param_count: params / n,
            fold_accuracies: accs,
            failure,
        });
    }

    let mut best: Option<usize> = None;
    for (k, row) in table.iter().enumerate() {
        if row.failure.is_some() {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &table[b];
                row.mean_accuracy > cur.mean_accuracy
                    || (row.mean_accuracy == cur.mean_accuracy && row.mean_param_count < cur.mean_param_count)
            }
        };
        if better {
            best = Some(k);
        }
    }
    let best_index = best.ok_or(Error::AllCellsFailed)?;
    Ok(GridResult {
        kind,
        best: table[best_index].spec.clone(),
        best_index,
        folds,
        seed,
        table,
    })
}
