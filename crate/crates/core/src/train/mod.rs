//! Training for the four model families, plus the model-selection loop:
//! grid search, permutation importance (MDA) and the feature-count sweep.
//!
//! Every stochastic step draws from a stream derived from the caller's seed,
//! so re-running any operation with the same seed yields an identical model.

mod dataset;
mod grid;
mod mda;
mod metrics;
mod mlp;
mod rf;
mod svm;
mod sweep;

use alloc::format;
use alloc::vec::Vec;

pub use dataset::{split_dataset, stratified_folds, Dataset};
pub use grid::{grid_search, CvRow, GridResult, GridSpec};
pub use mda::{mda_rank, MdaReport};
pub use metrics::{ConfusionMatrix, Evaluation};
pub use mlp::{loss_and_gradient, mean_loss, train_mlp, MlpParams};
pub use rf::{train_rf, RfParams};
pub use svm::{smo, train_svm, BinarySolution, SvmParams};
pub use sweep::{sweep_feature_count, SweepConfig, SweepPoint, SweepReport};

use crate::features::{validate_selection, HarmonicMode};
use crate::models::{Classifier, KnnModel, ModelKind, Scaler, TrainedModel};
use crate::{Error, Result};

/// A model family together with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ModelSpec {
    Knn { k: usize },
    Svm(SvmParams),
    Mlp(MlpParams),
    Rf(RfParams),
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Knn { .. } => ModelKind::Knn,
            ModelSpec::Svm(_) => ModelKind::Svm,
            ModelSpec::Mlp(_) => ModelKind::Mlp,
            ModelSpec::Rf(_) => ModelKind::Rf,
        }
    }
}

/// kNN stores the (scaled) training rows verbatim.
pub fn train_knn(rows: &[Vec<f64>], labels: &[usize], n_classes: usize, k: usize) -> Result<KnnModel> {
    KnnModel::new(k, rows.to_vec(), labels.to_vec(), n_classes)
}

/// Train `spec` on the `selected` columns of `train`, fitting a scaler first
/// for every family except RF.
pub fn fit(train: &Dataset, selected: &[usize], spec: &ModelSpec, seed: u64) -> Result<TrainedModel> {
    validate_selection(selected, train.n_features())?;
    if selected.is_empty() {
        return Err(Error::InvalidParameter("at least one feature must be selected".into()));
    }
    let raw = train.project(selected);
    let (scaler, rows) = if spec.kind().uses_scaler() {
        let s = Scaler::fit(&raw)?;
        let rows = s.transform_rows(&raw)?;
        (Some(s), rows)
    } else {
        (None, raw)
    };
    let labels = train.labels();
    let c = train.n_classes();
    let classifier = match spec {
        ModelSpec::Knn { k } => Classifier::Knn(train_knn(&rows, labels, c, *k)?),
        ModelSpec::Svm(p) => Classifier::Svm(train_svm(&rows, labels, c, p)?),
        ModelSpec::Mlp(p) => Classifier::Mlp(train_mlp(&rows, labels, c, p, seed)?),
        ModelSpec::Rf(p) => Classifier::Rf(train_rf(&rows, labels, c, p, seed)?),
    };
    let model = TrainedModel {
        classifier,
        scaler,
        selected: selected.to_vec(),
        layout_len: train.n_features(),
        harmonic_mode: train.layout().map_or(HarmonicMode::Complex, |l| l.mode()),
        classes: train.classes().to_vec(),
    };
    model.validate()?;
    Ok(model)
}

/// Predict every row of `test` and score the predictions.
pub fn evaluate(model: &TrainedModel, test: &Dataset) -> Result<Evaluation> {
    if test.n_features() != model.layout_len {
        return Err(Error::DimensionMismatch {
            expected: model.layout_len,
            got: test.n_features(),
        });
    }
    if test.n_classes() != model.classes.len() {
        return Err(Error::InvalidDataset(format!(
            "test set has {} classes, model has {}",
            test.n_classes(),
            model.classes.len()
        )));
    }
    let predictions = test
        .rows()
        .iter()
        .map(|r| model.predict(r))
        .collect::<Result<Vec<_>>>()?;
    Evaluation::from_predictions(test.labels(), predictions, test.n_classes())
}


#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use testutil::blobs;

    fn dataset(f: usize, c: usize, n: usize, sep: f64, seed: u64) -> Dataset {
        let (rows, labels) = blobs(f, c, n, sep, seed);
        Dataset::new(
            rows,
            labels,
            (0..c).map(|k| k.to_string()).collect(),
            (0..f).map(|k| alloc::format!("x{k}")).collect(),
            "blobs",
        )
        .unwrap()
    }

    #[test]
    fn knn_memorizes_distinct_points() {
        let d = dataset(3, 3, 20, 1.0, 2);
        let m = fit(&d, &[0, 1, 2], &ModelSpec::Knn { k: 1 }, 0).unwrap();
        assert_eq!(evaluate(&m, &d).unwrap().accuracy, 1.0);
        match &m.classifier {
            Classifier::Knn(k) => assert_eq!(k.n_rows(), d.len()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn fit_respects_selection_and_scaling() {
        let d = dataset(4, 2, 15, 3.0, 1);
        let m = fit(&d, &[3, 1], &ModelSpec::Knn { k: 3 }, 0).unwrap();
        assert_eq!(m.selected, [3, 1]);
        assert!(m.scaler.is_some());
        let rf = fit(&d, &[0], &ModelSpec::Rf(RfParams { n_trees: 3, max_depth: Some(2) }), 0).unwrap();
        assert!(rf.scaler.is_none());
        assert!(fit(&d, &[], &ModelSpec::Knn { k: 1 }, 0).is_err());
        assert!(fit(&d, &[4], &ModelSpec::Knn { k: 1 }, 0).is_err());
    }

    #[test]
    fn every_family_learns_blobs() {
        let d = dataset(3, 3, 40, 5.0, 3);
        let (train, test) = split_dataset(&d, 0.75, 3).unwrap();
        let specs = [
            ModelSpec::Knn { k: 3 },
            ModelSpec::Svm(SvmParams::new(1.0, crate::models::Kernel::Rbf { gamma: 0.3 })),
            ModelSpec::Mlp(MlpParams { hidden: vec![10], learning_rate: 0.05, epochs: 20, batch_size: 8 }),
            ModelSpec::Rf(RfParams { n_trees: 20, max_depth: None }),
        ];
        for s in &specs {
            let m = fit(&train, &[0, 1, 2], s, 9).unwrap();
            assert!(evaluate(&m, &test).unwrap().accuracy >= 0.95, "{:?}", s.kind());
        }
    }
}
