//! Inference engines for the four classifier families and the deployable
//! bundle ([`TrainedModel`]) that wraps one of them with its feature
//! selection, scaler and class table.
//!
//! All predictors are pure functions of `(model, input)`; models are immutable
//! once built, so a single instance can serve concurrent callers.

mod knn;
mod mlp;
mod rf;
mod scaler;
mod svm;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use knn::KnnModel;
pub use mlp::{Layer, MlpModel};
pub use rf::{Node, RfModel, Tree};
pub use scaler::Scaler;
pub use svm::{pair_index, Kernel, SvmModel};

pub(crate) use mlp::argmax;

use crate::features::{validate_selection, HarmonicMode};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ModelKind {
    Knn,
    Svm,
    Mlp,
    Rf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Knn, ModelKind::Svm, ModelKind::Mlp, ModelKind::Rf];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Knn => "knn",
            ModelKind::Svm => "svm",
            ModelKind::Mlp => "mlp",
            ModelKind::Rf => "rf",
        }
    }

    /// Whether inputs are standardized before prediction (trees are scale-free).
    pub fn uses_scaler(self) -> bool {
        !matches!(self, ModelKind::Rf)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown model kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Knn(KnnModel),
    Svm(SvmModel),
    Mlp(MlpModel),
    Rf(RfModel),
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Knn(_) => ModelKind::Knn,
            Classifier::Svm(_) => ModelKind::Svm,
            Classifier::Mlp(_) => ModelKind::Mlp,
            Classifier::Rf(_) => ModelKind::Rf,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Classifier::Knn(m) => m.n_classes(),
            Classifier::Svm(m) => m.n_classes(),
            Classifier::Mlp(m) => m.n_classes(),
            Classifier::Rf(m) => m.n_classes(),
        }
    }

    /// Input width; `None` for an SVM without support vectors.
    pub fn n_features(&self) -> Option<usize> {
        match self {
            Classifier::Knn(m) => Some(m.n_features()),
            Classifier::Svm(m) if m.n_sv() == 0 => None,
            Classifier::Svm(m) => Some(m.n_features()),
            Classifier::Mlp(m) => Some(m.n_features()),
            Classifier::Rf(m) => Some(m.n_features()),
        }
    }

    /// Predict from an input already projected (and scaled, unless RF).
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        match self {
            Classifier::Knn(m) => m.predict(x),
            Classifier::Svm(m) => m.predict(x),
            Classifier::Mlp(m) => m.predict(x),
            Classifier::Rf(m) => m.predict(x),
        }
    }

    /// Stored numeric parameters, used to break grid-search ties.
    pub fn param_count(&self) -> usize {
        match self {
            Classifier::Knn(m) => m.n_rows() * m.n_features(),
            Classifier::Svm(m) => {
                let c = m.n_classes();
                m.n_sv() * (m.n_features() + c - 1) + c * (c - 1) / 2
            }
            Classifier::Mlp(m) => m.param_count(),
            Classifier::Rf(m) => m.node_count(),
        }
    }
}

/// A classifier plus everything needed to apply it to a full feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub classifier: Classifier,
    /// Present for every kind except RF.
    pub scaler: Option<Scaler>,
    /// Indices into the full feature layout, in model-input order.
    pub selected: Vec<usize>,
    pub layout_len: usize,
    pub harmonic_mode: HarmonicMode,
    pub classes: Vec<String>,
}

impl TrainedModel {
    pub fn validate(&self) -> Result<()> {
        validate_selection(&self.selected, self.layout_len)?;
        let m = self.selected.len();
        if let Some(f) = self.classifier.n_features() {
            if f != m {
                return Err(Error::Integrity(alloc::format!(
                    "classifier takes {f} features but {m} are selected"
                )));
            }
        }
        match (&self.scaler, self.classifier.kind().uses_scaler()) {
            (Some(s), true) if s.len() != m => {
                return Err(Error::Integrity("scaler width differs from selection".into()))
            }
            (None, true) => return Err(Error::Integrity("missing scaler".into())),
            (Some(_), false) => {
                return Err(Error::Integrity("random forests take unscaled input".into()))
            }
            _ => {}
        }
        if self.classes.len() != self.classifier.n_classes() {
            return Err(Error::Integrity(alloc::format!(
                "class table has {} names for {} classes",
                self.classes.len(),
                self.classifier.n_classes()
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> ModelKind {
        self.classifier.kind()
    }

    /// Predict from a vector that already holds only the selected features.
    pub fn predict_selected(&self, x: &[f64]) -> Result<usize> {
        match &self.scaler {
            Some(s) => self.classifier.predict(&s.transform(x)?),
            None => self.classifier.predict(x),
        }
    }

    /// Predict from a full-layout feature vector.
    pub fn predict(&self, full: &[f64]) -> Result<usize> {
        if full.len() != self.layout_len {
            return Err(Error::DimensionMismatch {
                expected: self.layout_len,
                got: full.len(),
            });
        }
        let x: Vec<f64> = self.selected.iter().map(|&k| full[k]).collect();
        self.predict_selected(&x)
    }

    pub fn class_name(&self, class: usize) -> Option<&str> {
        self.classes.get(class).map(String::as_str)
    }
}
