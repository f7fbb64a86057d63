use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `counts[truth][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::LengthMismatch {
                left: truth.len(),
                right: predicted.len(),
            });
        }
        let mut counts = vec![vec![0; n_classes]; n_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= n_classes || p >= n_classes {
                return Err(Error::IndexOutOfBounds {
                    index: t.max(p),
                    len: n_classes,
                });
            }
            counts[t][p] += 1;
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.counts.len()).map(|c| self.counts[c][c]).sum()
    }

    /// `trace / total`; zero for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }

    /// Classes with at least one true instance.
    fn present(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.counts.len()).filter(|&c| self.counts[c].iter().sum::<usize>() > 0)
    }

    /// Unweighted mean of per-class precision over classes present in the
    /// truth; a class never predicted has precision 0.
    pub fn macro_precision(&self) -> f64 {
        let per: Vec<f64> = self
            .present()
            .map(|c| ratio(self.counts[c][c], self.counts.iter().map(|r| r[c]).sum()))
            .collect();
        mean(&per)
    }

    /// Unweighted mean of per-class recall over classes present in the truth.
    pub fn macro_recall(&self) -> f64 {
        let per: Vec<f64> = self
            .present()
            .map(|c| ratio(self.counts[c][c], self.counts[c].iter().sum()))
            .collect();
        mean(&per)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Evaluation {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub confusion: ConfusionMatrix,
    pub predictions: Vec<usize>,
}

impl Evaluation {
    pub fn from_predictions(truth: &[usize], predictions: Vec<usize>, n_classes: usize) -> Result<Self> {
        let confusion = ConfusionMatrix::new(truth, &predictions, n_classes)?;
        Ok(Self {
            accuracy: confusion.accuracy(),
            precision: confusion.macro_precision(),
            recall: confusion.macro_recall(),
            confusion,
            predictions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed() {
        // truth 0,0,0,1,1,2 ; predicted 0,0,1,1,2,2
        let m = ConfusionMatrix::new(&[0, 0, 0, 1, 1, 2], &[0, 0, 1, 1, 2, 2], 3).unwrap();
        assert_eq!(m.counts(), [vec![2, 1, 0], vec![0, 1, 1], vec![0, 0, 1]]);
        assert_eq!(m.accuracy(), 4.0 / 6.0);
        assert!((m.macro_recall() - (2.0 / 3.0 + 0.5 + 1.0) / 3.0).abs() < 1e-15);
        assert!((m.macro_precision() - (1.0 + 0.5 + 0.5) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn never_predicted_class_scores_zero_precision() {
        let m = ConfusionMatrix::new(&[0, 1], &[0, 0], 2).unwrap();
        assert_eq!(m.macro_precision(), 0.25);
        assert_eq!(m.macro_recall(), 0.5);
    }

    #[test]
    fn errors() {
        assert!(ConfusionMatrix::new(&[0], &[], 2).is_err());
        assert!(ConfusionMatrix::new(&[0], &[2], 2).is_err());
        assert_eq!(ConfusionMatrix::new(&[], &[], 2).unwrap().accuracy(), 0.0);
    }

    proptest! {
        #[test]
        fn metric_ranges(pairs in proptest::collection::vec((0usize..5, 0usize..5), 1..200)) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let e = Evaluation::from_predictions(&t, p.clone(), 5).unwrap();
            let hits = t.iter().zip(&p).filter(|(a, b)| a == b).count();
            prop_assert_eq!(e.accuracy, hits as f64 / t.len() as f64);
            prop_assert!((0.0..=1.0).contains(&e.precision));
            prop_assert!((0.0..=1.0).contains(&e.recall));
            prop_assert_eq!(e.confusion.total(), t.len());
            prop_assert_eq!(&Evaluation::from_predictions(&t, e.predictions.clone(), 5).unwrap(), &e);
        }
    }
}
