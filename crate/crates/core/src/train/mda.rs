use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{evaluate, fit, Dataset, ModelSpec};
use crate::rng;
use crate::{Error, Result};

/// Mean decrease in accuracy per feature.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MdaReport {
    pub spec: ModelSpec,
    pub baseline_accuracy: f64,
    /// Baseline minus the mean accuracy with that feature's test column shuffled.
    pub importances: Vec<f64>,
    /// Feature indices by descending importance, ties by lower index.
    pub ranking: Vec<usize>,
    pub feature_names: Vec<String>,
    pub repetitions: usize,
    pub seed: u64,
}

impl MdaReport {
    /// The `m` most important features.
    pub fn top(&self, m: usize) -> &[usize] {
        &self.ranking[..m.min(self.ranking.len())]
    }
}

/// Permutation importance: train once on every feature, then for each feature
/// shuffle its test column `repetitions` times and record the accuracy drop.
/// The training data is never modified.
pub fn mda_rank(
    train: &Dataset,
    test: &Dataset,
    spec: &ModelSpec,
    repetitions: usize,
    seed: u64,
) -> Result<MdaReport> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter("MDA needs at least one repetition".into()));
    }
    let f = train.n_features();
    let all: Vec<usize> = (0..f).collect();
    let model = fit(train, &all, spec, rng::child_seed(seed, "mda-fit", 0))?;
    let baseline = evaluate(&model, test)?.accuracy;

    let mut rows = test.rows().to_vec();
    let truth = test.labels();
    let mut importances = Vec::with_capacity(f);
    for k in 0..f {
        let original: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        let mut column = original.clone();
        let mut rng = rng::stream(rng::child_seed(seed, "mda-shuffle", k as u64), 0);
        let mut total = 0.0;
        for _ in 0..repetitions {
            column.copy_from_slice(&original);
            column.shuffle(&mut rng);
            let mut hits = 0usize;
            for ((row, &v), &y) in rows.iter_mut().zip(&column).zip(truth) {
                row[k] = v;
                if model.predict(row)? == y {
                    hits += 1;
                }
            }
            total += hits as f64 / rows.len() as f64;
        }
        for (row, &v) in rows.iter_mut().zip(&original) {
            row[k] = v;
        }
        importances.push(baseline - total / repetitions as f64);
    }
    let mut ranking = all;
    ranking.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
    Ok(MdaReport {
        spec: spec.clone(),
        baseline_accuracy: baseline,
        importances,
        ranking,
        feature_names: train.feature_names().to_vec(),
        repetitions,
        seed,
    })
}
