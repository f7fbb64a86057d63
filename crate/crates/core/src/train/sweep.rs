use alloc::format;
use alloc::vec::Vec;

use super::{evaluate, fit, grid_search, Dataset, GridSpec, MdaReport, ModelSpec};
use crate::cost::{cost_report, CostProfile, CostReport, ExtractionOptions, FeatureGroups, ModelShape};
use crate::models::ModelKind;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepConfig {
    /// Feature counts to evaluate; `None` means every count from 1 to f.
    pub feature_counts: Option<Vec<usize>>,
    pub drop_tolerance: f64,
    pub folds: usize,
    /// Skip per-point grid search and train these hyperparameters everywhere.
    pub fixed: Option<ModelSpec>,
    pub extraction: ExtractionOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            feature_counts: None,
            drop_tolerance: 0.05,
            folds: 5,
            fixed: None,
            extraction: ExtractionOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepPoint {
    pub feature_count: usize,
    pub selected: Vec<usize>,
    pub spec: ModelSpec,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub cost: CostReport,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepReport {
    pub kind: ModelKind,
    pub points: Vec<SweepPoint>,
    /// Index into `points` of the operating point.
    pub chosen: usize,
    /// Whether the chosen point fits the budget.
    pub feasible: bool,
    pub max_accuracy: f64,
    pub drop_tolerance: f64,
    /// The full-vector point fell more than the tolerance below the maximum.
    pub overfitting_dip: bool,
    pub profile: alloc::string::String,
    pub seed: u64,
}

impl SweepReport {
    pub fn chosen_point(&self) -> &SweepPoint {
        &self.points[self.chosen]
    }
}

/// Grow the input one MDA-ranked feature at a time, re-tune, train, score and
/// cost each point. The operating point is the smallest feature count within
/// `drop_tolerance` of the best accuracy whose cost fits the profile; when no
/// such point fits, the smallest within tolerance is reported as infeasible.
#[allow(clippy::too_many_arguments)]
pub fn sweep_feature_count(
    train: &Dataset,
    test: &Dataset,
    kind: ModelKind,
    grid: &GridSpec,
    mda: &MdaReport,
    profile: &CostProfile,
    config: &SweepConfig,
    seed: u64,
) -> Result<SweepReport> {
    let f = train.n_features();
    let mut sorted = mda.ranking.clone();
    sorted.sort_unstable();
    if sorted != (0..f).collect::<Vec<_>>() {
        return Err(Error::InvalidParameter(format!(
            "MDA ranking must be a permutation of the {f} features"
        )));
    }
    if let Some(spec) = &config.fixed {
        if spec.kind() != kind {
            return Err(Error::InvalidParameter(format!(
                "fixed hyperparameters are for {} but the sweep trains {kind}",
                spec.kind()
            )));
        }
    }
    let counts = config.feature_counts.clone().unwrap_or_else(|| (1..=f).collect());
    if counts.is_empty()
        || counts[0] == 0
        || counts.windows(2).any(|w| w[0] >= w[1])
        || counts[counts.len() - 1] > f
    {
        return Err(Error::InvalidParameter(format!(
            "feature counts must be strictly increasing within 1..={f}"
        )));
    }
    let layout = train.layout();

    let mut points = Vec::with_capacity(counts.len());
    for &m in &counts {
        let point_seed = rng::child_seed(seed, "sweep", m as u64);
        let selected = mda.top(m).to_vec();
        let spec = match &config.fixed {
            Some(s) => s.clone(),
            None => grid_search(train, &selected, kind, grid, config.folds, point_seed)?.best,
        };
        let model = fit(train, &selected, &spec, point_seed)?;
        let eval = evaluate(&model, test)?;
        let groups = layout
            .as_ref()
            .map_or(FeatureGroups::ALL, |l| FeatureGroups::from_selection(&selected, l));
        let cost = cost_report(groups, &ModelShape::from(&model.classifier), profile, config.extraction);
        points.push(SweepPoint {
            feature_count: m,
            selected,
            spec,
            accuracy: eval.accuracy,
            precision: eval.precision,
            recall: eval.recall,
            cost,
        });
    }

    let max_accuracy = points.iter().map(|p| p.accuracy).fold(f64::NEG_INFINITY, f64::max);
    let floor = max_accuracy - config.drop_tolerance;
    let within = |p: &&SweepPoint| p.accuracy >= floor;
    let feasible_pick = points.iter().position(|p| within(&p) && p.cost.verdict.fits());
    let (chosen, feasible) = match feasible_pick {
        Some(k) => (k, true),
        None => (points.iter().position(|p| within(&p)).expect("the maximum is within tolerance"), false),
    };
    let last = &points[points.len() - 1];
    Ok(SweepReport {
        kind,
        overfitting_dip: last.feature_count == f && last.accuracy < floor,
        chosen,
        feasible,
        max_accuracy,
        drop_tolerance: config.drop_tolerance,
        profile: profile.name.clone(),
        points,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::{mda_rank, split_dataset, RfParams};
    use alloc::vec;
    use rand::Rng as _;

    fn data(seed: u64, f: usize) -> Dataset {
        let mut r = rng::stream(seed, 1);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..150 {
            let row: Vec<f64> = (0..f).map(|_| r.random_range(-1.0..1.0)).collect();
            labels.push(usize::from(row[0] > 0.0));
            rows.push(row);
        }
        let names = (0..f).map(|k| format!("x{k}")).collect();
        Dataset::new(rows, labels, vec!["a".into(), "b".into()], names, "").unwrap()
    }

    fn fast() -> SweepConfig {
        SweepConfig {
            fixed: Some(ModelSpec::Rf(RfParams { n_trees: 15, max_depth: None })),
            ..SweepConfig::default()
        }
    }

    #[test]
    fn single_feature_sweep() {
        let (train, test) = split_dataset(&data(1, 1), 0.7, 1).unwrap();
        let spec = fast().fixed.unwrap();
        let mda = mda_rank(&train, &test, &spec, 2, 0).unwrap();
        let r = sweep_feature_count(&train, &test, ModelKind::Rf, &GridSpec::default(), &mda, &CostProfile::default(), &fast(), 0).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.chosen, 0);
        assert!(r.feasible);
    }

    #[test]
    fn chosen_point_follows_the_tolerance_rule() {
        let (train, test) = split_dataset(&data(2, 6), 0.7, 2).unwrap();
        let spec = fast().fixed.unwrap();
        let mda = mda_rank(&train, &test, &spec, 3, 0).unwrap();
        assert_eq!(mda.ranking[0], 0);
        let r = sweep_feature_count(&train, &test, ModelKind::Rf, &GridSpec::default(), &mda, &CostProfile::default(), &fast(), 0).unwrap();
        assert_eq!(r.points.len(), 6);
        assert!(r.points.windows(2).all(|w| w[0].feature_count < w[1].feature_count));
        let c = r.chosen_point();
        assert!(c.accuracy >= r.max_accuracy - 0.05);
        assert!(r.points[..r.chosen].iter().all(|p| p.accuracy < r.max_accuracy - 0.05 || !p.cost.verdict.fits()));
        assert!(c.cost.classification.cycles <= 8_295_000);
        assert!(r.overfitting_dip || r.points[5].accuracy >= r.max_accuracy - 0.05);
    }

    #[test]
    fn infeasible_budget_is_flagged() {
        let (train, test) = split_dataset(&data(3, 3), 0.7, 3).unwrap();
        let spec = fast().fixed.unwrap();
        let mda = mda_rank(&train, &test, &spec, 2, 0).unwrap();
        let mut tiny = CostProfile::default();
        tiny.flash_total_bytes = 1;
        let r = sweep_feature_count(&train, &test, ModelKind::Rf, &GridSpec::default(), &mda, &tiny, &fast(), 0).unwrap();
        assert!(!r.feasible);
        assert!(r.chosen_point().accuracy >= r.max_accuracy - 0.05);
    }

    #[test]
    fn bad_configuration() {
        let (train, test) = split_dataset(&data(4, 3), 0.7, 4).unwrap();
        let spec = fast().fixed.unwrap();
        let mda = mda_rank(&train, &test, &spec, 2, 0).unwrap();
        let p = CostProfile::default();
        let g = GridSpec::default();
        let bad = SweepConfig { feature_counts: Some(vec![2, 2]), ..fast() };
        assert!(sweep_feature_count(&train, &test, ModelKind::Rf, &g, &mda, &p, &bad, 0).is_err());
        let wrong_kind = SweepConfig { fixed: Some(ModelSpec::Knn { k: 1 }), ..fast() };
        assert!(sweep_feature_count(&train, &test, ModelKind::Rf, &g, &mda, &p, &wrong_kind, 0).is_err());
        let mut broken = mda.clone();
        broken.ranking = vec![0, 0, 1];
        assert!(sweep_feature_count(&train, &test, ModelKind::Rf, &g, &broken, &p, &fast(), 0).is_err());
    }
}
