//! MCU resource model: MACs, cycles, Flash and SRAM for feature extraction and
//! classification, checked against a per-window budget.
//!
//! Byte figures use decimal kilobytes (1 kB = 1000 B), matching the measured
//! tables the shipped profile is seeded from.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::features::{FeatureKind, FeatureLayout};
use crate::math;
use crate::models::{Classifier, ModelKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResourceUsage {
    pub sram_bytes: u64,
    pub flash_bytes: u64,
    pub mac: u64,
    pub cycles: u64,
}

impl ResourceUsage {
    pub const ZERO: Self = Self {
        sram_bytes: 0,
        flash_bytes: 0,
        mac: 0,
        cycles: 0,
    };

    pub const fn new(sram_bytes: u64, flash_bytes: u64, mac: u64, cycles: u64) -> Self {
        Self {
            sram_bytes,
            flash_bytes,
            mac,
            cycles,
        }
    }

    fn componentwise(self, other: Self, f: impl Fn(u64, u64) -> u64) -> Self {
        Self {
            sram_bytes: f(self.sram_bytes, other.sram_bytes),
            flash_bytes: f(self.flash_bytes, other.flash_bytes),
            mac: f(self.mac, other.mac),
            cycles: f(self.cycles, other.cycles),
        }
    }

    pub fn min(self, other: Self) -> Self {
        self.componentwise(other, u64::min)
    }
}

impl core::ops::Add for ResourceUsage {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        self.componentwise(rhs, |a, b| a + b)
    }
}

impl core::iter::Sum for ResourceUsage {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

/// Measured extraction costs per feature group ("-" entries stored as 0).
///
/// The Q variants differ in what is already available: `q_with_p_and_s` reuses
/// both, `q_without_p` must compute P, `q_without_s` must compute |S|, and
/// `q_without_p_and_s` computes both.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExtractionTable {
    pub raw_conv_vi: ResourceUsage,
    pub raw_conv_i: ResourceUsage,
    pub p: ResourceUsage,
    pub s_abs: ResourceUsage,
    pub q_with_p_and_s: ResourceUsage,
    pub q_without_p: ResourceUsage,
    pub q_without_s: ResourceUsage,
    pub q_without_p_and_s: ResourceUsage,
    pub fft_1024: ResourceUsage,
    pub fft_1024_unordered: ResourceUsage,
    pub full_vector: ResourceUsage,
}

/// Linear cycle model `mac · cycles_per_mac + kernel_evals · cycles_per_kernel_eval + fixed`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CycleCoefficients {
    pub cycles_per_mac: f64,
    /// Surcharge per transcendental kernel evaluation (rbf SVM only).
    pub cycles_per_kernel_eval: f64,
    pub fixed_overhead_cycles: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostProfile {
    pub name: String,
    pub version: u32,
    pub clock_hz: u64,
    pub window_budget_cycles: u64,
    pub flash_total_bytes: u64,
    pub sram_total_bytes: u64,
    pub bytes_per_parameter: u64,
    pub rf_node_bytes: u64,
    pub rf_code_overhead_bytes: u64,
    pub extraction: ExtractionTable,
    pub knn: CycleCoefficients,
    pub svm: CycleCoefficients,
    pub mlp: CycleCoefficients,
    pub rf: CycleCoefficients,
}

pub const CORTEX_M4_PAPER: &str = "cortex-m4-paper";
pub const PROFILE_VERSION: u32 = 1;

impl CostProfile {
    /// STM32F4 (Cortex-M4 @ 84 MHz, 512 kB Flash, 96 kB SRAM) with extraction
    /// rows as measured and cycle coefficients fitted by
    /// `crates/nilm/examples/calibrate_profile.rs`.
    pub fn cortex_m4_paper() -> Self {
        const K: u64 = 1000;
        Self {
            name: CORTEX_M4_PAPER.into(),
            version: PROFILE_VERSION,
            clock_hz: 84_000_000,
            window_budget_cycles: 8_400_000,
            flash_total_bytes: 512 * K,
            sram_total_bytes: 96 * K,
            bytes_per_parameter: 4,
            rf_node_bytes: 16,
            rf_code_overhead_bytes: 1044,
            extraction: ExtractionTable {
                raw_conv_vi: ResourceUsage::new(8 * K, 0, 4 * K, 15 * K),
                raw_conv_i: ResourceUsage::new(4 * K, 0, 2 * K, 9 * K),
                p: ResourceUsage::new(4 * K, 0, 2 * K, 17 * K),
                s_abs: ResourceUsage::new(0, 0, 2 * K, 11 * K),
                q_with_p_and_s: ResourceUsage::new(0, 0, 40, 80),
                q_without_p: ResourceUsage::new(4 * K, 0, 2_040, 17 * K),
                q_without_s: ResourceUsage::new(0, 0, 2_040, 11 * K),
                q_without_p_and_s: ResourceUsage::new(4 * K, 0, 4_040, 28 * K),
                fft_1024: ResourceUsage::new(4 * K, 17_600, 10_240, 66 * K),
                fft_1024_unordered: ResourceUsage::new(4 * K, 14_100, 10_240, 62 * K),
                full_vector: ResourceUsage::new(24 * K, 14_100, 18_240, 105 * K),
            },
            knn: CycleCoefficients {
                cycles_per_mac: 9.429,
                cycles_per_kernel_eval: 0.0,
                fixed_overhead_cycles: 0.0,
            },
            svm: CycleCoefficients {
                cycles_per_mac: 9.429,
                cycles_per_kernel_eval: 0.0,
                fixed_overhead_cycles: 0.0,
            },
            mlp: CycleCoefficients {
                cycles_per_mac: 9.6023,
                cycles_per_kernel_eval: 0.0,
                fixed_overhead_cycles: 46_835.0,
            },
            rf: CycleCoefficients {
                cycles_per_mac: 9.4418,
                cycles_per_kernel_eval: 0.0,
                fixed_overhead_cycles: 0.0,
            },
        }
    }

    pub fn coefficients(&self, kind: ModelKind) -> &CycleCoefficients {
        match kind {
            ModelKind::Knn => &self.knn,
            ModelKind::Svm => &self.svm,
            ModelKind::Mlp => &self.mlp,
            ModelKind::Rf => &self.rf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("clock_hz", self.clock_hz),
            ("window_budget_cycles", self.window_budget_cycles),
            ("flash_total_bytes", self.flash_total_bytes),
            ("sram_total_bytes", self.sram_total_bytes),
            ("bytes_per_parameter", self.bytes_per_parameter),
            ("rf_node_bytes", self.rf_node_bytes),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidParameter(format!("profile field {name} must be positive")));
        }
        for kind in ModelKind::ALL {
            let c = self.coefficients(kind);
            let ok = [c.cycles_per_mac, c.cycles_per_kernel_eval, c.fixed_overhead_cycles]
                .iter()
                .all(|v| v.is_finite() && *v >= 0.0)
                && c.cycles_per_mac > 0.0;
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "{kind} cycle coefficients must be non-negative with a positive per-MAC cost"
                )));
            }
        }
        self.check_table_consistency()
    }

    /// The full-vector row must decompose as unordered FFT + Q (computing P and
    /// |S|) + voltage-and-current calibration, in cycles.
    pub fn check_table_consistency(&self) -> Result<()> {
        let t = &self.extraction;
        let sum = t.fft_1024_unordered.cycles + t.q_without_p_and_s.cycles + t.raw_conv_vi.cycles;
        if sum != t.full_vector.cycles {
            return Err(Error::InvalidParameter(format!(
                "full-vector cycles {} != FFT {} + Q {} + RawConv {} = {sum}",
                t.full_vector.cycles,
                t.fft_1024_unordered.cycles,
                t.q_without_p_and_s.cycles,
                t.raw_conv_vi.cycles
            )));
        }
        Ok(())
    }
}

impl Default for CostProfile {
    fn default() -> Self {
        Self::cortex_m4_paper()
    }
}

/// Which extraction stages a feature selection needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureGroups {
    pub p: bool,
    pub s_abs: bool,
    pub q: bool,
    pub harmonics: bool,
}

impl FeatureGroups {
    pub const ALL: Self = Self {
        p: true,
        s_abs: true,
        q: true,
        harmonics: true,
    };

    pub const FREQUENCY_ONLY: Self = Self {
        p: false,
        s_abs: false,
        q: false,
        harmonics: true,
    };

    pub fn from_selection(selected: &[usize], layout: &FeatureLayout) -> Self {
        let mut g = Self::default();
        for d in selected.iter().filter_map(|&k| layout.descriptors().get(k)) {
            match d.kind {
                FeatureKind::RealPower => g.p = true,
                FeatureKind::ApparentPower => g.s_abs = true,
                FeatureKind::ReactivePower => g.q = true,
                _ => g.harmonics = true,
            }
        }
        g
    }

    /// Whether any selected feature needs the voltage channel.
    pub fn needs_voltage(&self) -> bool {
        self.p || self.s_abs || self.q
    }

    pub fn is_empty(&self) -> bool {
        !(self.needs_voltage() || self.harmonics)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExtractionOptions {
    /// Use the bit-reversal-reordered FFT instead of the unordered one.
    pub reorder_fft: bool,
}

/// Sum the table rows a selection needs, picking the cheapest Q variant and
/// current-only calibration when no time-domain feature is selected.
///
/// The complete vector uses the measured full-vector row verbatim; any other
/// selection is capped componentwise by it, so no subset costs more than the
/// whole.
pub fn extraction_cost(
    groups: FeatureGroups,
    profile: &CostProfile,
    options: ExtractionOptions,
) -> ResourceUsage {
    let t = &profile.extraction;
    if groups.is_empty() {
        return ResourceUsage::ZERO;
    }
    if groups == FeatureGroups::ALL && !options.reorder_fft {
        return t.full_vector;
    }
    let mut rows = Vec::with_capacity(5);
    rows.push(if groups.needs_voltage() {
        t.raw_conv_vi
    } else {
        t.raw_conv_i
    });
    if groups.p {
        rows.push(t.p);
    }
    if groups.s_abs {
        rows.push(t.s_abs);
    }
    if groups.q {
        rows.push(match (groups.p, groups.s_abs) {
            (true, true) => t.q_with_p_and_s,
            (false, true) => t.q_without_p,
            (true, false) => t.q_without_s,
            (false, false) => t.q_without_p_and_s,
        });
    }
    if groups.harmonics {
        rows.push(if options.reorder_fft {
            t.fft_1024
        } else {
            t.fft_1024_unordered
        });
    }
    let sum: ResourceUsage = rows.into_iter().sum();
    if options.reorder_fft {
        sum
    } else {
        sum.min(t.full_vector)
    }
}

/// Size parameters that drive classification cost; can be taken from a
/// trained model or written down directly for what-if analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ModelShape {
    Knn {
        n_rows: usize,
        n_features: usize,
        k: usize,
        n_classes: usize,
    },
    Svm {
        n_sv: usize,
        n_features: usize,
        n_classes: usize,
        rbf: bool,
    },
    Mlp {
        /// `[inputs, hidden…, classes]`.
        sizes: Vec<usize>,
    },
    Rf {
        n_trees: usize,
        node_count: usize,
        /// Σ over trees of the worst-case root-to-leaf comparisons.
        depth_sum: usize,
        n_classes: usize,
    },
}

impl ModelShape {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelShape::Knn { .. } => ModelKind::Knn,
            ModelShape::Svm { .. } => ModelKind::Svm,
            ModelShape::Mlp { .. } => ModelKind::Mlp,
            ModelShape::Rf { .. } => ModelKind::Rf,
        }
    }
}

impl From<&Classifier> for ModelShape {
    fn from(c: &Classifier) -> Self {
        match c {
            Classifier::Knn(m) => ModelShape::Knn {
                n_rows: m.n_rows(),
                n_features: m.n_features(),
                k: m.k(),
                n_classes: m.n_classes(),
            },
            Classifier::Svm(m) => ModelShape::Svm {
                n_sv: m.n_sv(),
                n_features: m.n_features(),
                n_classes: m.n_classes(),
                rbf: matches!(m.kernel(), crate::models::Kernel::Rbf { .. }),
            },
            Classifier::Mlp(m) => ModelShape::Mlp { sizes: m.sizes() },
            Classifier::Rf(m) => ModelShape::Rf {
                n_trees: m.trees().len(),
                node_count: m.node_count(),
                depth_sum: m.trees().iter().map(|t| t.depth()).sum(),
                n_classes: m.n_classes(),
            },
        }
    }
}

fn mlp_weights(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1]).sum()
}

/// Inference multiply-accumulates (tree comparisons count as one each).
pub fn model_macs(shape: &ModelShape) -> u64 {
    let macs = match *shape {
        ModelShape::Knn {
            n_rows, n_features, ..
        } => n_features * n_rows,
        ModelShape::Svm {
            n_sv,
            n_features,
            n_classes,
            ..
        } => n_sv * n_features + n_sv * n_classes.saturating_sub(1),
        ModelShape::Mlp { ref sizes } => mlp_weights(sizes),
        ModelShape::Rf { depth_sum, .. } => depth_sum,
    };
    macs as u64
}

/// Stored-parameter footprint.
pub fn model_flash(shape: &ModelShape, profile: &CostProfile) -> u64 {
    let bpp = profile.bytes_per_parameter;
    match *shape {
        ModelShape::Knn {
            n_rows, n_features, ..
        } => (n_rows * n_features) as u64 * bpp,
        ModelShape::Svm {
            n_sv,
            n_features,
            n_classes,
            ..
        } => {
            let c = n_classes;
            (n_sv * n_features + n_sv * c.saturating_sub(1) + c * c.saturating_sub(1) / 2) as u64
                * bpp
        }
        ModelShape::Mlp { ref sizes } => {
            let biases: usize = sizes.iter().skip(1).sum();
            (mlp_weights(sizes) + biases) as u64 * bpp
        }
        ModelShape::Rf {
            n_trees,
            node_count,
            ..
        } => node_count as u64 * profile.rf_node_bytes + n_trees as u64 * profile.rf_code_overhead_bytes,
    }
}

/// Working buffers during inference (input vector included).
pub fn model_sram(shape: &ModelShape, profile: &CostProfile) -> u64 {
    let bpp = profile.bytes_per_parameter;
    let words = match *shape {
        ModelShape::Knn {
            n_features,
            k,
            n_classes,
            ..
        } => n_features + 2 * k + n_classes,
        ModelShape::Svm {
            n_sv,
            n_features,
            n_classes,
            ..
        } => n_features + n_sv + n_classes + n_classes * n_classes.saturating_sub(1) / 2,
        ModelShape::Mlp { ref sizes } => {
            let widest = sizes.iter().copied().max().unwrap_or(0);
            sizes.first().copied().unwrap_or(0) + 2 * widest
        }
        ModelShape::Rf { n_classes, .. } => n_classes,
    };
    words as u64 * bpp
}

pub fn model_cycles(shape: &ModelShape, profile: &CostProfile) -> u64 {
    let c = profile.coefficients(shape.kind());
    let kernel_evals = match *shape {
        ModelShape::Svm { n_sv, rbf: true, .. } => n_sv as f64,
        _ => 0.0,
    };
    let cycles = model_macs(shape) as f64 * c.cycles_per_mac
        + kernel_evals * c.cycles_per_kernel_eval
        + c.fixed_overhead_cycles;
    math::round(cycles) as u64
}

pub fn classification_cost(shape: &ModelShape, profile: &CostProfile) -> ResourceUsage {
    ResourceUsage {
        sram_bytes: model_sram(shape, profile),
        flash_bytes: model_flash(shape, profile),
        mac: model_macs(shape),
        cycles: model_cycles(shape, profile),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BudgetVerdict {
    pub fits_cycles: bool,
    pub fits_flash: bool,
    pub fits_sram: bool,
    /// Budget minus usage; negative when over.
    pub cycles_margin: i64,
    pub flash_margin_bytes: i64,
    pub sram_margin_bytes: i64,
}

impl BudgetVerdict {
    pub fn fits(&self) -> bool {
        self.fits_cycles && self.fits_flash && self.fits_sram
    }
}

pub fn budget_check(total: &ResourceUsage, profile: &CostProfile) -> BudgetVerdict {
    let margin = |budget: u64, used: u64| budget as i64 - used as i64;
    BudgetVerdict {
        fits_cycles: total.cycles <= profile.window_budget_cycles,
        fits_flash: total.flash_bytes <= profile.flash_total_bytes,
        fits_sram: total.sram_bytes <= profile.sram_total_bytes,
        cycles_margin: margin(profile.window_budget_cycles, total.cycles),
        flash_margin_bytes: margin(profile.flash_total_bytes, total.flash_bytes),
        sram_margin_bytes: margin(profile.sram_total_bytes, total.sram_bytes),
    }
}

/// Cycles left for classification after extraction.
pub fn classification_headroom(extraction: &ResourceUsage, profile: &CostProfile) -> i64 {
    profile.window_budget_cycles as i64 - extraction.cycles as i64
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostReport {
    pub profile: String,
    pub extraction: ResourceUsage,
    pub classification: ResourceUsage,
    pub total: ResourceUsage,
    pub verdict: BudgetVerdict,
}

pub fn cost_report(
    groups: FeatureGroups,
    shape: &ModelShape,
    profile: &CostProfile,
    options: ExtractionOptions,
) -> CostReport {
    let extraction = extraction_cost(groups, profile, options);
    let classification = classification_cost(shape, profile);
    let total = extraction + classification;
    CostReport {
        profile: profile.name.clone(),
        extraction,
        classification,
        total,
        verdict: budget_check(&total, profile),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn profile() -> CostProfile {
        CostProfile::cortex_m4_paper()
    }

    fn groups(p: bool, s_abs: bool, q: bool, harmonics: bool) -> FeatureGroups {
        FeatureGroups {
            p,
            s_abs,
            q,
            harmonics,
        }
    }

    fn mlp(sizes: &[usize]) -> ModelShape {
        ModelShape::Mlp {
            sizes: sizes.to_vec(),
        }
    }

    #[test]
    fn shipped_profile_is_consistent() {
        profile().validate().unwrap();
        let mut broken = profile();
        broken.extraction.full_vector.cycles = 104_000;
        assert!(broken.check_table_consistency().is_err());
    }

    #[test]
    fn full_vector_extraction() {
        let c = extraction_cost(FeatureGroups::ALL, &profile(), ExtractionOptions::default());
        assert_eq!(c, ResourceUsage::new(24_000, 14_100, 18_240, 105_000));
    }

    #[test]
    fn frequency_only_extraction() {
        let c = extraction_cost(FeatureGroups::FREQUENCY_ONLY, &profile(), ExtractionOptions::default());
        assert_eq!(c.cycles, 9_000 + 62_000);
        assert!(!FeatureGroups::FREQUENCY_ONLY.needs_voltage());
    }

    #[test]
    fn real_power_alone() {
        let c = extraction_cost(groups(true, false, false, false), &profile(), ExtractionOptions::default());
        assert_eq!(c.cycles, 32_000);
    }

    #[test]
    fn cheapest_q_variant() {
        let p = profile();
        let o = ExtractionOptions::default();
        let q_only = extraction_cost(groups(false, false, true, false), &p, o);
        assert_eq!(q_only.cycles, 15_000 + 28_000);
        let q_s = extraction_cost(groups(false, true, true, false), &p, o);
        assert_eq!(q_s.cycles, 15_000 + 11_000 + 17_000);
        let all_time = extraction_cost(groups(true, true, true, false), &p, o);
        assert_eq!(all_time.cycles, 15_000 + 17_000 + 11_000 + 80);
        let reordered = extraction_cost(FeatureGroups::FREQUENCY_ONLY, &p, ExtractionOptions { reorder_fft: true });
        assert_eq!(reordered.cycles, 9_000 + 66_000);
    }

    #[test]
    fn selection_to_groups() {
        let layout = FeatureLayout::default();
        assert_eq!(FeatureGroups::from_selection(&[0, 1, 2, 3], &layout), FeatureGroups::ALL);
        assert_eq!(FeatureGroups::from_selection(&[40, 3], &layout), FeatureGroups::FREQUENCY_ONLY);
        assert!(FeatureGroups::from_selection(&[], &layout).is_empty());
    }

    #[test]
    fn svm_paper_sizing() {
        let svm = ModelShape::Svm {
            n_sv: 1950,
            n_features: 103,
            n_classes: 10,
            rbf: true,
        };
        assert_eq!(model_macs(&svm), 218_400);
        assert_eq!(model_flash(&svm, &profile()), 873_780);
        assert!((873_780.0 / 871_900.0 - 1.0f64).abs() < 0.01);
    }

    #[test]
    fn mlp_paper_sizing() {
        let p = profile();
        assert_eq!(model_macs(&mlp(&[100, 800, 100, 5])), 160_500);
        assert_eq!(model_flash(&mlp(&[100, 800, 100, 5]), &p), 645_620);
        let small = model_flash(&mlp(&[34, 800, 100, 5]), &p);
        assert_eq!(small, 434_420);
        assert!((small as f64 / 432_700.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn calibrated_cycles() {
        let p = profile();
        let big = model_cycles(&mlp(&[100, 800, 100, 5]), &p) as f64;
        assert!((big / 1_588_000.0 - 1.0).abs() < 0.10, "{big}");
        let small = model_cycles(&mlp(&[34, 800, 100, 5]), &p) as f64;
        assert!((small / 1_081_000.0 - 1.0).abs() < 0.10, "{small}");
        let svm = ModelShape::Svm {
            n_sv: 1950,
            n_features: 103,
            n_classes: 10,
            rbf: true,
        };
        let c = model_cycles(&svm, &p) as f64;
        assert!((c / 2_065_000.0 - 1.0).abs() < 0.10, "{c}");
    }

    #[test]
    fn degenerate_models() {
        let p = profile();
        let leaf = ModelShape::Rf {
            n_trees: 3,
            node_count: 3,
            depth_sum: 0,
            n_classes: 2,
        };
        assert_eq!(model_macs(&leaf), 0);
        assert_eq!(model_cycles(&leaf, &p), p.rf.fixed_overhead_cycles as u64);
        let empty = mlp(&[]);
        assert_eq!(model_cycles(&empty, &p), math::round(p.mlp.fixed_overhead_cycles) as u64);
    }

    #[test]
    fn budget_examples() {
        let p = profile();
        let extraction = extraction_cost(FeatureGroups::ALL, &p, ExtractionOptions::default());
        assert_eq!(classification_headroom(&extraction, &p), 8_295_000);
        let at_limit = extraction + ResourceUsage::new(0, 0, 0, 8_295_000);
        let v = budget_check(&at_limit, &p);
        assert!(v.fits_cycles);
        assert_eq!(v.cycles_margin, 0);
        assert!(!budget_check(&(at_limit + ResourceUsage::new(0, 0, 0, 1)), &p).fits_cycles);

        let framework = extraction.flash_bytes + model_flash(&mlp(&[100, 800, 100, 5]), &p);
        assert_eq!(framework, 659_720);
        let v = budget_check(&ResourceUsage::new(0, framework, 0, 0), &p);
        assert!(!v.fits_flash);
        assert_eq!(v.flash_margin_bytes, -147_720);

        let v = budget_check(&ResourceUsage::ZERO, &p);
        assert!(v.fits());
        assert_eq!(v.flash_margin_bytes, 512_000);
        assert_eq!(v.sram_margin_bytes, 96_000);
    }

    #[test]
    fn report_totals_are_sums() {
        let p = profile();
        let r = cost_report(FeatureGroups::ALL, &mlp(&[103, 800, 100, 5]), &p, ExtractionOptions::default());
        assert_eq!(r.total, r.extraction + r.classification);
        assert_eq!(r.verdict, budget_check(&r.total, &p));
    }

    fn all_groups() -> Vec<FeatureGroups> {
        (0..16u8)
            .map(|b| groups(b & 1 != 0, b & 2 != 0, b & 4 != 0, b & 8 != 0))
            .collect()
    }

    fn le(a: &ResourceUsage, b: &ResourceUsage) -> bool {
        a.sram_bytes <= b.sram_bytes && a.flash_bytes <= b.flash_bytes && a.mac <= b.mac && a.cycles <= b.cycles
    }

    #[test]
    fn extraction_is_monotone_in_groups() {
        let p = profile();
        for reorder_fft in [false, true] {
            let o = ExtractionOptions { reorder_fft };
            for a in all_groups() {
                for b in all_groups() {
                    let subset = (!a.p || b.p) && (!a.s_abs || b.s_abs) && (!a.q || b.q) && (!a.harmonics || b.harmonics);
                    if subset {
                        assert!(le(&extraction_cost(a, &p, o), &extraction_cost(b, &p, o)), "{a:?} ⊆ {b:?}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn model_costs_are_monotone(f in 1usize..120, n in 1usize..3000, c in 2usize..12, h in 1usize..900) {
            let p = profile();
            let cmp = |a: &ModelShape, b: &ModelShape| le(&classification_cost(a, &p), &classification_cost(b, &p));
            let svm = |n_sv, f, c| ModelShape::Svm { n_sv, n_features: f, n_classes: c, rbf: true };
            prop_assert!(cmp(&svm(n, f, c), &svm(n + 1, f, c)));
            prop_assert!(cmp(&svm(n, f, c), &svm(n, f + 1, c)));
            prop_assert!(cmp(&mlp(&[f, h, 100, c]), &mlp(&[f + 1, h, 100, c])));
            prop_assert!(cmp(&mlp(&[f, h, 100, c]), &mlp(&[f, h + 1, 100, c])));
            let knn = |n_rows, f| ModelShape::Knn { n_rows, n_features: f, k: 5, n_classes: c };
            prop_assert!(cmp(&knn(n, f), &knn(n + 1, f)));
            prop_assert!(cmp(&knn(n, f), &knn(n, f + 1)));
            let rf = |t: usize| ModelShape::Rf { n_trees: t, node_count: 9 * t, depth_sum: 4 * t, n_classes: c };
            prop_assert!(cmp(&rf(n), &rf(n + 1)));
        }

        #[test]
        fn flash_is_linear_in_parameters(f in 1usize..120, n in 1usize..3000, c in 2usize..12) {
            let mut p = profile();
            let shapes = [
                ModelShape::Knn { n_rows: n, n_features: f, k: 3, n_classes: c },
                ModelShape::Svm { n_sv: n, n_features: f, n_classes: c, rbf: false },
                mlp(&[f, n, c]),
            ];
            for s in &shapes {
                p.bytes_per_parameter = 1;
                let params = model_flash(s, &p);
                p.bytes_per_parameter = 4;
                prop_assert_eq!(model_flash(s, &p), 4 * params);
            }
        }
    }

    #[test]
    fn mlp_sram_tracks_widest_layer() {
        let p = profile();
        assert_eq!(model_sram(&mlp(&[34, 800, 100, 5]), &p), (34 + 1600) * 4);
        let _ = vec![0u8];
    }
}
