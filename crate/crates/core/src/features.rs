//! Per-window feature extraction: real, apparent and reactive power from the
//! voltage/current pair, and odd 50 Hz current harmonics from a 1024-point FFT.
//!
//! The canonical layout has 103 entries:
//!
//! ```text
//! [P, |S|, Q, H1.re, H1.im, H3.re, H3.im, ..., H99.re, H99.im]
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fft::Radix2Fft;
use crate::math;
use crate::signal::{SampleWindow, SAMPLE_RATE_HZ, WINDOW_LEN};
use crate::{Error, Result};

pub const FFT_LEN: usize = 1024;
/// One-sided bins of the 1024-point transform, DC through Nyquist.
pub const SPECTRUM_BINS: usize = FFT_LEN / 2 + 1;
pub const MAINS_HZ: f64 = 50.0;
pub const MAX_HARMONIC: u32 = 99;
/// Number of odd harmonics 1, 3, ..., 99.
pub const HARMONIC_COUNT: usize = 50;
/// Length of the default (complex-harmonic) layout.
pub const FEATURE_COUNT: usize = 3 + 2 * HARMONIC_COUNT;

pub const IDX_P: usize = 0;
pub const IDX_S: usize = 1;
pub const IDX_Q: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Unit {
    W,
    VA,
    VAR,
    A,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::W => "W",
            Unit::VA => "VA",
            Unit::VAR => "VAR",
            Unit::A => "A",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FeatureKind {
    RealPower,
    ApparentPower,
    ReactivePower,
    HarmonicRe(u32),
    HarmonicIm(u32),
    HarmonicMagnitude(u32),
}

impl FeatureKind {
    pub fn is_time_domain(self) -> bool {
        matches!(
            self,
            FeatureKind::RealPower | FeatureKind::ApparentPower | FeatureKind::ReactivePower
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureDescriptor {
    pub name: String,
    pub unit: Unit,
    pub kind: FeatureKind,
}

/// How harmonics are encoded in the frequency part of the vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HarmonicMode {
    /// Real and imaginary part of each harmonic (100 entries).
    #[default]
    Complex,
    /// Magnitude only (50 entries), for experiments.
    Magnitude,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureLayout {
    mode: HarmonicMode,
    descriptors: Vec<FeatureDescriptor>,
}

impl Default for FeatureLayout {
    fn default() -> Self {
        Self::new(HarmonicMode::Complex)
    }
}

impl FeatureLayout {
    pub fn new(mode: HarmonicMode) -> Self {
        let mut descriptors = vec![
            descriptor("P", Unit::W, FeatureKind::RealPower),
            descriptor("S_abs", Unit::VA, FeatureKind::ApparentPower),
            descriptor("Q", Unit::VAR, FeatureKind::ReactivePower),
        ];
        for k in harmonic_orders() {
            match mode {
                HarmonicMode::Complex => {
                    descriptors.push(descriptor(
                        &format!("H{k}_re"),
                        Unit::A,
                        FeatureKind::HarmonicRe(k),
                    ));
                    descriptors.push(descriptor(
                        &format!("H{k}_im"),
                        Unit::A,
                        FeatureKind::HarmonicIm(k),
                    ));
                }
                HarmonicMode::Magnitude => descriptors.push(descriptor(
                    &format!("H{k}_mag"),
                    Unit::A,
                    FeatureKind::HarmonicMagnitude(k),
                )),
            }
        }
        Self { mode, descriptors }
    }

    pub fn mode(&self) -> HarmonicMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.descriptors
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.descriptors.iter().map(|d| d.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.descriptors.iter().position(|d| d.name == name)
    }

    /// Indices of P, |S| and Q.
    pub fn time_domain_indices(&self) -> Vec<usize> {
        (0..3).collect()
    }

    /// Indices of every harmonic entry.
    pub fn frequency_indices(&self) -> Vec<usize> {
        (3..self.len()).collect()
    }
}

fn descriptor(name: &str, unit: Unit, kind: FeatureKind) -> FeatureDescriptor {
    FeatureDescriptor {
        name: name.into(),
        unit,
        kind,
    }
}

/// Odd harmonic orders 1, 3, ..., 99.
pub fn harmonic_orders() -> impl Iterator<Item = u32> {
    (1..=MAX_HARMONIC).step_by(2)
}

/// Nearest FFT bin to `order × 50 Hz`; bins are 10000/1024 Hz wide.
pub fn harmonic_bin(order: u32) -> usize {
    // round(50·k·1024/10000) in integers; 50·k·1024 mod 10000 is never 5000 for odd k.
    let num = u64::from(order) * 50 * FFT_LEN as u64;
    ((num + u64::from(SAMPLE_RATE_HZ) / 2) / u64::from(SAMPLE_RATE_HZ)) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<Complex64>,
}

impl Spectrum {
    pub const BIN_HZ: f64 = SAMPLE_RATE_HZ as f64 / FFT_LEN as f64;

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub window_index: usize,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Mean instantaneous power over the window.
pub fn real_power(w: &SampleWindow) -> f64 {
    let sum: f64 = w.v().iter().zip(w.i()).map(|(v, i)| v * i).sum();
    sum / WINDOW_LEN as f64
}

fn rms(x: &[f64]) -> f64 {
    math::sqrt(x.iter().map(|a| a * a).sum::<f64>() / x.len() as f64)
}

/// `V_rms · I_rms` over the window.
pub fn apparent_power(w: &SampleWindow) -> f64 {
    rms(w.v()) * rms(w.i())
}

/// `sqrt(max(0, |S|² − P²))`; the clamp absorbs rounding when |P| ≳ |S|.
pub fn reactive_power(p: f64, s_abs: f64) -> f64 {
    math::sqrt((s_abs * s_abs - p * p).max(0.0))
}

/// One-sided spectrum of the current zero-padded from 1000 to 1024 samples.
pub fn fft_1024(current: &[f64]) -> Result<Spectrum> {
    let plan = Radix2Fft::new(FFT_LEN)?;
    spectrum_with(&plan, current)
}

fn spectrum_with(plan: &Radix2Fft, current: &[f64]) -> Result<Spectrum> {
    if current.len() != WINDOW_LEN {
        return Err(Error::DimensionMismatch {
            expected: WINDOW_LEN,
            got: current.len(),
        });
    }
    let mut full = plan.process_real(current)?;
    full.truncate(SPECTRUM_BINS);
    // Exact for real input; the butterflies leave rounding residue.
    full[0].im = 0.0;
    full[SPECTRUM_BINS - 1].im = 0.0;
    Ok(Spectrum { bins: full })
}

/// Odd harmonics as (re, im) pairs or magnitudes, scaled by 2/1000 so a
/// unit-amplitude tone reads ≈ 1 A.
pub fn extract_harmonics(spectrum: &Spectrum, layout: &FeatureLayout) -> Vec<f64> {
    let scale = 2.0 / WINDOW_LEN as f64;
    let mut out = Vec::with_capacity(layout.len() - 3);
    for k in harmonic_orders() {
        let c = spectrum.bins[harmonic_bin(k)] * scale;
        match layout.mode() {
            HarmonicMode::Complex => {
                out.push(c.re);
                out.push(c.im);
            }
            HarmonicMode::Magnitude => out.push(c.norm()),
        }
    }
    out
}

/// Reusable extractor holding one FFT plan.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    plan: Radix2Fft,
    layout: FeatureLayout,
}

impl FeatureExtractor {
    pub fn new(layout: FeatureLayout) -> Self {
        Self {
            plan: Radix2Fft::new(FFT_LEN).expect("1024 is a power of two"),
            layout,
        }
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn extract(&self, w: &SampleWindow) -> FeatureVector {
        let p = real_power(w);
        let s = apparent_power(w);
        let q = reactive_power(p, s);
        let spectrum =
            spectrum_with(&self.plan, w.i()).expect("windows always hold 1000 samples");
        let mut values = Vec::with_capacity(self.layout.len());
        values.extend([p, s, q]);
        values.extend(extract_harmonics(&spectrum, &self.layout));
        FeatureVector {
            values,
            window_index: w.index(),
        }
    }
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::new(FeatureLayout::default())
    }
}

pub fn extract_features(w: &SampleWindow, layout: &FeatureLayout) -> FeatureVector {
    FeatureExtractor::new(layout.clone()).extract(w)
}

/// Check that `indices` are distinct and below `len`.
pub fn validate_selection(indices: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    for &index in indices {
        if index >= len {
            return Err(Error::IndexOutOfBounds { index, len });
        }
        if core::mem::replace(&mut seen[index], true) {
            return Err(Error::DuplicateIndex(index));
        }
    }
    Ok(())
}

/// Project `values` onto `indices`, keeping the order of `indices`.
pub fn select_features(values: &[f64], indices: &[usize]) -> Result<Vec<f64>> {
    validate_selection(indices, values.len())?;
    Ok(indices.iter().map(|&k| values[k]).collect())
}
