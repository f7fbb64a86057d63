//! Sample streams: ADC calibration, pair averaging, 100 ms windowing, and a
//! synthetic generator that emulates the measurement node's calibrated output.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_distr::{Distribution, Normal};

use crate::math;
use crate::rng;
use crate::{Error, Result};

/// Largest 14-bit ADC code.
pub const MAX_ADC_CODE: u16 = 16383;
/// Mid-scale code, mapped to 0 V / 0 A by bipolar calibration.
pub const MID_SCALE_CODE: u16 = 8192;
/// ADC trigger rate before pair averaging.
pub const RAW_RATE_HZ: u32 = 20_000;
/// Effective rate after pair averaging.
pub const SAMPLE_RATE_HZ: u32 = 10_000;
/// Samples per channel in one 100 ms window.
pub const WINDOW_LEN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationCoefficients {
    pub gain_v: f64,
    pub offset_v: f64,
    pub gain_i: f64,
    pub offset_i: f64,
}

impl CalibrationCoefficients {
    pub fn new(gain_v: f64, offset_v: f64, gain_i: f64, offset_i: f64) -> Result<Self> {
        let c = Self {
            gain_v,
            offset_v,
            gain_i,
            offset_i,
        };
        c.validate()?;
        Ok(c)
    }

    /// Symmetric mapping of the 14-bit code range onto `[-full_scale, +full_scale)`,
    /// with the mid-scale code landing on zero.
    pub fn bipolar(full_scale_v: f64, full_scale_i: f64) -> Result<Self> {
        let half = f64::from(MID_SCALE_CODE);
        Self::new(
            full_scale_v / half,
            -full_scale_v,
            full_scale_i / half,
            -full_scale_i,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.gain_v, self.offset_v, self.gain_i, self.offset_i]
            .iter()
            .all(|x| x.is_finite());
        if !finite || self.gain_v <= 0.0 || self.gain_i <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "calibration gains must be finite and positive: {self:?}"
            )));
        }
        Ok(())
    }
}

impl Default for CalibrationCoefficients {
    /// 0–2.5 V unipolar ADC input read as a ±1.25 V bipolar signal on both channels.
    fn default() -> Self {
        Self::bipolar(1.25, 1.25).expect("constant coefficients are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSampleBlock {
    pub codes_v: Vec<u16>,
    pub codes_i: Vec<u16>,
    pub rate_hz: u32,
}

impl RawSampleBlock {
    pub fn new(codes_v: Vec<u16>, codes_i: Vec<u16>, rate_hz: u32) -> Result<Self> {
        let block = Self {
            codes_v,
            codes_i,
            rate_hz,
        };
        block.validate()?;
        Ok(block)
    }

    pub fn validate(&self) -> Result<()> {
        if self.codes_v.len() != self.codes_i.len() {
            return Err(Error::LengthMismatch {
                left: self.codes_v.len(),
                right: self.codes_i.len(),
            });
        }
        for channel in [&self.codes_v, &self.codes_i] {
            if let Some((index, &code)) = channel
                .iter()
                .enumerate()
                .find(|(_, &c)| c > MAX_ADC_CODE)
            {
                return Err(Error::CodeOutOfRange { index, code });
            }
        }
        Ok(())
    }
}

/// Paired voltage/current samples in physical units.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleStream {
    pub v: Vec<f64>,
    pub i: Vec<f64>,
    pub rate_hz: f64,
}

impl SampleStream {
    pub fn new(v: Vec<f64>, i: Vec<f64>, rate_hz: f64) -> Result<Self> {
        if v.len() != i.len() {
            return Err(Error::LengthMismatch {
                left: v.len(),
                right: i.len(),
            });
        }
        Ok(Self { v, i, rate_hz })
    }

    pub fn empty(rate_hz: f64) -> Self {
        Self {
            v: Vec::new(),
            i: Vec::new(),
            rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Pair-average both channels, halving the rate.
    pub fn decimate(&self) -> Result<Self> {
        Ok(Self {
            v: decimate_average(&self.v)?,
            i: decimate_average(&self.i)?,
            rate_hz: self.rate_hz / 2.0,
        })
    }

    pub fn windows(&self) -> Windows<'_> {
        window_stream(self)
    }
}

/// `out[k] = codes[k] * gain + offset` on each channel.
pub fn calibrate_raw(
    block: &RawSampleBlock,
    coeffs: &CalibrationCoefficients,
) -> Result<SampleStream> {
    block.validate()?;
    coeffs.validate()?;
    let v = block
        .codes_v
        .iter()
        .map(|&c| f64::from(c) * coeffs.gain_v + coeffs.offset_v)
        .collect();
    let i = block
        .codes_i
        .iter()
        .map(|&c| f64::from(c) * coeffs.gain_i + coeffs.offset_i)
        .collect();
    SampleStream::new(v, i, f64::from(block.rate_hz))
}

/// Average successive sample pairs: `out[k] = (x[2k] + x[2k+1]) / 2`.
pub fn decimate_average(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() % 2 != 0 {
        return Err(Error::OddLength(samples.len()));
    }
    Ok(samples
        .chunks_exact(2)
        .map(|pair| (pair[0] + pair[1]) / 2.0)
        .collect())
}

/// One 100 ms frame: exactly [`WINDOW_LEN`] samples per channel at 10 kHz.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    v: Vec<f64>,
    i: Vec<f64>,
    index: usize,
}

impl SampleWindow {
    pub fn new(index: usize, v: Vec<f64>, i: Vec<f64>) -> Result<Self> {
        for len in [v.len(), i.len()] {
            if len != WINDOW_LEN {
                return Err(Error::DimensionMismatch {
                    expected: WINDOW_LEN,
                    got: len,
                });
            }
        }
        Ok(Self { v, i, index })
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn i(&self) -> &[f64] {
        &self.i
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn rate_hz(&self) -> u32 {
        SAMPLE_RATE_HZ
    }
}

/// Non-overlapping windows aligned at sample 0; a trailing partial window is dropped.
#[derive(Debug, Clone)]
pub struct Windows<'a> {
    v: &'a [f64],
    i: &'a [f64],
    next: usize,
}

pub fn window_stream(stream: &SampleStream) -> Windows<'_> {
    let n = stream.v.len().min(stream.i.len());
    Windows {
        v: &stream.v[..n],
        i: &stream.i[..n],
        next: 0,
    }
}

impl Iterator for Windows<'_> {
    type Item = SampleWindow;

    fn next(&mut self) -> Option<SampleWindow> {
        let start = self.next * WINDOW_LEN;
        let end = start + WINDOW_LEN;
        if end > self.v.len() {
            return None;
        }
        let window = SampleWindow {
            v: self.v[start..end].to_vec(),
            i: self.i[start..end].to_vec(),
            index: self.next,
        };
        self.next += 1;
        Some(window)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.v.len() / WINDOW_LEN - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Windows<'_> {}

// --- synthetic generator ---------------------------------------------------

/// Sinusoidal mains voltage `v(t) = amplitude * sin(2π f t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mains {
    pub amplitude_v: f64,
    pub freq_hz: f64,
}

impl Mains {
    pub fn rms(&self) -> f64 {
        self.amplitude_v / core::f64::consts::SQRT_2
    }

    fn omega(&self) -> f64 {
        2.0 * PI * self.freq_hz
    }

    pub fn voltage(&self, sample: usize) -> f64 {
        math::sin(self.omega() * sample_time(sample))
    }
}

impl Default for Mains {
    /// 230 V rms, 50 Hz.
    fn default() -> Self {
        Self {
            amplitude_v: 230.0 * core::f64::consts::SQRT_2,
            freq_hz: 50.0,
        }
    }
}

fn sample_time(sample: usize) -> f64 {
    sample as f64 / f64::from(SAMPLE_RATE_HZ)
}

/// Mains voltage for `n` samples starting at t = 0.
pub fn mains_voltage(mains: &Mains, n: usize) -> Vec<f64> {
    (0..n).map(|k| mains.amplitude_v * mains.voltage(k)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ApplianceKind {
    /// Current in phase with the mains voltage.
    Resistive,
    /// Sinusoidal current lagging the voltage by `phase_rad`.
    Reactive { phase_rad: f64 },
    /// Sum of in-phase odd harmonics; amplitudes relative to the fundamental.
    Rectifier { harmonics: BTreeMap<u32, f64> },
    /// Leading-edge dimmer: mains-proportional current, zero before the cut
    /// angle in every half cycle.
    PhaseCut { cut_angle_rad: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApplianceModel {
    pub kind: ApplianceKind,
    pub nominal_power_w: f64,
    pub noise_rms_a: f64,
}

impl ApplianceModel {
    pub fn resistive(nominal_power_w: f64) -> Self {
        Self {
            kind: ApplianceKind::Resistive,
            nominal_power_w,
            noise_rms_a: 0.0,
        }
    }

    pub fn reactive(nominal_power_w: f64, phase_rad: f64) -> Self {
        Self {
            kind: ApplianceKind::Reactive { phase_rad },
            nominal_power_w,
            noise_rms_a: 0.0,
        }
    }

    pub fn rectifier(nominal_power_w: f64, harmonics: &[(u32, f64)]) -> Self {
        Self {
            kind: ApplianceKind::Rectifier {
                harmonics: harmonics.iter().copied().collect(),
            },
            nominal_power_w,
            noise_rms_a: 0.0,
        }
    }

    pub fn phase_cut(nominal_power_w: f64, cut_angle_rad: f64) -> Self {
        Self {
            kind: ApplianceKind::PhaseCut { cut_angle_rad },
            nominal_power_w,
            noise_rms_a: 0.0,
        }
    }

    pub fn with_noise(mut self, noise_rms_a: f64) -> Self {
        self.noise_rms_a = noise_rms_a;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nominal_power_w.is_finite() && self.nominal_power_w > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "nominal power must be positive, got {}",
                self.nominal_power_w
            )));
        }
        if !(self.noise_rms_a.is_finite() && self.noise_rms_a >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise rms must be non-negative, got {}",
                self.noise_rms_a
            )));
        }
        match &self.kind {
            ApplianceKind::Resistive => {}
            ApplianceKind::Reactive { phase_rad } => {
                if !phase_rad.is_finite() {
                    return Err(Error::InvalidParameter("reactive phase must be finite".into()));
                }
            }
            ApplianceKind::Rectifier { harmonics } => {
                if harmonics.get(&1) != Some(&1.0) {
                    return Err(Error::InvalidParameter(
                        "harmonic profile must set order 1 to amplitude 1".into(),
                    ));
                }
                for (&order, &amp) in harmonics {
                    if order % 2 == 0 || !(0.0..=1.0).contains(&amp) {
                        return Err(Error::InvalidParameter(format!(
                            "harmonic {order} with amplitude {amp}: orders must be odd, amplitudes in [0, 1]"
                        )));
                    }
                }
            }
            ApplianceKind::PhaseCut { cut_angle_rad } => {
                if !(0.0..PI).contains(cut_angle_rad) {
                    return Err(Error::InvalidParameter(format!(
                        "cut angle {cut_angle_rad} outside [0, π)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Noise-free current at absolute sample index `sample`.
    fn clean_current(&self, mains: &Mains, sample: usize) -> f64 {
        let vrms = mains.rms();
        let wt = mains.omega() * sample_time(sample);
        let p = self.nominal_power_w;
        match &self.kind {
            ApplianceKind::Resistive => p / (vrms * vrms) * mains.amplitude_v * math::sin(wt),
            ApplianceKind::Reactive { phase_rad } => {
                core::f64::consts::SQRT_2 * p / vrms * math::sin(wt - phase_rad)
            }
            ApplianceKind::Rectifier { harmonics } => {
                let fundamental = core::f64::consts::SQRT_2 * p / vrms;
                harmonics
                    .iter()
                    .map(|(&k, &a)| a * fundamental * math::sin(f64::from(k) * wt))
                    .sum()
            }
            ApplianceKind::PhaseCut { cut_angle_rad } => {
                let alpha = *cut_angle_rad;
                let within_half = wt - PI * math::floor(wt / PI);
                if within_half < alpha {
                    0.0
                } else {
                    // Fraction of full-wave power a leading-edge cut keeps.
                    let kept = 1.0 - alpha / PI + math::sin(2.0 * alpha) / (2.0 * PI);
                    p / (vrms * vrms * kept) * mains.amplitude_v * math::sin(wt)
                }
            }
        }
    }
}

/// Current drawn by one appliance over `n` samples starting at sample 0.
fn appliance_current(model: &ApplianceModel, mains: &Mains, n: usize, seed: u64) -> Vec<f64> {
    let mut current: Vec<f64> = (0..n).map(|k| model.clean_current(mains, k)).collect();
    if model.noise_rms_a > 0.0 {
        let mut rng = rng::stream(seed, 0);
        let normal = Normal::new(0.0, model.noise_rms_a).expect("validated noise level");
        for x in &mut current {
            *x += normal.sample(&mut rng);
        }
    }
    current
}

fn duration_samples(duration_s: f64) -> Result<usize> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    Ok(math::round(duration_s * f64::from(SAMPLE_RATE_HZ)) as usize)
}

/// Current stream at 10 kHz for a single appliance running the whole time.
pub fn synth_appliance(
    model: &ApplianceModel,
    mains: &Mains,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    model.validate()?;
    let n = duration_samples(duration_s)?;
    Ok(appliance_current(model, mains, n, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SwitchAction {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptEvent {
    pub time_s: f64,
    pub appliance_id: String,
    pub action: SwitchAction,
}

/// Timed on/off schedule for a set of appliances sharing one mains supply.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioScript {
    pub mains: Mains,
    pub duration_s: f64,
    pub events: Vec<ScriptEvent>,
}

/// Minimum spacing between switching events for differential features (41 windows).
pub const DELTA_EVENT_SPACING_S: f64 = 4.1;

impl ScenarioScript {
    pub fn validate(&self) -> Result<()> {
        duration_samples(self.duration_s)?;
        let mut on: BTreeMap<&str, bool> = BTreeMap::new();
        let mut last = f64::NEG_INFINITY;
        for e in &self.events {
            if !(e.time_s.is_finite() && e.time_s >= 0.0 && e.time_s <= self.duration_s) {
                return Err(Error::InvalidParameter(format!(
                    "event time {} outside [0, {}]",
                    e.time_s, self.duration_s
                )));
            }
            if e.time_s < last {
                return Err(Error::InvalidParameter("events must be sorted by time".into()));
            }
            last = e.time_s;
            let state = on.entry(e.appliance_id.as_str()).or_insert(false);
            match (e.action, *state) {
                (SwitchAction::On, true) | (SwitchAction::Off, false) => {
                    return Err(Error::InvalidParameter(format!(
                        "appliance `{}` switched {:?} at {} s while already in that state",
                        e.appliance_id, e.action, e.time_s
                    )));
                }
                (SwitchAction::On, false) => *state = true,
                (SwitchAction::Off, true) => *state = false,
            }
        }
        Ok(())
    }

    /// Smallest gap between consecutive events, if there are at least two.
    pub fn min_event_spacing(&self) -> Option<f64> {
        self.events
            .windows(2)
            .map(|w| w[1].time_s - w[0].time_s)
            .reduce(f64::min)
    }

    /// Whether consecutive events are far enough apart for differential features.
    pub fn supports_delta_features(&self) -> bool {
        self.min_event_spacing()
            .map_or(true, |gap| gap >= DELTA_EVENT_SPACING_S)
    }

    /// Only the events of one appliance.
    pub fn solo(&self, appliance_id: &str) -> Self {
        Self {
            mains: self.mains,
            duration_s: self.duration_s,
            events: self
                .events
                .iter()
                .filter(|e| e.appliance_id == appliance_id)
                .cloned()
                .collect(),
        }
    }
}

pub type ApplianceRegistry = BTreeMap<String, ApplianceModel>;

/// A switching event placed on the window grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledEvent {
    pub sample: usize,
    pub window: usize,
    pub appliance_id: String,
    pub action: SwitchAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WindowLabel {
    /// Appliances drawing current at the last sample of the window, sorted.
    pub active: Vec<String>,
    /// Appliances switched inside the window.
    pub toggled: Vec<(String, SwitchAction)>,
}

impl WindowLabel {
    /// Active set joined with `+`, or `none`.
    pub fn active_label(&self) -> String {
        if self.active.is_empty() {
            String::from("none")
        } else {
            self.active.join("+")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelTrack {
    pub windows: Vec<WindowLabel>,
    pub events: Vec<LabeledEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub stream: SampleStream,
    pub labels: LabelTrack,
}

/// Render a script into an aggregate 10 kHz stream plus per-window labels.
///
/// Each appliance gets its own noise stream seeded from `(seed, appliance id)`
/// and is generated over the full duration before masking, so an appliance's
/// contribution does not depend on which other appliances share the script.
pub fn synth_scenario(
    script: &ScenarioScript,
    registry: &ApplianceRegistry,
    seed: u64,
) -> Result<Scenario> {
    script.validate()?;
    let n = duration_samples(script.duration_s)?;
    let to_sample = |t: f64| (math::round(t * f64::from(SAMPLE_RATE_HZ)) as usize).min(n);

    // Per-appliance on intervals in samples, keyed by id.
    let mut intervals: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    let mut open: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &script.events {
        if !registry.contains_key(&e.appliance_id) {
            return Err(Error::UnknownAppliance(e.appliance_id.clone()));
        }
        let s = to_sample(e.time_s);
        match e.action {
            SwitchAction::On => {
                open.insert(&e.appliance_id, s);
                intervals.entry(&e.appliance_id).or_default();
            }
            SwitchAction::Off => {
                let start = open.remove(e.appliance_id.as_str()).expect("validated script");
                intervals.entry(&e.appliance_id).or_default().push((start, s));
            }
        }
    }
    for (id, start) in open {
        intervals.entry(id).or_default().push((start, n));
    }

    let mut current = vec![0.0; n];
    for (&id, spans) in &intervals {
        let model = &registry[id];
        model.validate()?;
        let own = appliance_current(model, &script.mains, n, rng::derive_seed(seed, id.as_bytes()));
        for &(start, end) in spans {
            for k in start..end {
                current[k] += own[k];
            }
        }
    }
    let voltage = mains_voltage(&script.mains, n);

    let n_windows = n / WINDOW_LEN;
    let mut windows = vec![WindowLabel::default(); n_windows];
    for (w, label) in windows.iter_mut().enumerate() {
        let last = w * WINDOW_LEN + WINDOW_LEN - 1;
        label.active = intervals
            .iter()
            .filter(|(_, spans)| spans.iter().any(|&(s, e)| s <= last && last < e))
            .map(|(&id, _)| String::from(id))
            .collect();
    }
    let mut events = Vec::with_capacity(script.events.len());
    for e in &script.events {
        let sample = to_sample(e.time_s);
        let window = sample / WINDOW_LEN;
        if let Some(label) = windows.get_mut(window) {
            label.toggled.push((e.appliance_id.clone(), e.action));
        }
        events.push(LabeledEvent {
            sample,
            window,
            appliance_id: e.appliance_id.clone(),
            action: e.action,
        });
    }

    Ok(Scenario {
        stream: SampleStream::new(voltage, current, f64::from(SAMPLE_RATE_HZ))?,
        labels: LabelTrack { windows, events },
    })
}
