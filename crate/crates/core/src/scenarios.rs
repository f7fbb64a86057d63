//! Labelled synthetic datasets standing in for recorded appliance data.
//!
//! - [`ScenarioKind::SingleAppliance`]: one steady-state window per instance,
//!   seven appliance classes, with per-instance jitter of power, phase,
//!   harmonic content, mains amplitude and noise.
//! - [`ScenarioKind::MultiAppliance`]: random on/off scripts over five
//!   appliances with events at least 4.5 s apart; one instance per valid
//!   detected event, holding its differential vector.
//! - [`ScenarioKind::FrequencyOnly`]: four rectifier loads with equal real
//!   and apparent power that differ only in which odd harmonics they draw.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use rand::Rng as _;

use crate::events::{DeltaSign, DEFAULT_THRESHOLD_W};
use crate::features::{FeatureExtractor, FeatureLayout, FeatureVector};
use crate::pipeline::delta_events;
use crate::rng;
use crate::signal::{
    mains_voltage, synth_appliance, synth_scenario, ApplianceKind, ApplianceModel,
    ApplianceRegistry, LabeledEvent, Mains, Scenario, ScenarioScript, ScriptEvent, SampleWindow,
    SwitchAction, WINDOW_LEN,
};
use crate::train::Dataset;
use crate::{Error, Result};

/// Current noise on every synthetic appliance.
pub const NOISE_RMS_A: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ScenarioKind {
    SingleAppliance,
    MultiAppliance,
    FrequencyOnly,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::SingleAppliance,
        ScenarioKind::MultiAppliance,
        ScenarioKind::FrequencyOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::SingleAppliance => "single-appliance",
            ScenarioKind::MultiAppliance => "multi-appliance",
            ScenarioKind::FrequencyOnly => "frequency-only",
        }
    }
}

impl core::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown scenario `{s}` (expected single-appliance, multi-appliance or frequency-only)"
                ))
            })
    }
}

/// Nominal appliances for the single-appliance scenario.
pub fn appliance_catalog() -> Vec<(&'static str, ApplianceModel)> {
    let laptop = [(1, 1.0), (3, 0.8), (5, 0.6), (7, 0.4), (9, 0.2)];
    let led = [(1, 1.0), (3, 0.9), (5, 0.8), (7, 0.7), (9, 0.6), (11, 0.5)];
    alloc::vec![
        ("kettle", ApplianceModel::resistive(2000.0)),
        ("fridge", ApplianceModel::reactive(120.0, 0.6)),
        ("laptop", ApplianceModel::rectifier(60.0, &laptop)),
        ("led_lamp", ApplianceModel::rectifier(12.0, &led)),
        ("dimmer_lamp", ApplianceModel::phase_cut(60.0, 1.2)),
        ("microwave", ApplianceModel::reactive(1200.0, 0.35)),
        ("hair_dryer", ApplianceModel::phase_cut(1000.0, 0.5)),
    ]
    .into_iter()
    .map(|(id, m)| (id, m.with_noise(NOISE_RMS_A)))
    .collect()
}

/// Appliances toggled in multi-appliance scripts; all draw well above the
/// detection threshold so a step split across two windows is still seen.
pub const MULTI_APPLIANCES: [&str; 5] = ["kettle", "fridge", "laptop", "dimmer_lamp", "microwave"];

/// Randomly perturbed copy of a nominal appliance: power ±15 %, reactive
/// phase ±0.05 rad, cut angle ±0.1 rad, harmonic amplitudes ±0.05.
pub fn vary(model: &ApplianceModel, rng: &mut rng::Rng) -> ApplianceModel {
    let mut m = model.clone();
    m.nominal_power_w *= rng.random_range(0.85..1.15);
    match &mut m.kind {
        ApplianceKind::Resistive => {}
        ApplianceKind::Reactive { phase_rad } => *phase_rad += rng.random_range(-0.05..0.05),
        ApplianceKind::Rectifier { harmonics } => {
            for (&order, a) in harmonics.iter_mut() {
                if order != 1 {
                    *a = (*a + rng.random_range(-0.05..0.05)).clamp(0.0, 1.0);
                }
            }
        }
        ApplianceKind::PhaseCut { cut_angle_rad } => *cut_angle_rad += rng.random_range(-0.1..0.1),
    }
    m
}

fn jittered_mains(rng: &mut rng::Rng) -> Mains {
    let nominal = Mains::default();
    Mains {
        amplitude_v: nominal.amplitude_v * rng.random_range(0.98..1.02),
        ..nominal
    }
}

/// Features of one steady-state window of `model` alone.
fn steady_window(extractor: &FeatureExtractor, model: &ApplianceModel, mains: &Mains, seed: u64) -> Result<FeatureVector> {
    let duration = WINDOW_LEN as f64 / f64::from(crate::signal::SAMPLE_RATE_HZ);
    let i = synth_appliance(model, mains, duration, seed)?;
    let v = mains_voltage(mains, WINDOW_LEN);
    Ok(extractor.extract(&SampleWindow::new(0, v, i)?))
}

/// `per_class` single-window instances of each catalog appliance.
pub fn single_appliance_dataset(per_class: usize, layout: &FeatureLayout, seed: u64) -> Result<Dataset> {
    let catalog = appliance_catalog();
    let extractor = FeatureExtractor::new(layout.clone());
    let mut rows = Vec::with_capacity(per_class * catalog.len());
    let mut labels = Vec::with_capacity(rows.capacity());
    for (class, (id, nominal)) in catalog.iter().enumerate() {
        let mut r = rng::stream(rng::derive_seed(seed, id.as_bytes()), 0);
        for k in 0..per_class {
            let model = vary(nominal, &mut r);
            let mains = jittered_mains(&mut r);
            let noise_seed = rng::child_seed(seed, id, k as u64);
            rows.push(steady_window(&extractor, &model, &mains, noise_seed)?.values);
            labels.push(class);
        }
    }
    let classes = catalog.iter().map(|(id, _)| String::from(*id)).collect();
    Dataset::with_layout(rows, labels, classes, layout, format!("synthetic:single-appliance:seed={seed}"))
}

/// Harmonic profiles of the frequency-only classes. Every profile has the
/// same Σa², so a common nominal power gives the same P, |S| and Q.
pub const FREQUENCY_ONLY_PROFILES: [(&str, &[(u32, f64)]); 4] = [
    ("third", &[(1, 1.0), (3, 0.5)]),
    ("fifth", &[(1, 1.0), (5, 0.5)]),
    ("seventh", &[(1, 1.0), (7, 0.5)]),
    ("mixed", &[(1, 1.0), (3, 0.3), (5, 0.4)]),
];

/// `per_class` windows per profile; power is drawn from 80–120 W for every
/// class alike.
pub fn frequency_only_dataset(per_class: usize, layout: &FeatureLayout, seed: u64) -> Result<Dataset> {
    let extractor = FeatureExtractor::new(layout.clone());
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (class, (id, profile)) in FREQUENCY_ONLY_PROFILES.iter().enumerate() {
        let mut r = rng::stream(rng::derive_seed(seed, id.as_bytes()), 1);
        for k in 0..per_class {
            let model = ApplianceModel::rectifier(r.random_range(80.0..120.0), profile).with_noise(NOISE_RMS_A);
            let mains = jittered_mains(&mut r);
            rows.push(steady_window(&extractor, &model, &mains, rng::child_seed(seed, id, k as u64))?.values);
            labels.push(class);
        }
    }
    let classes = FREQUENCY_ONLY_PROFILES.iter().map(|(id, _)| String::from(*id)).collect();
    Dataset::with_layout(rows, labels, classes, layout, format!("synthetic:frequency-only:seed={seed}"))
}

/// Multi-appliance registry with every appliance perturbed once per scenario.
pub fn multi_appliance_registry(seed: u64) -> ApplianceRegistry {
    let catalog: BTreeMap<&str, ApplianceModel> = appliance_catalog().into_iter().collect();
    let mut r = rng::stream(seed, 2);
    MULTI_APPLIANCES
        .iter()
        .map(|&id| (String::from(id), vary(&catalog[id], &mut r)))
        .collect()
}

/// Random toggling script: the first event at 2.5–3.5 s, then gaps of
/// 4.5–6 s, each event switching a random appliance to its other state, and
/// 3 s of tail after the last event.
pub fn multi_appliance_script(n_events: usize, seed: u64) -> ScenarioScript {
    let mut r = rng::stream(seed, 3);
    let mut on: BTreeMap<&str, bool> = BTreeMap::new();
    let mut events = Vec::with_capacity(n_events);
    let mut t = r.random_range(2.5..3.5);
    for _ in 0..n_events {
        let id = MULTI_APPLIANCES[r.random_range(0..MULTI_APPLIANCES.len())];
        let state = on.entry(id).or_insert(false);
        let action = if *state { SwitchAction::Off } else { SwitchAction::On };
        *state = !*state;
        events.push(ScriptEvent {
            time_s: t,
            appliance_id: String::from(id),
            action,
        });
        t += r.random_range(4.5..6.0);
    }
    let last = events.last().map_or(0.0, |e| e.time_s);
    ScenarioScript {
        mains: Mains::default(),
        duration_s: last + 3.0,
        events,
    }
}

/// One randomly scripted multi-appliance run.
pub fn multi_appliance_scenario(n_events: usize, seed: u64) -> Result<Scenario> {
    let script = multi_appliance_script(n_events, rng::child_seed(seed, "script", 0));
    let registry = multi_appliance_registry(rng::child_seed(seed, "registry", 0));
    synth_scenario(&script, &registry, rng::child_seed(seed, "noise", 0))
}

/// Pair detected event anchors with scripted events no more than `tolerance`
/// windows away, in order. Returns, per detected event, the index of its
/// scripted event.
pub fn match_events(anchors: &[usize], truth: &[LabeledEvent], tolerance: usize) -> Vec<Option<usize>> {
    let mut out = Vec::with_capacity(anchors.len());
    let mut next = 0;
    for &j in anchors {
        while next < truth.len() && truth[next].window + tolerance < j {
            next += 1;
        }
        if next < truth.len() && truth[next].window.abs_diff(j) <= tolerance {
            out.push(Some(next));
            next += 1;
        } else {
            out.push(None);
        }
    }
    out
}

/// Features of every complete window of a scenario.
pub fn scenario_features(scenario: &Scenario, layout: &FeatureLayout) -> Vec<FeatureVector> {
    let extractor = FeatureExtractor::new(layout.clone());
    scenario.stream.windows().map(|w| extractor.extract(&w)).collect()
}

/// Differential-vector instances from `n_scenarios` random runs. Only
/// detected events that pass the guard, have a full 41-window span and match
/// a scripted event within one window become instances, labelled with the
/// toggled appliance.
pub fn multi_appliance_dataset(n_scenarios: usize, events_per_scenario: usize, layout: &FeatureLayout, seed: u64) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for s in 0..n_scenarios {
        let scenario = multi_appliance_scenario(events_per_scenario, rng::child_seed(seed, "scenario", s as u64))?;
        let features = scenario_features(&scenario, layout);
        let deltas = delta_events(&features, DEFAULT_THRESHOLD_W, DeltaSign::default())?;
        let anchors: Vec<usize> = deltas.iter().map(|d| d.event.window_index).collect();
        let matched = match_events(&anchors, &scenario.labels.events, 1);
        for (d, m) in deltas.into_iter().zip(matched) {
            if let (Some(delta), Some(t)) = (d.delta, m) {
                rows.push(delta);
                labels.push(multi_class(&scenario.labels.events[t].appliance_id)?);
            }
        }
    }
    let classes = MULTI_APPLIANCES.iter().map(|id| String::from(*id)).collect();
    Dataset::with_layout(rows, labels, classes, layout, format!("synthetic:multi-appliance:seed={seed}"))
}

pub fn multi_class(appliance_id: &str) -> Result<usize> {
    MULTI_APPLIANCES
        .iter()
        .position(|&id| id == appliance_id)
        .ok_or_else(|| Error::UnknownAppliance(String::from(appliance_id)))
}

/// The dataset for `kind` at a default size.
pub fn scenario_dataset(kind: ScenarioKind, size: usize, layout: &FeatureLayout, seed: u64) -> Result<Dataset> {
    match kind {
        ScenarioKind::SingleAppliance => single_appliance_dataset(size, layout, seed),
        ScenarioKind::FrequencyOnly => frequency_only_dataset(size, layout, seed),
        ScenarioKind::MultiAppliance => multi_appliance_dataset(size, 20, layout, seed),
    }
}

/// Script and registry of a streamed scenario with `n_events` switching
/// events. Single-appliance and frequency-only runs switch one appliance at a
/// time on and then off again, cycling through the classes, with events 5 s
/// apart; multi-appliance runs are [`multi_appliance_script`]s.
pub fn scenario_script(kind: ScenarioKind, n_events: usize, seed: u64) -> (ScenarioScript, ApplianceRegistry) {
    let mut r = rng::stream(rng::child_seed(seed, "registry", 0), 4);
    let registry: ApplianceRegistry = match kind {
        ScenarioKind::MultiAppliance => {
            return (
                multi_appliance_script(n_events, rng::child_seed(seed, "script", 0)),
                multi_appliance_registry(rng::child_seed(seed, "registry", 0)),
            )
        }
        ScenarioKind::SingleAppliance => appliance_catalog()
            .iter()
            .map(|(id, m)| (String::from(*id), vary(m, &mut r)))
            .collect(),
        ScenarioKind::FrequencyOnly => FREQUENCY_ONLY_PROFILES
            .iter()
            .map(|(id, profile)| {
                let m = ApplianceModel::rectifier(r.random_range(80.0..120.0), profile).with_noise(NOISE_RMS_A);
                (String::from(*id), m)
            })
            .collect(),
    };
    let ids: Vec<&String> = registry.keys().collect();
    let events: Vec<ScriptEvent> = (0..n_events)
        .map(|k| ScriptEvent {
            time_s: 3.0 + 5.0 * k as f64,
            appliance_id: ids[(k / 2) % ids.len()].clone(),
            action: if k % 2 == 0 { SwitchAction::On } else { SwitchAction::Off },
        })
        .collect();
    let last = events.last().map_or(0.0, |e| e.time_s);
    let script = ScenarioScript {
        mains: Mains::default(),
        duration_s: last + 3.0,
        events,
    };
    (script, registry)
}

/// Rendered [`scenario_script`]; for multi-appliance runs this is exactly
/// [`multi_appliance_scenario`].
pub fn scenario_stream(kind: ScenarioKind, n_events: usize, seed: u64) -> Result<Scenario> {
    let (script, registry) = scenario_script(kind, n_events, seed);
    synth_scenario(&script, &registry, rng::child_seed(seed, "noise", 0))
}

/// Apparent power of a lone appliance in steady state.
pub fn solo_apparent_power(model: &ApplianceModel, mains: &Mains) -> Result<f64> {
    let clean = ApplianceModel {
        noise_rms_a: 0.0,
        ..model.clone()
    };
    let i = synth_appliance(&clean, mains, 0.1, 0)?;
    let irms = libm::sqrt(i.iter().map(|x| x * x).sum::<f64>() / i.len() as f64);
    Ok(mains.amplitude_v / SQRT_2 * irms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{IDX_P, IDX_Q, IDX_S};
    use crate::pipeline::DeltaEvent;

    #[test]
    fn scenario_names_round_trip() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.as_str().parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("dad".parse::<ScenarioKind>().is_err());
    }

    #[test]
    fn single_appliance_dataset_shape() {
        let layout = FeatureLayout::default();
        let d = single_appliance_dataset(6, &layout, 3).unwrap();
        assert_eq!(d.len(), 42);
        assert_eq!(d.n_classes(), 7);
        assert_eq!(d.n_features(), 103);
        assert_eq!(d.class_counts(), [6; 7]);
        assert_eq!(d.layout(), Some(layout.clone()));
        assert_eq!(d, single_appliance_dataset(6, &layout, 3).unwrap());
        assert_ne!(d.rows(), single_appliance_dataset(6, &layout, 4).unwrap().rows());
        // The kettle draws 2 kW ± 15 %.
        for (row, &l) in d.rows().iter().zip(d.labels()) {
            if l == 0 {
                assert!((1650.0..2350.0).contains(&row[IDX_P]), "{}", row[IDX_P]);
            }
        }
    }

    #[test]
    fn varied_models_stay_valid() {
        let mut r = rng::stream(9, 0);
        for (_, m) in appliance_catalog() {
            for _ in 0..50 {
                vary(&m, &mut r).validate().unwrap();
            }
        }
    }

    #[test]
    fn frequency_only_classes_share_time_domain_statistics() {
        let layout = FeatureLayout::default();
        let d = frequency_only_dataset(40, &layout, 1).unwrap();
        // Noise-free, the four profiles give identical P, |S| and Q at equal power.
        let mains = Mains::default();
        let ex = FeatureExtractor::new(layout);
        let time: Vec<[f64; 3]> = FREQUENCY_ONLY_PROFILES
            .iter()
            .map(|(_, prof)| {
                let f = steady_window(&ex, &ApplianceModel::rectifier(100.0, prof), &mains, 0).unwrap();
                [f.values[IDX_P], f.values[IDX_S], f.values[IDX_Q]]
            })
            .collect();
        for t in &time[1..] {
            for k in 0..3 {
                assert!((t[k] - time[0][k]).abs() < 1e-9 * time[0][k].abs().max(1.0), "{t:?} vs {:?}", time[0]);
            }
        }
        // With jitter, per-class mean P stays within a few watts of 100 W.
        for c in 0..4 {
            let ps: Vec<f64> = d.rows().iter().zip(d.labels()).filter(|(_, &l)| l == c).map(|(r, _)| r[IDX_P]).collect();
            let mean = ps.iter().sum::<f64>() / ps.len() as f64;
            assert!((mean - 100.0).abs() < 6.0, "class {c}: {mean}");
        }
    }

    #[test]
    fn scripts_respect_delta_spacing() {
        for seed in 0..20 {
            let s = multi_appliance_script(12, seed);
            s.validate().unwrap();
            assert!(s.supports_delta_features());
            assert!(s.min_event_spacing().unwrap() >= 4.5);
            assert!(s.events[0].time_s >= 2.5);
        }
    }

    #[test]
    fn event_matching() {
        let ev = |window| LabeledEvent {
            sample: window * 1000,
            window,
            appliance_id: "kettle".into(),
            action: SwitchAction::On,
        };
        let truth = [ev(30), ev(80), ev(130)];
        assert_eq!(match_events(&[31, 80, 200], &truth, 1), [Some(0), Some(1), None]);
        assert_eq!(match_events(&[28, 129], &truth, 1), [None, Some(2)]);
        assert_eq!(match_events(&[], &truth, 1), []);
    }

    #[test]
    fn multi_appliance_runs_detect_every_scripted_event() {
        let layout = FeatureLayout::default();
        for seed in 0..3 {
            let sc = multi_appliance_scenario(10, seed).unwrap();
            let feats = scenario_features(&sc, &layout);
            let deltas: Vec<DeltaEvent> = delta_events(&feats, DEFAULT_THRESHOLD_W, DeltaSign::default()).unwrap();
            assert_eq!(deltas.len(), 10, "seed {seed}");
            let anchors: Vec<usize> = deltas.iter().map(|d| d.event.window_index).collect();
            let m = match_events(&anchors, &sc.labels.events, 1);
            assert!(m.iter().all(Option::is_some));
            assert!(deltas.iter().all(|d| d.valid && d.delta.is_some()));
        }
    }

    #[test]
    fn multi_appliance_dataset_labels_events() {
        let d = multi_appliance_dataset(3, 12, &FeatureLayout::default(), 5).unwrap();
        assert_eq!(d.len(), 36);
        assert_eq!(d.n_classes(), 5);
    }

    #[test]
    fn streamed_scenarios_toggle_one_appliance_at_a_time() {
        for kind in [ScenarioKind::SingleAppliance, ScenarioKind::FrequencyOnly] {
            let (script, registry) = scenario_script(kind, 6, 4);
            assert!(script.validate().is_ok());
            assert!(script.supports_delta_features());
            assert_eq!(script.events.len(), 6);
            assert!(script.events.iter().all(|e| registry.contains_key(&e.appliance_id)));
            let s = scenario_stream(kind, 6, 4).unwrap();
            for e in &s.labels.events {
                if e.action == SwitchAction::On {
                    assert_eq!(s.labels.windows[e.window + 1].active, [e.appliance_id.clone()]);
                }
            }
        }
    }

    #[test]
    fn streamed_multi_scenario_is_the_multi_appliance_run() {
        let a = scenario_stream(ScenarioKind::MultiAppliance, 4, 9).unwrap();
        let b = multi_appliance_scenario(4, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn solo_apparent_power_of_a_resistor() {
        let s = solo_apparent_power(&ApplianceModel::resistive(500.0), &Mains::default()).unwrap();
        assert!((s - 500.0).abs() < 1e-6, "{s}");
    }
}
