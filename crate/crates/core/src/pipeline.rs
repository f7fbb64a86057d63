//! Online classification: window → features → event → [ΔF] → predict.
//!
//! Windows are consumed strictly in order. In multi-appliance mode an event at
//! window `j` is decided once window `j + 20` has arrived and the detector can
//! no longer report another event inside the guard interval; events still
//! waiting at end of stream come out as [`Outcome::Pending`].

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;

use crate::events::{
    event_guard, DeltaBuffer, DeltaSign, EventDetector, SwitchEvent, DEFAULT_THRESHOLD_W,
    GUARD_RADIUS,
};
use crate::features::{FeatureExtractor, FeatureLayout, FeatureVector, IDX_P};
use crate::models::TrainedModel;
use crate::signal::{SampleStream, SampleWindow};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    /// Classify `F_j`, the window where the step is observed.
    Single,
    /// Classify the differential vector centred on the event.
    Multi,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Multi => "multi",
        }
    }
}

impl core::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Mode::Single),
            "multi" => Ok(Mode::Multi),
            _ => Err(Error::InvalidParameter(alloc::format!(
                "unknown mode `{s}` (expected single or multi)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineConfig {
    pub threshold_w: f64,
    pub sign: DeltaSign,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            threshold_w: DEFAULT_THRESHOLD_W,
            sign: DeltaSign::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "status", content = "class"))]
pub enum Outcome {
    Label(usize),
    /// Another event lies within the guard interval.
    Invalid,
    /// The windows the classifier needs were not (or never will be) available:
    /// too close to the start of the stream, behind a step that kept rising
    /// for more than 20 windows, or cut off by the end of the stream.
    Pending,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Decision {
    pub event: SwitchEvent,
    pub outcome: Outcome,
}

#[derive(Debug, Clone)]
struct Waiting {
    event: SwitchEvent,
    clash: bool,
    delta: Option<Vec<f64>>,
}

/// Streaming classifier over one sample stream.
#[derive(Debug, Clone)]
pub struct OnlineClassifier<'m> {
    model: &'m TrainedModel,
    mode: Mode,
    sign: DeltaSign,
    extractor: FeatureExtractor,
    detector: EventDetector,
    buffer: DeltaBuffer,
    waiting: VecDeque<Waiting>,
    last_anchor: Option<usize>,
    newest: Option<usize>,
}

impl<'m> OnlineClassifier<'m> {
    pub fn new(model: &'m TrainedModel, mode: Mode, config: PipelineConfig) -> Result<Self> {
        model.validate()?;
        let layout = FeatureLayout::new(model.harmonic_mode);
        if layout.len() != model.layout_len {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                got: model.layout_len,
            });
        }
        Ok(Self {
            model,
            mode,
            sign: config.sign,
            extractor: FeatureExtractor::new(layout),
            detector: EventDetector::new(config.threshold_w)?,
            buffer: DeltaBuffer::new(),
            waiting: VecDeque::new(),
            last_anchor: None,
            newest: None,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn push_window(&mut self, w: &SampleWindow) -> Result<Vec<Decision>> {
        let f = self.extractor.extract(w);
        self.push_features(f)
    }

    /// Feed the next window's features. Window indices must increase by one.
    pub fn push_features(&mut self, f: FeatureVector) -> Result<Vec<Decision>> {
        let j = f.window_index;
        let expected = self.newest.map_or(j, |n| n + 1);
        if j != expected || f.len() != self.model.layout_len {
            return Err(if f.len() != self.model.layout_len {
                Error::DimensionMismatch {
                    expected: self.model.layout_len,
                    got: f.len(),
                }
            } else {
                Error::InvalidParameter(alloc::format!("expected window {expected}, got {j}"))
            });
        }
        self.newest = Some(j);
        let p = f.values[IDX_P];
        self.buffer.push(f);
        let emitted = self.detector.push(j, p);
        self.advance(emitted, false)
    }

    /// Flush the detector and settle every remaining event.
    pub fn finish(&mut self) -> Result<Vec<Decision>> {
        let emitted = self.detector.finish();
        self.advance(emitted, true)
    }

    fn advance(&mut self, emitted: Option<SwitchEvent>, at_end: bool) -> Result<Vec<Decision>> {
        let mut out = Vec::new();
        match self.mode {
            Mode::Single => {
                if let Some(e) = emitted {
                    let outcome = match self.buffer.get(e.window_index) {
                        Some(f) => Outcome::Label(self.model.predict(&f.values)?),
                        None => Outcome::Pending,
                    };
                    out.push(Decision { event: e, outcome });
                }
            }
            Mode::Multi => {
                if let Some(e) = emitted {
                    let j = e.window_index;
                    let clash = self.last_anchor.is_some_and(|a| j - a <= GUARD_RADIUS);
                    for w in self.waiting.iter_mut() {
                        if j - w.event.window_index <= GUARD_RADIUS {
                            w.clash = true;
                        }
                    }
                    self.last_anchor = Some(j);
                    self.waiting.push_back(Waiting {
                        event: e,
                        clash,
                        delta: None,
                    });
                }
                self.settle(at_end, &mut out)?;
            }
        }
        Ok(out)
    }

    fn settle(&mut self, at_end: bool, out: &mut Vec<Decision>) -> Result<()> {
        let newest = match self.newest {
            Some(n) => n,
            None => return Ok(()),
        };
        for w in self.waiting.iter_mut() {
            let j = w.event.window_index;
            if !w.clash && w.delta.is_none() && newest == j + GUARD_RADIUS {
                w.delta = self.buffer.delta_at(j, self.sign).ok();
            }
        }
        let open_anchor = self.detector.pending().map(|e| e.window_index);
        while let Some(front) = self.waiting.front() {
            let j = front.event.window_index;
            let horizon = j + GUARD_RADIUS;
            let outcome = if front.clash {
                Outcome::Invalid
            } else if newest >= horizon && open_anchor.map_or(true, |a| a > horizon) {
                match &front.delta {
                    Some(d) => Outcome::Label(self.model.predict(d)?),
                    None => Outcome::Pending,
                }
            } else if at_end {
                Outcome::Pending
            } else {
                break;
            };
            let event = front.event;
            self.waiting.pop_front();
            out.push(Decision { event, outcome });
        }
        Ok(())
    }
}

/// Run the online classifier over a whole stream.
pub fn classify_stream(
    model: &TrainedModel,
    stream: &SampleStream,
    mode: Mode,
    config: PipelineConfig,
) -> Result<Vec<Decision>> {
    let mut c = OnlineClassifier::new(model, mode, config)?;
    let mut out = Vec::new();
    for w in stream.windows() {
        out.extend(c.push_window(&w)?);
    }
    out.extend(c.finish()?);
    Ok(out)
}

/// One detected event with its guard flag and, when valid and fully inside
/// the track, its differential vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaEvent {
    pub event: SwitchEvent,
    pub valid: bool,
    pub delta: Option<Vec<f64>>,
}

/// Offline counterpart of the multi-appliance path over a complete track of
/// consecutive feature vectors starting at window 0.
pub fn delta_events(features: &[FeatureVector], threshold_w: f64, sign: DeltaSign) -> Result<Vec<DeltaEvent>> {
    let powers: Vec<f64> = features.iter().map(|f| f.values[IDX_P]).collect();
    let events = crate::events::detect_events(&powers, threshold_w)?;
    let valid = event_guard(&events);
    let mut out = Vec::with_capacity(events.len());
    for (e, ok) in events.into_iter().zip(valid) {
        let j = e.window_index;
        let delta = if ok && j >= GUARD_RADIUS && j + GUARD_RADIUS < features.len() {
            let f = |w: usize| features[w].values.as_slice();
            let pre = [f(j - 20), f(j - 10), f(j - 1)];
            let post = [f(j + 1), f(j + 10), f(j + 20)];
            Some(crate::events::delta_feature(pre, post, sign)?)
        } else {
            None
        };
        out.push(DeltaEvent { event: e, valid: ok, delta });
    }
    Ok(out)
}

/// Class name of a decision, `"invalid"` or `"pending"`.
pub fn outcome_label(model: &TrainedModel, outcome: Outcome) -> String {
    match outcome {
        Outcome::Label(c) => model.class_name(c).map_or_else(|| alloc::format!("class{c}"), String::from),
        Outcome::Invalid => String::from("invalid"),
        Outcome::Pending => String::from("pending"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FEATURE_COUNT;
    use crate::signal::{ApplianceModel, Mains, ScenarioScript, ScriptEvent, SwitchAction};
    use crate::train::{fit, Dataset, ModelSpec, RfParams};
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng as _;

    /// A forest over the full layout whose vote depends on several columns.
    fn model() -> TrainedModel {
        let mut r = crate::rng::stream(4, 0);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for k in 0..90 {
            let row: Vec<f64> = (0..FEATURE_COUNT).map(|_| r.random_range(-50.0..50.0)).collect();
            labels.push(k % 3);
            rows.push(row);
        }
        let classes = vec!["a".into(), "b".into(), "c".into()];
        let d = Dataset::with_layout(rows, labels, classes, &FeatureLayout::default(), "").unwrap();
        let all: Vec<usize> = (0..FEATURE_COUNT).collect();
        fit(&d, &all, &ModelSpec::Rf(RfParams { n_trees: 7, max_depth: Some(6) }), 1).unwrap()
    }

    /// Feature vectors whose P follows `powers` and whose other entries vary
    /// from window to window.
    fn track(powers: &[f64]) -> Vec<FeatureVector> {
        powers
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let mut values: Vec<f64> = (0..FEATURE_COUNT).map(|k| libm::sin((j * 31 + k) as f64) * 40.0).collect();
                values[IDX_P] = p;
                FeatureVector { values, window_index: j }
            })
            .collect()
    }

    fn run(model: &TrainedModel, mode: Mode, feats: &[FeatureVector]) -> Vec<Decision> {
        let mut c = OnlineClassifier::new(model, mode, PipelineConfig::default()).unwrap();
        let mut out = Vec::new();
        for f in feats {
            out.extend(c.push_features(f.clone()).unwrap());
        }
        out.extend(c.finish().unwrap());
        out
    }

    fn steps(levels: &[(usize, f64)], len: usize) -> Vec<f64> {
        (0..len)
            .map(|j| levels.iter().take_while(|(start, _)| *start <= j).last().map_or(0.0, |l| l.1))
            .collect()
    }

    fn oracle(model: &TrainedModel, feats: &[FeatureVector]) -> Vec<Decision> {
        delta_events(feats, DEFAULT_THRESHOLD_W, DeltaSign::default())
            .unwrap()
            .into_iter()
            .map(|d| Decision {
                event: d.event,
                outcome: match (d.valid, d.delta) {
                    (false, _) => Outcome::Invalid,
                    (true, Some(x)) => Outcome::Label(model.predict(&x).unwrap()),
                    (true, None) => Outcome::Pending,
                },
            })
            .collect()
    }

    #[test]
    fn steady_stream_gives_no_decisions() {
        let m = model();
        let feats = track(&[100.0; 80]);
        assert!(run(&m, Mode::Multi, &feats).is_empty());
        assert!(run(&m, Mode::Single, &feats).is_empty());
    }

    #[test]
    fn isolated_events_are_labelled_like_the_offline_path() {
        let m = model();
        let feats = track(&steps(&[(30, 60.0), (90, 0.0)], 140));
        let got = run(&m, Mode::Multi, &feats);
        assert_eq!(got.len(), 2);
        assert!(got.iter().all(|d| matches!(d.outcome, Outcome::Label(_))));
        assert_eq!(got, oracle(&m, &feats));
    }

    #[test]
    fn close_events_are_invalid() {
        let m = model();
        let feats = track(&steps(&[(30, 60.0), (40, 200.0), (100, 0.0)], 150));
        let got = run(&m, Mode::Multi, &feats);
        let outcomes: Vec<Outcome> = got.iter().map(|d| d.outcome).collect();
        assert_eq!(outcomes[..2], [Outcome::Invalid, Outcome::Invalid]);
        assert!(matches!(outcomes[2], Outcome::Label(_)));
    }

    #[test]
    fn early_and_late_events_stay_pending() {
        let m = model();
        let feats = track(&steps(&[(5, 60.0), (60, 0.0)], 70));
        let got = run(&m, Mode::Multi, &feats);
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].outcome, Outcome::Pending);
        assert_eq!(got[1].outcome, Outcome::Pending);
    }

    #[test]
    fn single_mode_labels_the_crossing_window() {
        let m = model();
        let feats = track(&steps(&[(30, 60.0), (35, 0.0)], 50));
        let got = run(&m, Mode::Single, &feats);
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].event.window_index, 30);
        assert_eq!(got[0].outcome, Outcome::Label(m.predict(&feats[30].values).unwrap()));
        assert_eq!(got[1].outcome, Outcome::Label(m.predict(&feats[35].values).unwrap()));
    }

    #[test]
    fn out_of_order_windows_are_rejected() {
        let m = model();
        let mut c = OnlineClassifier::new(&m, Mode::Multi, PipelineConfig::default()).unwrap();
        let feats = track(&[0.0; 3]);
        c.push_features(feats[0].clone()).unwrap();
        assert!(c.push_features(feats[2].clone()).is_err());
        let mut short = feats[1].clone();
        short.values.pop();
        assert!(c.push_features(short).is_err());
    }

    #[test]
    fn synthetic_two_appliance_stream() {
        let m = model();
        let mut registry = crate::signal::ApplianceRegistry::new();
        registry.insert("heater".into(), ApplianceModel::resistive(800.0).with_noise(0.02));
        registry.insert("fan".into(), ApplianceModel::reactive(90.0, 0.4).with_noise(0.02));
        let ev = |t: f64, id: &str, action| ScriptEvent { time_s: t, appliance_id: id.into(), action };
        let script = ScenarioScript {
            mains: Mains::default(),
            duration_s: 20.0,
            events: vec![
                ev(3.05, "heater", SwitchAction::On),
                ev(8.0, "fan", SwitchAction::On),
                ev(8.6, "heater", SwitchAction::Off),
                ev(15.2, "fan", SwitchAction::Off),
            ],
        };
        let sc = crate::signal::synth_scenario(&script, &registry, 3).unwrap();
        let got = classify_stream(&m, &sc.stream, Mode::Multi, PipelineConfig::default()).unwrap();
        let outcomes: Vec<Outcome> = got.iter().map(|d| d.outcome).collect();
        assert_eq!(got.len(), 4);
        assert!(matches!(outcomes[0], Outcome::Label(_)));
        assert_eq!(outcomes[1..3], [Outcome::Invalid, Outcome::Invalid]);
        assert!(matches!(outcomes[3], Outcome::Label(_)));
        let anchors: Vec<usize> = got.iter().map(|d| d.event.window_index).collect();
        assert_eq!(anchors, [30, 80, 86, 152]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn online_matches_offline(
            gaps in proptest::collection::vec(1usize..60, 0..8),
            levels in proptest::collection::vec(0.0f64..400.0, 8),
            tail in 0usize..40,
        ) {
            let m = model();
            let mut at = 0;
            let plan: Vec<(usize, f64)> = gaps.iter().zip(&levels).map(|(g, &l)| { at += g; (at, l) }).collect();
            let feats = track(&steps(&plan, at + tail + 1));
            let online = run(&m, Mode::Multi, &feats);
            let offline = oracle(&m, &feats);
            prop_assert_eq!(&online, &offline);
            let valid = event_guard(&offline.iter().map(|d| d.event).collect::<Vec<_>>());
            for (d, ok) in online.iter().zip(valid) {
                prop_assert!(ok || d.outcome == Outcome::Invalid);
            }
        }
    }
}
