//! Switching-event detection on the real-power track and the differential
//! feature vector used for overlapping-appliance classification.
//!
//! For an event at window `j` the differential vector is
//!
//! ```text
//! ΔF_j = (F[j-20] + F[j-10] + F[j-1]) / 3 − (F[j+1] + F[j+10] + F[j+20]) / 3
//! ```
//!
//! i.e. pre-event average minus post-event average, so switching a load on
//! yields a negative power component.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::features::FeatureVector;
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD_W: f64 = 5.0;
/// Windows spanned by one differential vector (4.1 s).
pub const DELTA_SPAN: usize = 41;
/// Half-width of the exclusion zone around an event.
pub const GUARD_RADIUS: usize = 20;
const PRE_OFFSETS: [usize; 3] = [20, 10, 1];
const POST_OFFSETS: [usize; 3] = [1, 10, 20];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    On,
    Off,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::On => "on",
            Direction::Off => "off",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SwitchEvent {
    pub window_index: usize,
    pub delta_p_w: f64,
    pub direction: Direction,
}

/// Event iff `|p_curr − p_prev| > threshold_w` (strict).
pub fn detect_event(
    window_index: usize,
    p_prev: f64,
    p_curr: f64,
    threshold_w: f64,
) -> Option<SwitchEvent> {
    debug_assert!(threshold_w > 0.0);
    let delta_p_w = p_curr - p_prev;
    (delta_p_w.abs() > threshold_w).then_some(SwitchEvent {
        window_index,
        delta_p_w,
        direction: if delta_p_w > 0.0 {
            Direction::On
        } else {
            Direction::Off
        },
    })
}

/// Streaming detector over consecutive window powers.
///
/// A switch that lands mid-window spreads its step over two windows and can
/// cross the threshold in both. Detections in adjacent windows with the same
/// direction are merged into one event anchored at the first window, with the
/// deltas summed. Merged events are emitted once the run ends, so output lags
/// input by one window; call [`EventDetector::finish`] at end of stream.
#[derive(Debug, Clone)]
pub struct EventDetector {
    threshold_w: f64,
    prev: Option<(usize, f64)>,
    pending: Option<SwitchEvent>,
    last_hit: Option<usize>,
}

impl EventDetector {
    pub fn new(threshold_w: f64) -> Result<Self> {
        if !(threshold_w.is_finite() && threshold_w > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "event threshold must be positive, got {threshold_w}"
            )));
        }
        Ok(Self {
            threshold_w,
            prev: None,
            pending: None,
            last_hit: None,
        })
    }

    pub fn threshold_w(&self) -> f64 {
        self.threshold_w
    }

    pub fn push(&mut self, window_index: usize, p: f64) -> Option<SwitchEvent> {
        let hit = self
            .prev
            .and_then(|(_, p_prev)| detect_event(window_index, p_prev, p, self.threshold_w));
        self.prev = Some((window_index, p));
        let mut done = None;
        match (hit, self.pending.as_mut()) {
            (Some(h), Some(run))
                if run.direction == h.direction
                    && self.last_hit.map(|w| w + 1) == Some(window_index) =>
            {
                run.delta_p_w += h.delta_p_w;
            }
            (Some(h), _) => {
                done = self.pending.replace(h);
            }
            (None, _) => done = self.pending.take(),
        }
        if hit.is_some() {
            self.last_hit = Some(window_index);
        }
        done
    }

    /// The run still open at the newest window, if any.
    pub fn pending(&self) -> Option<&SwitchEvent> {
        self.pending.as_ref()
    }

    pub fn finish(&mut self) -> Option<SwitchEvent> {
        self.pending.take()
    }
}

/// Run [`EventDetector`] over a whole power track (window `k` has index `k`).
pub fn detect_events(powers: &[f64], threshold_w: f64) -> Result<Vec<SwitchEvent>> {
    let mut det = EventDetector::new(threshold_w)?;
    let mut events: Vec<SwitchEvent> = powers
        .iter()
        .enumerate()
        .filter_map(|(j, &p)| det.push(j, p))
        .collect();
    events.extend(det.finish());
    Ok(events)
}

/// Valid iff no other event lies within ±[`GUARD_RADIUS`] windows.
pub fn event_guard(events: &[SwitchEvent]) -> Vec<bool> {
    (0..events.len())
        .map(|k| {
            let j = events[k].window_index;
            let clash_before = k > 0 && j - events[k - 1].window_index <= GUARD_RADIUS;
            let clash_after =
                k + 1 < events.len() && events[k + 1].window_index - j <= GUARD_RADIUS;
            !(clash_before || clash_after)
        })
        .collect()
}

/// Sign convention for the differential vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DeltaSign {
    /// Pre-event average minus post-event average.
    #[default]
    PreMinusPost,
    PostMinusPre,
}

/// Elementwise `mean(pre) − mean(post)` (or the reverse).
pub fn delta_feature(pre: [&[f64]; 3], post: [&[f64]; 3], sign: DeltaSign) -> Result<Vec<f64>> {
    let len = pre[0].len();
    for x in pre.iter().chain(post.iter()) {
        if x.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: x.len(),
            });
        }
    }
    Ok((0..len)
        .map(|k| {
            let a = (pre[0][k] + pre[1][k] + pre[2][k]) / 3.0;
            let b = (post[0][k] + post[1][k] + post[2][k]) / 3.0;
            match sign {
                DeltaSign::PreMinusPost => a - b,
                DeltaSign::PostMinusPre => b - a,
            }
        })
        .collect())
}

/// Ring of the most recent [`DELTA_SPAN`] feature vectors.
#[derive(Debug, Clone, Default)]
pub struct DeltaBuffer {
    ring: VecDeque<FeatureVector>,
}

impl DeltaBuffer {
    pub const CAPACITY: usize = DELTA_SPAN;

    pub fn new() -> Self {
        Self {
            ring: VecDeque::with_capacity(Self::CAPACITY),
        }
    }

    pub fn push(&mut self, v: FeatureVector) {
        if self.ring.len() == Self::CAPACITY {
            self.ring.pop_front();
        }
        self.ring.push_back(v);
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn newest_index(&self) -> Option<usize> {
        self.ring.back().map(|v| v.window_index)
    }

    pub fn get(&self, window_index: usize) -> Option<&FeatureVector> {
        self.ring.iter().find(|v| v.window_index == window_index)
    }

    /// Differential vector centred on `window_index`, or `NotReady` while any of
    /// the six referenced windows is missing.
    pub fn delta_at(&self, window_index: usize, sign: DeltaSign) -> Result<Vec<f64>> {
        let not_ready = Error::NotReady {
            window: window_index,
        };
        let pick = |w: Option<usize>| w.and_then(|w| self.get(w)).map(|v| v.values.as_slice());
        let mut pre = [&[][..]; 3];
        let mut post = [&[][..]; 3];
        for (slot, off) in pre.iter_mut().zip(PRE_OFFSETS) {
            *slot = pick(window_index.checked_sub(off)).ok_or(not_ready.clone())?;
        }
        for (slot, off) in post.iter_mut().zip(POST_OFFSETS) {
            *slot = pick(Some(window_index + off)).ok_or(not_ready.clone())?;
        }
        delta_feature(pre, post, sign)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn ev(j: usize) -> SwitchEvent {
        SwitchEvent {
            window_index: j,
            delta_p_w: 10.0,
            direction: Direction::On,
        }
    }

    #[test]
    fn detection_cases() {
        assert_eq!(detect_event(1, 100.0, 100.0, 5.0), None);
        let e = detect_event(7, 10.0, 90.0, 5.0).unwrap();
        assert_eq!(e.delta_p_w, 80.0);
        assert_eq!(e.direction, Direction::On);
        assert_eq!(e.window_index, 7);
        assert_eq!(detect_event(1, 90.0, 86.0, 5.0), None);
        assert_eq!(detect_event(1, 90.0, 85.0, 5.0), None);
        assert_eq!(detect_event(1, 90.0, 84.9, 5.0).unwrap().direction, Direction::Off);
    }

    #[test]
    fn detector_merges_split_steps() {
        // A 60 W step split 50/50 across windows 3 and 4, then an off step at 9.
        let p = [0.0, 0.0, 0.0, 30.0, 60.0, 60.0, 60.0, 60.0, 60.0, 0.0, 0.0];
        let events = detect_events(&p, 5.0).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].window_index, 3);
        assert_eq!(events[0].delta_p_w, 60.0);
        assert_eq!(events[1].window_index, 9);
        assert_eq!(events[1].direction, Direction::Off);
        assert!(EventDetector::new(0.0).is_err());
    }

    #[test]
    fn detector_keeps_opposite_adjacent_steps() {
        let p = [0.0, 50.0, 0.0, 0.0];
        let events = detect_events(&p, 5.0).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].direction, Direction::On);
        assert_eq!(events[1].direction, Direction::Off);
    }

    #[test]
    fn steady_track_has_no_events() {
        let p: Vec<f64> = (0..200).map(|k| 100.0 + if k % 2 == 0 { 2.0 } else { -2.0 }).collect();
        assert!(detect_events(&p, 5.0).unwrap().is_empty());
    }

    #[test]
    fn guard_cases() {
        assert_eq!(event_guard(&[ev(50)]), [true]);
        assert_eq!(event_guard(&[ev(50), ev(60)]), [false, false]);
        assert_eq!(event_guard(&[ev(50), ev(91)]), [true, true]);
        assert_eq!(event_guard(&[ev(50), ev(70)]), [false, false]);
        assert_eq!(event_guard(&[ev(50), ev(71)]), [true, true]);
        assert_eq!(event_guard(&[ev(0), ev(100), ev(110), ev(200)]), [true, false, false, true]);
        assert!(event_guard(&[]).is_empty());
    }

    fn fv(j: usize, values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            values,
            window_index: j,
        }
    }

    #[test]
    fn delta_of_constant_pre_and_post() {
        let mut buf = DeltaBuffer::new();
        for j in 0..41 {
            let v = if j <= 20 { vec![1.0, 2.0] } else { vec![4.0, -1.0] };
            buf.push(fv(j, v));
        }
        assert_eq!(buf.delta_at(20, DeltaSign::PreMinusPost).unwrap(), [-3.0, 3.0]);
        assert_eq!(buf.delta_at(20, DeltaSign::PostMinusPre).unwrap(), [3.0, -3.0]);
    }

    #[test]
    fn delta_of_identical_windows_is_zero() {
        let mut buf = DeltaBuffer::new();
        for j in 0..41 {
            buf.push(fv(j, vec![3.5, -2.0, 0.25]));
        }
        assert_eq!(buf.delta_at(20, DeltaSign::default()).unwrap(), [0.0; 3]);
    }

    #[test]
    fn delta_not_ready() {
        let mut buf = DeltaBuffer::new();
        for j in 0..30 {
            buf.push(fv(j, vec![0.0]));
        }
        assert_eq!(buf.delta_at(20, DeltaSign::default()), Err(Error::NotReady { window: 20 }));
        assert!(buf.delta_at(5, DeltaSign::default()).is_err());
        for j in 30..45 {
            buf.push(fv(j, vec![0.0]));
        }
        assert_eq!(buf.len(), 41);
        assert!(buf.delta_at(24, DeltaSign::default()).is_ok());
        // Window 3 has been evicted.
        assert!(buf.delta_at(23, DeltaSign::default()).is_err());
    }

    proptest! {
        #[test]
        fn delta_antisymmetry(a in proptest::collection::vec(-1e3f64..1e3, 18)) {
            let rows: Vec<&[f64]> = a.chunks(3).collect();
            let pre = [rows[0], rows[1], rows[2]];
            let post = [rows[3], rows[4], rows[5]];
            let d = delta_feature(pre, post, DeltaSign::PreMinusPost).unwrap();
            let r = delta_feature(post, pre, DeltaSign::PreMinusPost).unwrap();
            for (x, y) in d.iter().zip(&r) {
                prop_assert_eq!(x.to_bits(), (-y).to_bits());
            }
        }
    }
}
