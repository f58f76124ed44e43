//! Expressive metrics: blink detection (hysteresis on AU43), blink rate,
//! yaw-based attention, expressiveness, and valence.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::au::{Au, AuScores};
use crate::error::{Error, Result};

/// One detected blink: the interval where AU43 rose above the on-threshold
/// and later fell below the off-threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlinkEvent {
    pub onset_ms: u64,
    pub offset_ms: u64,
    pub peak_score: f64,
}

impl BlinkEvent {
    pub fn duration_ms(&self) -> u64 {
        self.offset_ms - self.onset_ms
    }
}

/// Parameters of the expressive metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpressiveConfig {
    /// Blink starts when AU43 reaches this level...
    pub blink_theta_on: f64,
    /// ...and ends when it next drops below this one (hysteresis).
    pub blink_theta_off: f64,
    /// Accepted blink duration range; longer closures are not blinks.
    pub blink_min_ms: u64,
    pub blink_max_ms: u64,
    /// Trailing window for the blinks-per-minute rate.
    pub blink_rate_window_ms: u64,
    /// |yaw| at or below this counts as looking at the screen.
    pub attention_yaw_limit_deg: f64,
    pub attention_window_ms: u64,
    /// Upper- and lower-face AU weights for expressiveness (non-negative).
    pub expressiveness_weights: BTreeMap<Au, f64>,
    pub valence_positive: BTreeMap<Au, f64>,
    pub valence_negative: BTreeMap<Au, f64>,
}

impl Default for ExpressiveConfig {
    fn default() -> Self {
        let unit = |aus: &[Au]| -> BTreeMap<Au, f64> {
            aus.iter().map(|&au| (au, 1.0)).collect()
        };
        ExpressiveConfig {
            blink_theta_on: 60.0,
            blink_theta_off: 40.0,
            blink_min_ms: 70,
            blink_max_ms: 500,
            blink_rate_window_ms: 60_000,
            attention_yaw_limit_deg: 30.0,
            attention_window_ms: 10_000,
            expressiveness_weights: unit(&[
                // upper face
                Au::Au1,
                Au::Au2,
                Au::Au4,
                Au::Au5,
                // lower face
                Au::Au12,
                Au::Au15,
                Au::Au25,
                Au::Au26,
            ]),
            valence_positive: unit(&[Au::Au6, Au::Au12]),
            valence_negative: unit(&[Au::Au4, Au::Au15, Au::Au9]),
        }
    }
}

impl ExpressiveConfig {
    pub fn validate(&self) -> Result<()> {
        let in_score_range =
            |v: f64| -> bool { (0.0..=100.0).contains(&v) };
        if !in_score_range(self.blink_theta_on) || !in_score_range(self.blink_theta_off) {
            return Err(Error::Config(
                "expressive: blink thresholds must lie in [0, 100]".into(),
            ));
        }
        if self.blink_theta_off > self.blink_theta_on {
            return Err(Error::Config(
                "expressive: blink_theta_off must not exceed blink_theta_on".into(),
            ));
        }
        if self.blink_min_ms > self.blink_max_ms {
            return Err(Error::Config(
                "expressive: blink_min_ms must not exceed blink_max_ms".into(),
            ));
        }
        if self.blink_rate_window_ms == 0 || self.attention_window_ms == 0 {
            return Err(Error::Config(
                "expressive: windows must be positive".into(),
            ));
        }
        if !(self.attention_yaw_limit_deg > 0.0 && self.attention_yaw_limit_deg < 90.0) {
            return Err(Error::Config(
                "expressive: attention_yaw_limit_deg must lie in (0, 90)".into(),
            ));
        }
        let check_weights = |map: &BTreeMap<Au, f64>, what: &str| -> Result<()> {
            let mut total = 0.0;
            for (&au, &w) in map {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Config(format!(
                        "expressive: {what} weight for {au} must be finite and non-negative"
                    )));
                }
                total += w;
            }
            if total <= 0.0 {
                return Err(Error::Config(format!(
                    "expressive: {what} weights must sum above zero"
                )));
            }
            Ok(())
        };
        check_weights(&self.expressiveness_weights, "expressiveness")?;
        check_weights(&self.valence_positive, "valence positive")?;
        check_weights(&self.valence_negative, "valence negative")?;
        Ok(())
    }
}

/// Streaming hysteresis state machine over the AU43 channel.
#[derive(Debug, Default)]
pub struct BlinkDetector {
    open: Option<(u64, f64)>, // onset, running peak
}

impl BlinkDetector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feed one sample; returns a blink when an interval just closed and
    /// passed the duration gate.
    pub fn update(&mut self, t_ms: u64, au43: f64, cfg: &ExpressiveConfig) -> Option<BlinkEvent> {
        match self.open {
            None => {
                if au43 >= cfg.blink_theta_on {
                    self.open = Some((t_ms, au43));
                }
                None
            }
            Some((onset, peak)) => {
                if au43 < cfg.blink_theta_off {
                    self.open = None;
                    let duration = t_ms - onset;
                    if (cfg.blink_min_ms..=cfg.blink_max_ms).contains(&duration) {
                        return Some(BlinkEvent {
                            onset_ms: onset,
                            offset_ms: t_ms,
                            peak_score: peak,
                        });
                    }
                    None
                } else {
                    self.open = Some((onset, peak.max(au43)));
                    None
                }
            }
        }
    }
}

/// Detect blinks over a whole AU43 series. Intervals still open at the end
/// of the stream are discarded.
pub fn detect_blinks(
    timestamps_ms: &[u64],
    au43: &[f64],
    cfg: &ExpressiveConfig,
) -> Vec<BlinkEvent> {
    debug_assert_eq!(timestamps_ms.len(), au43.len());
    let mut detector = BlinkDetector::new();
    timestamps_ms
        .iter()
        .zip(au43)
        .filter_map(|(&t, &v)| detector.update(t, v, cfg))
        .collect()
}

/// Blinks per minute at query time `t`: events whose offset lies in
/// `(t - window, t]`, scaled by 60000 / window.
pub fn blink_rate(events: &[BlinkEvent], t_ms: u64, window_ms: u64) -> f64 {
    debug_assert!(window_ms > 0);
    let lo = t_ms.saturating_sub(window_ms);
    let count = events
        .iter()
        .filter(|e| e.offset_ms <= t_ms && (e.offset_ms > lo || t_ms < window_ms))
        .count();
    count as f64 * 60_000.0 / window_ms as f64
}

/// Incremental blinks-per-minute over a trailing window.
#[derive(Debug)]
pub struct BlinkRateTracker {
    window_ms: u64,
    offsets: VecDeque<u64>,
}

impl BlinkRateTracker {
    pub fn new(window_ms: u64) -> Self {
        BlinkRateTracker {
            window_ms,
            offsets: VecDeque::new(),
        }
    }

    pub fn record(&mut self, event: &BlinkEvent) {
        self.offsets.push_back(event.offset_ms);
    }

    pub fn rate_at(&mut self, t_ms: u64) -> f64 {
        if t_ms >= self.window_ms {
            let cutoff = t_ms - self.window_ms;
            while matches!(self.offsets.front(), Some(&o) if o <= cutoff) {
                self.offsets.pop_front();
            }
        }
        self.offsets.len() as f64 * 60_000.0 / self.window_ms as f64
    }
}

/// Time-weighted fraction of the trailing window spent with |yaw| at or
/// below the limit.
///
/// Each inter-frame segment `(t[j-1], t[j]]` carries the yaw of its right
/// endpoint; segments whose yaw is unknown count toward neither numerator
/// nor denominator. Returns `None` while no posed segment is in the window.
#[derive(Debug)]
pub struct AttentionTracker {
    window_ms: u64,
    yaw_limit: f64,
    last_t: Option<u64>,
    segments: VecDeque<(u64, u64, Option<f64>)>,
}

impl AttentionTracker {
    pub fn new(window_ms: u64, yaw_limit_deg: f64) -> Self {
        AttentionTracker {
            window_ms,
            yaw_limit: yaw_limit_deg,
            last_t: None,
            segments: VecDeque::new(),
        }
    }

    /// Feed one frame and return the attention score at its timestamp.
    pub fn update(&mut self, t_ms: u64, yaw_deg: Option<f64>) -> Option<f64> {
        if let Some(prev) = self.last_t {
            if t_ms > prev {
                self.segments.push_back((prev, t_ms, yaw_deg));
            }
        }
        self.last_t = Some(t_ms);

        let lo = t_ms.saturating_sub(self.window_ms);
        while matches!(self.segments.front(), Some(&(_, end, _)) if end <= lo) {
            self.segments.pop_front();
        }

        let mut on = 0.0;
        let mut total = 0.0;
        for &(start, end, yaw) in &self.segments {
            let Some(yaw) = yaw else { continue };
            let overlap = (end - start.max(lo)) as f64;
            total += overlap;
            if yaw.abs() <= self.yaw_limit {
                on += overlap;
            }
        }
        if total > 0.0 {
            Some(100.0 * on / total)
        } else {
            None
        }
    }
}

/// Attention score per frame over a yaw series; `None` entries are frames
/// without a pose.
pub fn attention(
    timestamps_ms: &[u64],
    yaw_deg: &[Option<f64>],
    cfg: &ExpressiveConfig,
) -> Vec<Option<f64>> {
    debug_assert_eq!(timestamps_ms.len(), yaw_deg.len());
    let mut tracker = AttentionTracker::new(cfg.attention_window_ms, cfg.attention_yaw_limit_deg);
    timestamps_ms
        .iter()
        .zip(yaw_deg)
        .map(|(&t, &yaw)| tracker.update(t, yaw))
        .collect()
}

/// Normalized weighted sum of the configured AUs, clamped to [0, 100].
pub fn expressiveness(au: &AuScores, weights: &BTreeMap<Au, f64>) -> f64 {
    let mut sum = 0.0;
    let mut total = 0.0;
    for (&channel, &w) in weights {
        sum += w * au.get(channel);
        total += w;
    }
    (sum / total).clamp(0.0, 100.0)
}

/// Positive minus negative normalized weighted sums, clamped to [-100, 100].
pub fn valence(
    au: &AuScores,
    positive: &BTreeMap<Au, f64>,
    negative: &BTreeMap<Au, f64>,
) -> f64 {
    let side = |weights: &BTreeMap<Au, f64>| -> f64 {
        let mut sum = 0.0;
        let mut total = 0.0;
        for (&channel, &w) in weights {
            sum += w * au.get(channel);
            total += w;
        }
        sum / total
    };
    (side(positive) - side(negative)).clamp(-100.0, 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExpressiveConfig {
        ExpressiveConfig::default()
    }

    /// au43 = amplitude on [on_ms, off_ms), sampled every `step` ms.
    fn pulse_series(
        on_ms: u64,
        off_ms: u64,
        amplitude: f64,
        total_ms: u64,
        step: u64,
    ) -> (Vec<u64>, Vec<f64>) {
        let ts: Vec<u64> = (0..=total_ms / step).map(|i| i * step).collect();
        let values = ts
            .iter()
            .map(|&t| if (on_ms..off_ms).contains(&t) { amplitude } else { 0.0 })
            .collect();
        (ts, values)
    }

    #[test]
    fn flat_zero_has_no_blinks() {
        let ts: Vec<u64> = (0..100).map(|i| i * 33).collect();
        let values = vec![0.0; ts.len()];
        assert!(detect_blinks(&ts, &values, &cfg()).is_empty());
    }

    #[test]
    fn square_pulse_yields_one_blink() {
        // Crossings by hand: first sample >= 60 at t=100, first < 40 at
        // t=250, duration 150 within [70, 500].
        let (ts, values) = pulse_series(100, 250, 80.0, 1_000, 50);
        let blinks = detect_blinks(&ts, &values, &cfg());
        assert_eq!(blinks.len(), 1);
        assert_eq!(blinks[0].onset_ms, 100);
        assert_eq!(blinks[0].offset_ms, 250);
        assert_eq!(blinks[0].peak_score, 80.0);
    }

    #[test]
    fn long_closure_is_not_a_blink() {
        let (ts, values) = pulse_series(100, 1_000, 80.0, 2_000, 50);
        assert!(detect_blinks(&ts, &values, &cfg()).is_empty());
    }

    #[test]
    fn too_short_pulse_rejected() {
        let (ts, values) = pulse_series(100, 150, 80.0, 1_000, 10);
        assert!(detect_blinks(&ts, &values, &cfg()).is_empty());
    }

    #[test]
    fn hysteresis_holds_between_thresholds() {
        // Dip to 50 (between off=40 and on=60) must not close the interval.
        let ts: Vec<u64> = (0..8).map(|i| i * 50).collect();
        let values = [0.0, 80.0, 50.0, 80.0, 50.0, 30.0, 0.0, 0.0];
        let blinks = detect_blinks(&ts, &values, &cfg());
        assert_eq!(blinks.len(), 1);
        assert_eq!(blinks[0].onset_ms, 50);
        assert_eq!(blinks[0].offset_ms, 250);
    }

    #[test]
    fn open_interval_at_stream_end_discarded() {
        let ts: Vec<u64> = (0..5).map(|i| i * 50).collect();
        let values = [0.0, 80.0, 80.0, 80.0, 80.0];
        assert!(detect_blinks(&ts, &values, &cfg()).is_empty());
    }

    #[test]
    fn blink_rate_definitional_cases() {
        assert_eq!(blink_rate(&[], 60_000, 60_000), 0.0);
        let events: Vec<BlinkEvent> = (0..5)
            .map(|i| BlinkEvent {
                onset_ms: 10_000 * i + 100,
                offset_ms: 10_000 * i + 250,
                peak_score: 80.0,
            })
            .collect();
        assert_eq!(blink_rate(&events, 60_000, 60_000), 5.0);
        // 3 events within a 30 s window: x 60000/30000.
        assert_eq!(blink_rate(&events[..3], 30_000, 30_000), 6.0);
        // Events outside the trailing window do not count.
        assert_eq!(blink_rate(&events[..1], 60_000, 10_000), 0.0);
    }

    #[test]
    fn rate_tracker_matches_batch_rate() {
        let events: Vec<BlinkEvent> = (0..7)
            .map(|i| BlinkEvent {
                onset_ms: 7_000 * i,
                offset_ms: 7_000 * i + 150,
                peak_score: 70.0,
            })
            .collect();
        let mut tracker = BlinkRateTracker::new(30_000);
        let mut next_event = 0;
        for t in (0..60_000).step_by(500) {
            while next_event < events.len() && events[next_event].offset_ms <= t {
                tracker.record(&events[next_event]);
                next_event += 1;
            }
            assert_eq!(tracker.rate_at(t), blink_rate(&events, t, 30_000), "t={t}");
        }
    }

    #[test]
    fn attention_fully_on_screen() {
        let ts: Vec<u64> = (0..50).map(|i| i * 200).collect();
        let yaw = vec![Some(0.0); ts.len()];
        let out = attention(&ts, &yaw, &cfg());
        assert_eq!(out[0], None); // no elapsed time yet
        assert!(out[1..].iter().all(|v| *v == Some(100.0)));
    }

    #[test]
    fn attention_fully_off_screen() {
        let ts: Vec<u64> = (0..50).map(|i| i * 200).collect();
        let yaw = vec![Some(80.0); ts.len()];
        let out = attention(&ts, &yaw, &cfg());
        assert!(out[1..].iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn attention_half_window_each_side() {
        // 101 samples at 100 ms over a 10 s window: yaw 0 through t=5000,
        // 60 degrees after. At t=10000 exactly half the covered time is
        // within the limit.
        let ts: Vec<u64> = (0..=100).map(|i| i * 100).collect();
        let yaw: Vec<Option<f64>> = ts
            .iter()
            .map(|&t| Some(if t <= 5_000 { 0.0 } else { 60.0 }))
            .collect();
        let out = attention(&ts, &yaw, &cfg());
        assert_eq!(out[100], Some(50.0));
    }

    #[test]
    fn attention_skips_poseless_frames() {
        let ts: Vec<u64> = (0..=10).map(|i| i * 100).collect();
        let mut yaw: Vec<Option<f64>> = ts.iter().map(|_| Some(0.0)).collect();
        yaw[5] = None; // that segment drops out of both sides
        let out = attention(&ts, &yaw, &cfg());
        assert_eq!(out[10], Some(100.0));

        let all_missing: Vec<Option<f64>> = ts.iter().map(|_| None).collect();
        let out = attention(&ts, &all_missing, &cfg());
        assert!(out.iter().all(Option::is_none));
    }

    #[test]
    fn attention_is_sign_symmetric() {
        let ts: Vec<u64> = (0..=40).map(|i| i * 250).collect();
        let pattern: Vec<f64> = (0..=40).map(|i| ((i * 13) % 70) as f64 - 35.0).collect();
        let plus: Vec<Option<f64>> = pattern.iter().map(|&v| Some(v)).collect();
        let minus: Vec<Option<f64>> = pattern.iter().map(|&v| Some(-v)).collect();
        assert_eq!(attention(&ts, &plus, &cfg()), attention(&ts, &minus, &cfg()));
    }

    #[test]
    fn expressiveness_worked_example() {
        let weights: BTreeMap<Au, f64> =
            [Au::Au1, Au::Au4, Au::Au12, Au::Au15].iter().map(|&a| (a, 1.0)).collect();
        let mut au = AuScores::zeros();
        au.set(Au::Au1, 100.0);
        au.set(Au::Au12, 60.0);
        assert_eq!(expressiveness(&au, &weights), 40.0); // 160 / 4

        assert_eq!(expressiveness(&AuScores::zeros(), &weights), 0.0);
        let mut full = AuScores::zeros();
        for &a in weights.keys() {
            full.set(a, 100.0);
        }
        assert_eq!(expressiveness(&full, &weights), 100.0);
    }

    #[test]
    fn valence_poles() {
        let c = cfg();
        assert_eq!(
            valence(&AuScores::zeros(), &c.valence_positive, &c.valence_negative),
            0.0
        );
        let mut pos = AuScores::zeros();
        pos.set(Au::Au6, 100.0);
        pos.set(Au::Au12, 100.0);
        assert_eq!(valence(&pos, &c.valence_positive, &c.valence_negative), 100.0);
        let mut neg = AuScores::zeros();
        neg.set(Au::Au4, 100.0);
        neg.set(Au::Au15, 100.0);
        neg.set(Au::Au9, 100.0);
        assert_eq!(valence(&neg, &c.valence_positive, &c.valence_negative), -100.0);
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut c = cfg();
        c.blink_theta_off = 80.0; // above theta_on
        assert!(c.validate().is_err());

        let mut c = cfg();
        c.expressiveness_weights = BTreeMap::from([(Au::Au1, 0.0)]);
        assert!(c.validate().is_err());

        let mut c = cfg();
        c.attention_yaw_limit_deg = 95.0;
        assert!(c.validate().is_err());

        assert!(cfg().validate().is_ok());
    }
}
