//! The end-to-end analytics engine: one validated configuration object and
//! the per-track pipeline that turns frame observations into metric frames.
//!
//! Tracks are processed independently (and in parallel); output order is
//! fixed by sorting on (video_id, face_id, timestamp_ms), so worker count
//! never changes output bytes.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::au::{Au, ALL_AUS};
use crate::composite::{composite_score, default_confusion_rules, default_sentimentality_rules, RuleSet};
use crate::emotion::{emotion_scores, EmotionWeightTable, ALL_EMOTIONS};
use crate::error::{Error, Result};
use crate::expressive::{AttentionTracker, BlinkDetector, BlinkEvent, BlinkRateTracker, ExpressiveConfig};
use crate::model::{ExpressiveScores, FrameObservation, MetricFrame};
use crate::postprocess::{postprocess_stream, PostprocessConfig};
use crate::quality::{self, QualityConfig};
use crate::stream::validate_stream;
use crate::tracking::{estimate_head_pose, PoseTemplate, TrackerConfig};

/// Neutral threshold plus the emotion weight table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmotionConfig {
    /// An emotion at or above this score counts as present (0-100 scale).
    pub theta_e: f64,
    pub weights: EmotionWeightTable,
}

impl Default for EmotionConfig {
    fn default() -> Self {
        EmotionConfig {
            theta_e: 20.0,
            weights: EmotionWeightTable::default(),
        }
    }
}

/// The single self-describing configuration file. Every threshold or table
/// the underlying method leaves open lives here, not in code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub config_version: u32,
    pub tracking: TrackerConfig,
    pub pose_template: PoseTemplate,
    pub postprocess: PostprocessConfig,
    pub emotions: EmotionConfig,
    pub composites: Vec<RuleSet>,
    pub expressive: ExpressiveConfig,
    pub quality: QualityConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            config_version: 1,
            tracking: TrackerConfig::default(),
            pose_template: PoseTemplate::default(),
            postprocess: PostprocessConfig::default(),
            emotions: EmotionConfig::default(),
            composites: vec![
                default_sentimentality_rules(20.0),
                default_confusion_rules(20.0),
            ],
            expressive: ExpressiveConfig::default(),
            quality: QualityConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.config_version != 1 {
            return Err(Error::Config(format!(
                "unsupported config_version {} (expected 1)",
                self.config_version
            )));
        }
        self.tracking.validate()?;
        self.pose_template.validate()?;
        self.postprocess.validate()?;
        if !(self.emotions.theta_e > 0.0 && self.emotions.theta_e < 100.0) {
            return Err(Error::Config(
                "emotions.theta_e must lie in (0, 100)".into(),
            ));
        }
        self.emotions.weights.validate()?;
        let mut names = std::collections::BTreeSet::new();
        for rules in &self.composites {
            rules.validate()?;
            if !names.insert(rules.name.clone()) {
                return Err(Error::Config(format!(
                    "duplicate composite state name {:?}",
                    rules.name
                )));
            }
        }
        self.expressive.validate()?;
        self.quality.validate()?;
        Ok(())
    }

    /// Parse from TOML; unknown keys are rejected.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: EngineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Composite state names in output-column order.
    pub fn composite_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.composites.iter().map(|r| r.name.clone()).collect();
        names.sort();
        names
    }
}

/// Everything the pipeline produced for one track.
#[derive(Debug, Clone)]
pub struct TrackOutput {
    pub video_id: String,
    pub face_id: String,
    pub frames: Vec<MetricFrame>,
    pub blinks: Vec<BlinkEvent>,
}

/// Wall-clock nanoseconds per pipeline stage for one track, plus per-frame
/// totals (batch stages amortized uniformly over the track's frames).
#[derive(Debug, Clone, Default)]
pub struct TrackTimings {
    pub frames: usize,
    pub postprocess_ns: u64,
    pub pose_ns: u64,
    pub emotions_ns: u64,
    pub composites_ns: u64,
    pub expressive_ns: u64,
    pub quality_ns: u64,
    pub per_frame_ns: Vec<u64>,
}

impl TrackTimings {
    pub fn stage_sum_ns(&self) -> u64 {
        self.postprocess_ns
            + self.pose_ns
            + self.emotions_ns
            + self.composites_ns
            + self.expressive_ns
            + self.quality_ns
    }

    pub fn merge(&mut self, other: &TrackTimings) {
        self.frames += other.frames;
        self.postprocess_ns += other.postprocess_ns;
        self.pose_ns += other.pose_ns;
        self.emotions_ns += other.emotions_ns;
        self.composites_ns += other.composites_ns;
        self.expressive_ns += other.expressive_ns;
        self.quality_ns += other.quality_ns;
        self.per_frame_ns.extend_from_slice(&other.per_frame_ns);
    }
}

/// A validated configuration bound to the per-track pipeline.
pub struct Engine {
    config: EngineConfig,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Engine { config })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Analyze one track. Observations must belong to one (video, face)
    /// stream, carry strictly increasing timestamps, and have AU scores.
    pub fn analyze_track(&self, observations: &[FrameObservation]) -> Result<TrackOutput> {
        self.analyze_track_inner(observations, false)
            .map(|(out, _)| out)
    }

    /// Like [`Engine::analyze_track`], also reporting stage timings.
    pub fn analyze_track_timed(
        &self,
        observations: &[FrameObservation],
    ) -> Result<(TrackOutput, TrackTimings)> {
        self.analyze_track_inner(observations, true)
    }

    fn analyze_track_inner(
        &self,
        observations: &[FrameObservation],
        timed: bool,
    ) -> Result<(TrackOutput, TrackTimings)> {
        let first = observations.first().ok_or_else(|| {
            Error::InvalidStream("cannot analyze an empty track".into())
        })?;
        let video_id = first.video_id.clone();
        let face_id = first.face_id.clone();
        let mut timings = TrackTimings {
            frames: observations.len(),
            ..TrackTimings::default()
        };

        let mut timestamps = Vec::with_capacity(observations.len());
        let mut raw = Vec::with_capacity(observations.len());
        for (i, obs) in observations.iter().enumerate() {
            if obs.video_id != video_id || obs.face_id != face_id {
                return Err(Error::InvalidStream(format!(
                    "track {video_id}/{face_id}: frame {i} belongs to {}/{}",
                    obs.video_id, obs.face_id
                )));
            }
            if i > 0 && obs.timestamp_ms <= timestamps[i - 1] {
                return Err(Error::InvalidStream(format!(
                    "track {video_id}/{face_id}: non-monotone timestamp at index {i}"
                )));
            }
            let au = obs.raw_au.ok_or_else(|| {
                Error::InvalidStream(format!(
                    "track {video_id}/{face_id}: frame at {} ms has no AU scores",
                    obs.timestamp_ms
                ))
            })?;
            timestamps.push(obs.timestamp_ms);
            raw.push(au);
        }

        let pp_start = Instant::now();
        let processed = postprocess_stream(&timestamps, &raw, &self.config.postprocess);
        if timed {
            timings.postprocess_ns = pp_start.elapsed().as_nanos() as u64;
        }

        let cfg = &self.config;
        let mut blink_detector = BlinkDetector::new();
        let mut rate_tracker = BlinkRateTracker::new(cfg.expressive.blink_rate_window_ms);
        let mut attention_tracker = AttentionTracker::new(
            cfg.expressive.attention_window_ms,
            cfg.expressive.attention_yaw_limit_deg,
        );
        let mut blinks = Vec::new();
        let mut frames = Vec::with_capacity(observations.len());
        let amortized_pp = timings.postprocess_ns / observations.len().max(1) as u64;

        for (i, obs) in observations.iter().enumerate() {
            let frame_start = Instant::now();
            let t = timestamps[i];
            let au = processed[i];

            let stage_start = Instant::now();
            let pose = obs
                .landmarks
                .as_ref()
                .and_then(|lm| estimate_head_pose(lm, &cfg.pose_template).ok());
            if timed {
                timings.pose_ns += stage_start.elapsed().as_nanos() as u64;
            }

            let stage_start = Instant::now();
            let emotions = emotion_scores(&au, &cfg.emotions.weights, cfg.emotions.theta_e);
            if timed {
                timings.emotions_ns += stage_start.elapsed().as_nanos() as u64;
            }

            let stage_start = Instant::now();
            let mut composites = BTreeMap::new();
            for rules in &cfg.composites {
                composites.insert(rules.name.clone(), composite_score(&au, rules));
            }
            if timed {
                timings.composites_ns += stage_start.elapsed().as_nanos() as u64;
            }

            let stage_start = Instant::now();
            if let Some(event) = blink_detector.update(t, au.get(Au::Au43), &cfg.expressive) {
                rate_tracker.record(&event);
                blinks.push(event);
            }
            let blink_rate = rate_tracker.rate_at(t);
            let attention = attention_tracker.update(t, pose.map(|p| p.yaw));
            let expressive = ExpressiveScores {
                blink_rate,
                attention,
                expressiveness: crate::expressive::expressiveness(
                    &au,
                    &cfg.expressive.expressiveness_weights,
                ),
                valence: crate::expressive::valence(
                    &au,
                    &cfg.expressive.valence_positive,
                    &cfg.expressive.valence_negative,
                ),
            };
            if timed {
                timings.expressive_ns += stage_start.elapsed().as_nanos() as u64;
            }

            let stage_start = Instant::now();
            let quality =
                quality::assess(obs.luma.as_ref(), obs.landmarks.as_ref(), &cfg.quality);
            if timed {
                timings.quality_ns += stage_start.elapsed().as_nanos() as u64;
            }

            frames.push(MetricFrame {
                timestamp_ms: t,
                processed_au: au,
                emotions,
                composites,
                expressive,
                quality,
                pose,
            });
            if timed {
                timings
                    .per_frame_ns
                    .push(frame_start.elapsed().as_nanos() as u64 + amortized_pp);
            }
        }

        Ok((
            TrackOutput {
                video_id,
                face_id,
                frames,
                blinks,
            },
            timings,
        ))
    }

    /// Group a stream by (video, face), analyze all tracks in parallel, and
    /// return them sorted by track key. Input must be per-track monotone.
    pub fn analyze_stream(&self, frames: Vec<FrameObservation>) -> Result<Vec<TrackOutput>> {
        let report = validate_stream(frames.iter());
        if !report.is_monotone() {
            let bad = report.non_monotone().next().expect("non-monotone track");
            return Err(Error::InvalidStream(format!(
                "track {}/{}: non-monotone timestamp at index {}",
                bad.video_id, bad.face_id, bad.violations[0]
            )));
        }
        let mut by_track: BTreeMap<(String, String), Vec<FrameObservation>> = BTreeMap::new();
        for frame in frames {
            by_track
                .entry((frame.video_id.clone(), frame.face_id.clone()))
                .or_default()
                .push(frame);
        }
        let tracks: Vec<Vec<FrameObservation>> = by_track.into_values().collect();
        tracks
            .par_iter()
            .map(|track| self.analyze_track(track))
            .collect()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Fixed per-frame CSV header for a given composite column set.
pub fn metric_csv_header(composite_names: &[String]) -> Vec<String> {
    let mut header = vec![
        "video_id".to_string(),
        "face_id".to_string(),
        "timestamp_ms".to_string(),
    ];
    header.extend(ALL_AUS.iter().map(|au| au.column()));
    header.extend(ALL_EMOTIONS.iter().map(|e| e.name().to_string()));
    header.push("neutral".into());
    for name in composite_names {
        header.push(name.clone());
        header.push(format!("{name}_active"));
    }
    header.extend(
        [
            "blink_rate",
            "attention",
            "expressiveness",
            "valence",
            "pitch",
            "yaw",
            "roll",
            "mean_luminance",
            "luminance_diff_lr",
            "variance_luminance",
            "high_freq_power",
            "inter_ocular_distance",
        ]
        .map(String::from),
    );
    header
}

/// Write per-frame metric records as CSV. The column set is documented in
/// `docs/FORMATS.md`; floats use the shortest round-trip form so output is
/// byte-stable.
pub fn write_metric_csv<W: Write>(
    tracks: &[TrackOutput],
    composite_names: &[String],
    writer: &mut W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(metric_csv_header(composite_names))?;
    for track in tracks {
        for frame in &track.frames {
            let mut fields = vec![
                track.video_id.clone(),
                track.face_id.clone(),
                frame.timestamp_ms.to_string(),
            ];
            fields.extend(frame.processed_au.as_array().iter().map(|v| v.to_string()));
            for e in ALL_EMOTIONS {
                fields.push(frame.emotions.get(e).to_string());
            }
            fields.push(frame.emotions.neutral.to_string());
            for name in composite_names {
                match frame.composites.get(name) {
                    Some(c) => {
                        fields.push(c.score.to_string());
                        fields.push(c.active.to_string());
                    }
                    None => {
                        fields.push(String::new());
                        fields.push(String::new());
                    }
                }
            }
            fields.push(frame.expressive.blink_rate.to_string());
            fields.push(opt(frame.expressive.attention));
            fields.push(frame.expressive.expressiveness.to_string());
            fields.push(frame.expressive.valence.to_string());
            fields.push(opt(frame.pose.map(|p| p.pitch)));
            fields.push(opt(frame.pose.map(|p| p.yaw)));
            fields.push(opt(frame.pose.map(|p| p.roll)));
            let q = frame.quality.unwrap_or_default();
            fields.push(opt(q.mean_luminance));
            fields.push(opt(q.luminance_diff_lr));
            fields.push(opt(q.variance_luminance));
            fields.push(opt(q.high_freq_power));
            fields.push(opt(q.inter_ocular_distance));
            out.write_record(&fields)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct MetricRecord<'a> {
    video_id: &'a str,
    face_id: &'a str,
    timestamp_ms: u64,
    processed_au: BTreeMap<String, f64>,
    emotions: &'a crate::emotion::EmotionScores,
    composites: &'a BTreeMap<String, crate::model::CompositeScore>,
    expressive: &'a ExpressiveScores,
    #[serde(skip_serializing_if = "Option::is_none")]
    quality: &'a Option<crate::quality::QualityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pose: &'a Option<crate::model::HeadPose>,
}

/// Write per-frame metric records as JSON Lines.
pub fn write_metric_jsonl<W: Write>(tracks: &[TrackOutput], writer: &mut W) -> Result<()> {
    for track in tracks {
        for frame in &track.frames {
            let record = MetricRecord {
                video_id: &track.video_id,
                face_id: &track.face_id,
                timestamp_ms: frame.timestamp_ms,
                processed_au: frame
                    .processed_au
                    .iter()
                    .map(|(au, v)| (au.column(), v))
                    .collect(),
                emotions: &frame.emotions,
                composites: &frame.composites,
                expressive: &frame.expressive,
                quality: &frame.quality,
                pose: &frame.pose,
            };
            serde_json::to_writer(&mut *writer, &record)?;
            writer.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Write detected blink events as CSV.
pub fn write_blinks_csv<W: Write>(tracks: &[TrackOutput], writer: &mut W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["video_id", "face_id", "onset_ms", "offset_ms", "peak_score"])?;
    for track in tracks {
        for blink in &track.blinks {
            out.write_record([
                track.video_id.clone(),
                track.face_id.clone(),
                blink.onset_ms.to_string(),
                blink.offset_ms.to_string(),
                blink.peak_score.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
