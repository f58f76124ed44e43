//! Deterministic synthetic data: AU streams, labeled ad corpora, and
//! procedural crops, all with planted ground truth.
//!
//! Every random draw comes from a counter-based source keyed by
//! (seed, ad, session, channel, role), so output is reproducible regardless
//! of generation order.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::au::{Au, AuScores, ALL_AUS};
use crate::composite::{CombinationRule, RuleSet};
use crate::error::{Error, Result};
use crate::evaluation::Demographics;
use crate::model::{BoundingBox, FrameObservation, HeadPose, LumaGrid};
use crate::postprocess::LabeledSeries;
use crate::tracking::{project_template, PoseTemplate};

/// Deterministic RNG keyed by a seed and a path of indices.
pub fn keyed_rng(seed: u64, path: &[u64]) -> ChaCha12Rng {
    fn splitmix(state: &mut u64) -> u64 {
        *state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
    let mut state = seed;
    for &w in path {
        state ^= splitmix(&mut state).wrapping_add(w.wrapping_mul(0x2545F4914F6CDD1D));
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Kinds of planted events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Square pulse on the listed AUs.
    AuPulse,
    /// Square AU43 pulse (a planted blink).
    Blink,
    /// Linear yaw ramp from `amplitude_from` to `amplitude`, realized as
    /// projected landmarks.
    YawSweep,
    /// Constant additive offset on the listed AUs (glasses-style bias).
    BiasOffset,
    /// Square pulse on several AUs simultaneously (a planted combination).
    ComboFire,
}

/// One planted event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub kind: EventKind,
    #[serde(default)]
    pub aus: Vec<Au>,
    pub amplitude: f64,
    /// Starting value for ramps; defaults to the amplitude (a hold).
    #[serde(default)]
    pub amplitude_from: Option<f64>,
    pub onset_ms: u64,
    pub duration_ms: u64,
}

impl EventSpec {
    fn end_ms(&self) -> u64 {
        self.onset_ms + self.duration_ms
    }

    fn overlaps(&self, other: &EventSpec) -> bool {
        self.onset_ms < other.end_ms() && other.onset_ms < self.end_ms()
    }

    fn touches_au43(&self) -> bool {
        matches!(self.kind, EventKind::Blink) || self.aus.contains(&Au::Au43)
    }
}

/// Procedural crop patterns for the quality metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "pattern")]
pub enum CropPattern {
    Constant { value: u8 },
    HorizontalRamp,
    Checkerboard { period: usize },
    Noise { sigma: f64 },
}

/// When and how crops are attached to frames.
// No deny_unknown_fields here: it cannot coexist with the flattened pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropSpec {
    #[serde(flatten)]
    pub pattern: CropPattern,
    pub size: usize,
    /// A crop every n-th frame (1 = every frame).
    pub every_n_frames: u64,
}

/// A synthetic single-face stream description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub video_id: String,
    pub face_id: String,
    pub duration_ms: u64,
    pub fps: f64,
    pub events: Vec<EventSpec>,
    /// Gaussian noise sigma applied to every AU channel.
    pub noise_sigma: f64,
    /// Emit landmarks (and thereby pose) on every frame.
    pub landmarks: bool,
    pub crop: Option<CropSpec>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            seed: 0,
            video_id: "video_0".into(),
            face_id: "face_0".into(),
            duration_ms: 30_000,
            fps: 30.0,
            events: Vec::new(),
            noise_sigma: 0.0,
            landmarks: true,
            crop: None,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fps <= 0.0 || self.fps.is_nan() {
            return Err(Error::InvalidScenario("fps must be positive".into()));
        }
        if self.duration_ms == 0 {
            return Err(Error::InvalidScenario("duration must be positive".into()));
        }
        if self.noise_sigma < 0.0 || self.noise_sigma.is_nan() {
            return Err(Error::InvalidScenario("noise sigma must be >= 0".into()));
        }
        for event in &self.events {
            if event.end_ms() > self.duration_ms {
                return Err(Error::InvalidScenario(format!(
                    "event at {} ms runs past the stream end",
                    event.onset_ms
                )));
            }
            match event.kind {
                EventKind::Blink | EventKind::YawSweep => {}
                _ if event.aus.is_empty() => {
                    return Err(Error::InvalidScenario(format!(
                        "{:?} event needs at least one AU",
                        event.kind
                    )));
                }
                _ => {}
            }
        }
        // Contradictory overlaps: two writers of the AU43 channel, or two
        // yaw ramps, cannot coexist.
        let au43: Vec<&EventSpec> = self.events.iter().filter(|e| e.touches_au43()).collect();
        for (i, a) in au43.iter().enumerate() {
            for b in &au43[i + 1..] {
                if a.overlaps(b) {
                    return Err(Error::InvalidScenario(format!(
                        "AU43 events at {} and {} ms overlap",
                        a.onset_ms, b.onset_ms
                    )));
                }
            }
        }
        let yaws: Vec<&EventSpec> = self
            .events
            .iter()
            .filter(|e| e.kind == EventKind::YawSweep)
            .collect();
        for (i, a) in yaws.iter().enumerate() {
            for b in &yaws[i + 1..] {
                if a.overlaps(b) {
                    return Err(Error::InvalidScenario(format!(
                        "yaw events at {} and {} ms overlap",
                        a.onset_ms, b.onset_ms
                    )));
                }
            }
        }
        if let Some(crop) = &self.crop {
            if crop.size == 0 || crop.every_n_frames == 0 {
                return Err(Error::InvalidScenario(
                    "crop size and cadence must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Frame timestamps in integer milliseconds.
    pub fn timestamps(&self) -> Vec<u64> {
        let n = (self.duration_ms as f64 * self.fps / 1000.0).floor() as u64;
        (0..n.max(1))
            .map(|i| (i as f64 * 1000.0 / self.fps).floor() as u64)
            .collect()
    }
}

/// A planted event as recorded in the ground-truth sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEvent {
    pub kind: EventKind,
    pub aus: Vec<Au>,
    pub onset_ms: u64,
    pub duration_ms: u64,
    pub amplitude: f64,
}

/// Ground truth for one generated stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub video_id: String,
    pub face_id: String,
    pub frame_count: usize,
    pub duration_ms: u64,
    pub events: Vec<PlantedEvent>,
}

impl GroundTruth {
    pub fn blink_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Blink)
            .count()
    }
}

fn crop_for_frame(spec: &CropSpec, scenario_seed: u64, frame_idx: u64) -> LumaGrid {
    let n = spec.size;
    match spec.pattern {
        CropPattern::Constant { value } => LumaGrid::from_fn(n, n, |_, _| value),
        CropPattern::HorizontalRamp => {
            LumaGrid::from_fn(n, n, |_, c| ((c * 255) / n.max(1)) as u8)
        }
        CropPattern::Checkerboard { period } => {
            let p = period.max(1);
            LumaGrid::from_fn(n, n, |r, c| if (r / p + c / p) % 2 == 0 { 0 } else { 255 })
        }
        CropPattern::Noise { sigma } => {
            let mut rng = keyed_rng(scenario_seed, &[0xC209, frame_idx]);
            LumaGrid::from_fn(n, n, |_, _| {
                let z: f64 = rng.sample(StandardNormal);
                (128.0 + sigma * z).clamp(0.0, 255.0) as u8
            })
        }
    }
}

/// Generate a stream from a scenario. Deterministic in the seed: the same
/// spec always serializes to identical bytes.
pub fn generate_stream(spec: &ScenarioSpec) -> Result<(Vec<FrameObservation>, GroundTruth)> {
    spec.validate()?;
    let timestamps = spec.timestamps();
    let n = timestamps.len();
    let template = PoseTemplate::default();

    // Per-channel values: planted events plus keyed noise, clamped.
    let mut channels = vec![vec![0.0f64; n]; ALL_AUS.len()];
    for event in &spec.events {
        let targets: Vec<Au> = match event.kind {
            EventKind::Blink => vec![Au::Au43],
            EventKind::YawSweep => continue,
            _ => event.aus.clone(),
        };
        for (i, &t) in timestamps.iter().enumerate() {
            if t >= event.onset_ms && t < event.end_ms() {
                for &au in &targets {
                    channels[au.index()][i] += event.amplitude;
                }
            }
        }
    }
    if spec.noise_sigma > 0.0 {
        for (ci, channel) in channels.iter_mut().enumerate() {
            let mut rng = keyed_rng(spec.seed, &[0xA0, ci as u64]);
            for v in channel.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += spec.noise_sigma * z;
            }
        }
    }

    // Yaw per frame from ramp events; zero elsewhere.
    let yaw_at = |t: u64| -> f64 {
        for event in &spec.events {
            if event.kind == EventKind::YawSweep && t >= event.onset_ms && t < event.end_ms() {
                let from = event.amplitude_from.unwrap_or(event.amplitude);
                let frac = (t - event.onset_ms) as f64 / event.duration_ms.max(1) as f64;
                return from + (event.amplitude - from) * frac;
            }
        }
        0.0
    };

    let box_ = BoundingBox {
        x: 260.0,
        y: 160.0,
        w: 120.0,
        h: 150.0,
    };
    let mut frames = Vec::with_capacity(n);
    for (i, &t) in timestamps.iter().enumerate() {
        let mut au = AuScores::zeros();
        for (ci, channel) in channels.iter().enumerate() {
            au.set(ALL_AUS[ci], channel[i].clamp(0.0, 100.0));
        }
        let landmarks = if spec.landmarks {
            let pose = HeadPose {
                pitch: 0.0,
                yaw: yaw_at(t),
                roll: 0.0,
            };
            Some(project_template(&template, &pose, 100.0, (320.0, 240.0)))
        } else {
            None
        };
        let luma = spec
            .crop
            .filter(|c| (i as u64).is_multiple_of(c.every_n_frames))
            .map(|c| crop_for_frame(&c, spec.seed, i as u64));
        frames.push(FrameObservation {
            video_id: spec.video_id.clone(),
            face_id: spec.face_id.clone(),
            timestamp_ms: t,
            box_,
            landmarks,
            raw_au: Some(au),
            luma,
        });
    }

    let truth = GroundTruth {
        video_id: spec.video_id.clone(),
        face_id: spec.face_id.clone(),
        frame_count: n,
        duration_ms: spec.duration_ms,
        events: spec
            .events
            .iter()
            .map(|e| PlantedEvent {
                kind: e.kind,
                aus: match e.kind {
                    EventKind::Blink => vec![Au::Au43],
                    _ => e.aus.clone(),
                },
                onset_ms: e.onset_ms,
                duration_ms: e.duration_ms,
                amplitude: e.amplitude,
            })
            .collect(),
    };
    Ok((frames, truth))
}

/// Parameters of a synthetic labeled ad corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSpec {
    pub seed: u64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub sessions_per_ad: usize,
    pub session_duration_ms: u64,
    pub fps: f64,
    /// Combinations fired inside moments of positive ads. Negative ads fire
    /// the same AUs one at a time so only the conjunction separates.
    pub planted: RuleSet,
    pub moments_per_ad: usize,
    pub moment_ms: u64,
    pub amplitude: f64,
    pub noise_sigma: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 0,
            n_pos: 15,
            n_neg: 15,
            sessions_per_ad: 10,
            session_duration_ms: 30_000,
            fps: 15.0,
            planted: RuleSet {
                name: "sentimentality".into(),
                rules: vec![CombinationRule::conjunction(&[Au::Au12, Au::Au1], 20.0)],
            },
            moments_per_ad: 2,
            moment_ms: 3_000,
            amplitude: 80.0,
            noise_sigma: 2.0,
        }
    }
}

const SLOT_LEAD_MS: u64 = 1_000;
const SLOT_GAP_MS: u64 = 500;

impl CorpusSpec {
    fn max_rule_size(&self) -> usize {
        self.planted
            .rules
            .iter()
            .map(|r| r.conjuncts.len())
            .max()
            .unwrap_or(0)
    }

    fn slot_start(&self, k: usize) -> u64 {
        SLOT_LEAD_MS + k as u64 * (self.moment_ms + SLOT_GAP_MS)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pos == 0 || self.n_neg == 0 {
            return Err(Error::InvalidScenario(
                "corpus needs at least one ad per class".into(),
            ));
        }
        if self.sessions_per_ad == 0 {
            return Err(Error::InvalidScenario(
                "sessions_per_ad must be positive".into(),
            ));
        }
        if self.fps <= 0.0 || self.fps.is_nan() {
            return Err(Error::InvalidScenario("fps must be positive".into()));
        }
        self.planted.validate()?;
        if !(self.amplitude > 0.0 && self.amplitude <= 100.0) {
            return Err(Error::InvalidScenario(
                "amplitude must lie in (0, 100]".into(),
            ));
        }
        if self.moments_per_ad == 0 {
            return Err(Error::InvalidScenario(
                "moments_per_ad must be positive".into(),
            ));
        }
        let slots = self.moments_per_ad * self.max_rule_size();
        if self.slot_start(slots) > self.session_duration_ms {
            return Err(Error::InvalidScenario(format!(
                "{} event slots of {} ms do not fit in a {} ms session",
                slots, self.moment_ms, self.session_duration_ms
            )));
        }
        Ok(())
    }
}

/// One generated participant session: the raw stream plus its demographics.
#[derive(Debug, Clone)]
pub struct GeneratedSession {
    pub session_id: String,
    pub demographics: Demographics,
    pub frames: Vec<FrameObservation>,
}

/// One generated ad with its label and (for positives) labeled moments.
#[derive(Debug, Clone)]
pub struct GeneratedAd {
    pub ad_id: String,
    pub label: bool,
    pub moments: Vec<(u64, u64)>,
    pub sessions: Vec<GeneratedSession>,
}

/// The full synthetic corpus: raw streams, before any analysis.
#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub ads: Vec<GeneratedAd>,
    pub planted: RuleSet,
}

fn demographics_for(index: usize) -> Demographics {
    const AGE_BANDS: [&str; 5] = ["18-24", "25-34", "35-44", "45-54", "55-64"];
    const ETHNICITIES: [&str; 5] = ["african", "caucasian", "east_asian", "latin", "south_asian"];
    const GENDERS: [&str; 2] = ["female", "male"];
    Demographics {
        age_band: Some(AGE_BANDS[index % AGE_BANDS.len()].into()),
        ethnicity: Some(ETHNICITIES[index % ETHNICITIES.len()].into()),
        gender: Some(GENDERS[index % GENDERS.len()].into()),
        glasses: Some(index.is_multiple_of(3)),
    }
}

/// Generate a labeled ad corpus with planted combination activity.
///
/// Positive ads co-fire a planted rule's AUs inside each labeled moment;
/// negative ads fire the same AUs in separate slots with durations drawn
/// from the same distribution, so per-channel activity matches across
/// classes and only the conjunction discriminates.
pub fn generate_ad_corpus(spec: &CorpusSpec) -> Result<GeneratedCorpus> {
    spec.validate()?;
    let mut ads = Vec::new();
    let mut session_counter = 0usize;
    for ad_idx in 0..(spec.n_pos + spec.n_neg) {
        let positive = ad_idx < spec.n_pos;
        let ad_id = format!("ad_{ad_idx:03}");
        let moments: Vec<(u64, u64)> = (0..spec.moments_per_ad)
            .map(|j| {
                let start = spec.slot_start(j);
                (start, start + spec.moment_ms)
            })
            .collect();

        let mut sessions = Vec::new();
        for s_idx in 0..spec.sessions_per_ad {
            let mut events = Vec::new();
            for (j, &(m_start, _)) in moments.iter().enumerate() {
                let mut rng = keyed_rng(spec.seed, &[1, ad_idx as u64, s_idx as u64, j as u64]);
                let rule = &spec.planted.rules[rng.random_range(0..spec.planted.rules.len())];
                let aus: Vec<Au> = rule.conjuncts.iter().map(|c| c.au).collect();
                let duration =
                    (spec.moment_ms as f64 * rng.random_range(0.5..0.9)) as u64;
                let jitter =
                    rng.random_range(0.0..(spec.moment_ms - duration).max(1) as f64) as u64;
                if positive {
                    events.push(EventSpec {
                        kind: EventKind::ComboFire,
                        aus,
                        amplitude: spec.amplitude,
                        amplitude_from: None,
                        onset_ms: m_start + jitter,
                        duration_ms: duration,
                    });
                } else {
                    // One slot per conjunct AU, same duration distribution.
                    for (a_idx, &au) in aus.iter().enumerate() {
                        let slot = spec.slot_start(j * spec.max_rule_size() + a_idx);
                        let duration =
                            (spec.moment_ms as f64 * rng.random_range(0.5..0.9)) as u64;
                        let jitter = rng
                            .random_range(0.0..(spec.moment_ms - duration).max(1) as f64)
                            as u64;
                        events.push(EventSpec {
                            kind: EventKind::AuPulse,
                            aus: vec![au],
                            amplitude: spec.amplitude,
                            amplitude_from: None,
                            onset_ms: slot + jitter,
                            duration_ms: duration,
                        });
                    }
                }
            }
            let scenario = ScenarioSpec {
                seed: spec
                    .seed
                    .wrapping_mul(1_000_003)
                    .wrapping_add((ad_idx * 10_007 + s_idx) as u64),
                video_id: ad_id.clone(),
                face_id: format!("p_{session_counter:04}"),
                duration_ms: spec.session_duration_ms,
                fps: spec.fps,
                events,
                noise_sigma: spec.noise_sigma,
                landmarks: true,
                crop: None,
            };
            let (frames, _) = generate_stream(&scenario)?;
            sessions.push(GeneratedSession {
                session_id: scenario.face_id.clone(),
                demographics: demographics_for(session_counter),
                frames,
            });
            session_counter += 1;
        }
        ads.push(GeneratedAd {
            ad_id,
            label: positive,
            moments: if positive { moments } else { Vec::new() },
            sessions,
        });
    }
    Ok(GeneratedCorpus {
        ads,
        planted: spec.planted.clone(),
    })
}

/// The shipped noisy-AU benchmark: biased offsets plus frame noise over
/// planted pulses, with per-frame activity labels. Used to measure how much
/// the post-processing chain improves ranking quality.
pub fn noisy_au_benchmark(seed: u64) -> Vec<LabeledSeries> {
    const TARGETS: [Au; 4] = [Au::Au1, Au::Au4, Au::Au12, Au::Au15];
    let mut sessions = Vec::new();
    for s_idx in 0..6u64 {
        let mut events = Vec::new();
        let mut rng = keyed_rng(seed, &[2, s_idx]);
        for (a_idx, &au) in TARGETS.iter().enumerate() {
            // Session- and channel-specific resting offset (glasses-style).
            let bias = rng.random_range(0.0..50.0);
            events.push(EventSpec {
                kind: EventKind::BiasOffset,
                aus: vec![au],
                amplitude: bias,
                amplitude_from: None,
                onset_ms: 0,
                duration_ms: 60_000,
            });
            // Eight pulses in per-channel lanes so labels stay per-channel.
            for p in 0..8u64 {
                let lane = 1_000 + p * 7_000 + (a_idx as u64) * 1_600;
                events.push(EventSpec {
                    kind: EventKind::AuPulse,
                    aus: vec![au],
                    amplitude: 40.0,
                    amplitude_from: None,
                    onset_ms: lane,
                    duration_ms: 1_500,
                });
            }
        }
        let scenario = ScenarioSpec {
            seed: seed.wrapping_mul(31).wrapping_add(s_idx),
            video_id: format!("bench_{seed}"),
            face_id: format!("s{s_idx}"),
            duration_ms: 60_000,
            fps: 15.0,
            events: events.clone(),
            noise_sigma: 10.0,
            landmarks: false,
            crop: None,
        };
        let (frames, _) = generate_stream(&scenario).expect("benchmark scenario is valid");
        let timestamps: Vec<u64> = frames.iter().map(|f| f.timestamp_ms).collect();
        let mut labels = std::collections::BTreeMap::new();
        for &au in &TARGETS {
            let marks: Vec<bool> = timestamps
                .iter()
                .map(|&t| {
                    events.iter().any(|e| {
                        e.kind == EventKind::AuPulse
                            && e.aus == [au]
                            && t >= e.onset_ms
                            && t < e.end_ms()
                    })
                })
                .collect();
            labels.insert(au, marks);
        }
        sessions.push(LabeledSeries {
            timestamps_ms: timestamps,
            frames: frames.iter().map(|f| f.raw_au.unwrap()).collect(),
            labels,
        });
    }
    sessions
}
