//! `bench`: deterministic throughput measurement of the full analytics
//! pipeline (replay detector, tracking, all metrics).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use affectstream::au::Au;
use affectstream::engine::{write_metric_csv, TrackOutput, TrackTimings};
use affectstream::synth::{generate_stream, CropPattern, CropSpec, EventKind, EventSpec, ScenarioSpec};
use affectstream::tracking::{iou, ReplayDetector, TrackingOrchestrator};
use affectstream::{Engine, FrameObservation};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{analytic, usage, CliResult};
use crate::util::load_config;

pub struct BenchArgs {
    pub config: Option<PathBuf>,
    pub faces: usize,
    pub frames: usize,
    pub fps: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for BenchArgs {
    fn default() -> Self {
        BenchArgs {
            config: None,
            faces: 1,
            frames: 10_000,
            fps: 30.0,
            seed: 0,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRow {
    pub stage: String,
    pub total_ms: f64,
    pub share: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub faces: usize,
    pub video_frames: usize,
    pub face_frames: usize,
    pub elapsed_s: f64,
    /// Face-frames processed per second, end to end.
    pub frames_per_sec: f64,
    pub per_frame_us_p50: f64,
    pub per_frame_us_p90: f64,
    pub per_frame_us_p99: f64,
    pub stages: Vec<StageRow>,
    /// SHA-256 of the metric CSV bytes; identical across runs.
    pub output_digest: String,
}

impl BenchReport {
    pub fn write_text<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "workload: {} face(s), {} video frames ({} face-frames)",
            self.faces, self.video_frames, self.face_frames
        )?;
        writeln!(
            w,
            "elapsed: {:.3} s -> {:.0} frames/s",
            self.elapsed_s, self.frames_per_sec
        )?;
        writeln!(
            w,
            "per-frame latency: p50 {:.1} us, p90 {:.1} us, p99 {:.1} us",
            self.per_frame_us_p50, self.per_frame_us_p90, self.per_frame_us_p99
        )?;
        writeln!(w, "{:<14} {:>10} {:>7}", "stage", "total ms", "share")?;
        for row in &self.stages {
            writeln!(
                w,
                "{:<14} {:>10.2} {:>6.1}%",
                row.stage,
                row.total_ms,
                row.share * 100.0
            )?;
        }
        writeln!(w, "output_digest: {}", self.output_digest)
    }
}

/// A varied but deterministic workload: pulses, blinks, yaw turns, a bias
/// offset, landmarks every frame, a crop at detector cadence.
fn workload_scenario(seed: u64, face: usize, frames: usize, fps: f64) -> ScenarioSpec {
    let duration_ms = (frames as f64 * 1000.0 / fps).ceil() as u64;
    let mut events = vec![EventSpec {
        kind: EventKind::BiasOffset,
        aus: vec![Au::Au17],
        amplitude: 15.0 + face as f64,
        amplitude_from: None,
        onset_ms: 0,
        duration_ms,
    }];
    let pulse_aus = [Au::Au6, Au::Au12, Au::Au4, Au::Au1, Au::Au25];
    let mut t = 700 + (face as u64 * 137) % 500;
    let mut k = 0usize;
    while t + 2_600 < duration_ms {
        events.push(EventSpec {
            kind: EventKind::AuPulse,
            aus: vec![pulse_aus[k % pulse_aus.len()], pulse_aus[(k + 1) % pulse_aus.len()]],
            amplitude: 65.0,
            amplitude_from: None,
            onset_ms: t,
            duration_ms: 900,
        });
        events.push(EventSpec {
            kind: EventKind::Blink,
            aus: vec![],
            amplitude: 85.0,
            amplitude_from: None,
            onset_ms: t + 1_100,
            duration_ms: 180,
        });
        events.push(EventSpec {
            kind: EventKind::YawSweep,
            aus: vec![],
            amplitude: if k.is_multiple_of(2) { 35.0 } else { -20.0 },
            amplitude_from: Some(0.0),
            onset_ms: t + 1_400,
            duration_ms: 1_000,
        });
        t += 3_100;
        k += 1;
    }
    ScenarioSpec {
        seed: seed.wrapping_add(face as u64),
        video_id: "bench".into(),
        face_id: format!("src_{face}"),
        duration_ms,
        fps,
        events,
        noise_sigma: 4.0,
        landmarks: true,
        crop: Some(CropSpec {
            pattern: CropPattern::Checkerboard { period: 4 },
            size: 64,
            every_n_frames: 15,
        }),
    }
}

fn percentile(sorted: &[u64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let idx = ((sorted.len() as f64 - 1.0) * p).round() as usize;
    sorted[idx] as f64 / 1_000.0
}

/// Run the benchmark workload and return the report. Metric outputs are
/// deterministic; timings of course are not.
pub fn run_bench(args: &BenchArgs) -> CliResult<BenchReport> {
    if args.faces == 0 || args.frames == 0 || args.fps <= 0.0 || args.fps.is_nan() {
        return Err(usage("faces, frames, and fps must be positive"));
    }
    let config = load_config(args.config.as_deref())?;
    let tracker_config = config.tracking.clone();
    let engine = Engine::new(config).map_err(|e| usage(e.to_string()))?;

    // Build the workload up front; generation is not part of the timing.
    let mut per_face: Vec<Vec<FrameObservation>> = Vec::new();
    for face in 0..args.faces {
        let spec = workload_scenario(args.seed, face, args.frames, args.fps);
        let (frames, _) = generate_stream(&spec).map_err(|e| usage(e.to_string()))?;
        per_face.push(frames);
    }
    let video_frames = per_face.iter().map(Vec::len).min().unwrap_or(0);

    let started = Instant::now();

    // Tracking stage: detector cadence, association, landmark replay.
    let tracking_started = Instant::now();
    let mut orchestrator = TrackingOrchestrator::new(ReplayDetector, tracker_config);
    let mut tracks: BTreeMap<String, Vec<FrameObservation>> = BTreeMap::new();
    for i in 0..video_frames {
        let frame: Vec<FrameObservation> =
            per_face.iter().map(|stream| stream[i].clone()).collect();
        let t = frame[0].timestamp_ms;
        for tracked in orchestrator.process_frame(&frame, t) {
            // Join the tracker's identity back to the source observation to
            // pick up its AU scores and crop, as a real AU detector would
            // compute them from the tracked face region.
            let source = frame
                .iter()
                .max_by(|a, b| {
                    iou(&a.box_, &tracked.box_).total_cmp(&iou(&b.box_, &tracked.box_))
                })
                .expect("frame has at least one observation");
            tracks
                .entry(tracked.face_id.clone())
                .or_default()
                .push(FrameObservation {
                    video_id: source.video_id.clone(),
                    face_id: tracked.face_id.clone(),
                    timestamp_ms: tracked.timestamp_ms,
                    box_: tracked.box_,
                    landmarks: tracked.landmarks,
                    raw_au: source.raw_au,
                    luma: source.luma.clone(),
                });
        }
    }
    let tracking_ns = tracking_started.elapsed().as_nanos() as u64;

    // Metric stages, per track.
    let mut merged = TrackTimings::default();
    let mut outputs: Vec<TrackOutput> = Vec::new();
    for track in tracks.values() {
        let (out, timings) = engine
            .analyze_track_timed(track)
            .map_err(|e| analytic(e.to_string()))?;
        merged.merge(&timings);
        outputs.push(out);
    }
    let elapsed = started.elapsed();

    let face_frames = merged.frames;
    let mut csv_bytes = Vec::new();
    write_metric_csv(&outputs, &engine.config().composite_names(), &mut csv_bytes)
        .map_err(|e| analytic(e.to_string()))?;
    let digest: String = Sha256::digest(&csv_bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();

    let total_ns = elapsed.as_nanos() as u64;
    let stage_ns = [
        ("tracking", tracking_ns),
        ("postprocess", merged.postprocess_ns),
        ("pose", merged.pose_ns),
        ("emotions", merged.emotions_ns),
        ("composites", merged.composites_ns),
        ("expressive", merged.expressive_ns),
        ("quality", merged.quality_ns),
    ];
    let accounted: u64 = stage_ns.iter().map(|(_, ns)| ns).sum();
    let mut stages: Vec<StageRow> = stage_ns
        .iter()
        .map(|(name, ns)| StageRow {
            stage: name.to_string(),
            total_ms: *ns as f64 / 1e6,
            share: *ns as f64 / total_ns as f64,
        })
        .collect();
    stages.push(StageRow {
        stage: "other".into(),
        total_ms: total_ns.saturating_sub(accounted) as f64 / 1e6,
        share: total_ns.saturating_sub(accounted) as f64 / total_ns as f64,
    });

    let mut per_frame = merged.per_frame_ns.clone();
    per_frame.sort_unstable();

    Ok(BenchReport {
        faces: args.faces,
        video_frames,
        face_frames,
        elapsed_s: elapsed.as_secs_f64(),
        frames_per_sec: face_frames as f64 / elapsed.as_secs_f64(),
        per_frame_us_p50: percentile(&per_frame, 0.50),
        per_frame_us_p90: percentile(&per_frame, 0.90),
        per_frame_us_p99: percentile(&per_frame, 0.99),
        stages,
        output_digest: digest,
    })
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let report = run_bench(args)?;
    let mut stdout = std::io::stdout().lock();
    report
        .write_text(&mut stdout)
        .map_err(|e| analytic(e.to_string()))?;
    if let Some(path) = &args.out {
        std::fs::write(
            path,
            serde_json::to_string_pretty(&report).expect("report serializes"),
        )
        .map_err(|e| analytic(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
