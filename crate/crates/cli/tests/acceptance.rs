//! Acceptance suite: each test checks one release criterion end to end and
//! prints a PASS line with the measured numbers. Run with
//! `cargo test -p affectstream-cli --test acceptance -- --nocapture`.

use std::time::Instant;

use affectstream::au::{Au, AuScores};
use affectstream::composite::{default_candidates, mine_significant_combinations, MiningOptions};
use affectstream::emotion::{emotion_scores, EmotionWeightTable, ALL_EMOTIONS};
use affectstream::evaluation::{roc_ad, roc_auc, roc_sent, LabeledCorpus, SessionAggregator};
use affectstream::model::{LandmarkSet, LumaGrid};
use affectstream::postprocess::{postprocess_series, soft_threshold, PostprocessConfig};
use affectstream::quality::{
    high_freq_power, inter_ocular_distance, luminance_diff_lr, variance_luminance,
};
use affectstream::synth::{
    generate_ad_corpus, generate_stream, keyed_rng, noisy_au_benchmark, CorpusSpec, EventKind,
    EventSpec, GeneratedCorpus, ScenarioSpec,
};
use affectstream::tracking::{
    estimate_head_pose, project_template, schedule_detection, PoseTemplate,
};
use affectstream::{Engine, EngineConfig, HeadPose};
use affectstream_cli::bench::{run_bench, BenchArgs};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

fn pass(criterion: &str, detail: String) {
    println!("ACCEPTANCE {criterion}: PASS ({detail})");
}

/// Pairwise-comparison AUC with ties counted one half: the oracle.
fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

#[test]
fn criterion_01_roc_auc_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xC1);
    let mut max_delta = 0.0f64;
    for _ in 0..500 {
        let n = rng.random_range(2..=200);
        // Mix continuous and heavily tied score patterns.
        let quantize = rng.random_bool(0.5);
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                let v = rng.random::<f64>() * 100.0;
                if quantize {
                    (v / 10.0).round()
                } else {
                    v
                }
            })
            .collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        labels[0] = true;
        labels[n - 1] = false;
        let fast = roc_auc(&scores, &labels).unwrap();
        let slow = pairwise_auc(&scores, &labels);
        max_delta = max_delta.max((fast - slow).abs());
    }
    let elapsed = started.elapsed();
    assert!(max_delta <= 1e-9, "max |rank - pairwise| = {max_delta}");
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    pass(
        "c01 roc-auc-oracle-equivalence",
        format!("500 instances, max |delta| = {max_delta:.2e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_sigmoid_rank_invariance() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xC2);
    let mut max_delta = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(10..=200);
        let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 100.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        labels[0] = true;
        labels[n - 1] = false;
        let t = rng.random_range(20.0..80.0);
        let mapped: Vec<f64> = scores.iter().map(|&v| soft_threshold(v, 0.2, t)).collect();
        let before = roc_auc(&scores, &labels).unwrap();
        let after = roc_auc(&mapped, &labels).unwrap();
        max_delta = max_delta.max((before - after).abs());
    }
    assert!(max_delta <= 1e-12, "max AUC shift {max_delta}");
    pass(
        "c02 sigmoid-rank-invariance",
        format!("100 series, max |delta| = {max_delta:.2e}"),
    );
}

#[test]
fn criterion_03_postprocessing_benefit() {
    let started = Instant::now();
    let config = PostprocessConfig::default();
    let mut deltas = Vec::new();
    for seed in 0..10u64 {
        let sessions = noisy_au_benchmark(seed);
        let aus: Vec<Au> = sessions[0].labels.keys().copied().collect();
        let mut raw_sum = 0.0;
        let mut post_sum = 0.0;
        for &au in &aus {
            let mut raw_scores = Vec::new();
            let mut post_scores = Vec::new();
            let mut labels = Vec::new();
            for session in &sessions {
                let channel: Vec<f64> = session.frames.iter().map(|f| f.get(au)).collect();
                let processed =
                    postprocess_series(&channel, &session.timestamps_ms, &config, au);
                raw_scores.extend(channel);
                post_scores.extend(processed);
                labels.extend(session.labels[&au].iter().copied());
            }
            raw_sum += roc_auc(&raw_scores, &labels).unwrap();
            post_sum += roc_auc(&post_scores, &labels).unwrap();
        }
        deltas.push((post_sum - raw_sum) / aus.len() as f64);
    }
    let mean_delta = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let elapsed = started.elapsed();
    assert!(
        mean_delta >= 0.01,
        "mean AUC(post) - AUC(raw) = {mean_delta:.4}, per-seed {deltas:?}"
    );
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    pass(
        "c03 postprocessing-benefit",
        format!("mean delta = +{mean_delta:.4} over 10 seeds, {elapsed:.2?}"),
    );
}

/// Analyze every generated session with an engine configured to score the
/// planted rule set.
fn analyze_corpus(generated: &GeneratedCorpus) -> LabeledCorpus {
    let config = EngineConfig {
        composites: vec![generated.planted.clone()],
        ..EngineConfig::default()
    };
    let engine = Engine::new(config).unwrap();
    let mut corpus = LabeledCorpus::default();
    for ad in &generated.ads {
        let sessions = ad
            .sessions
            .iter()
            .map(|s| affectstream::evaluation::SessionRecord {
                session_id: s.session_id.clone(),
                demographics: s.demographics.clone(),
                frames: engine.analyze_track(&s.frames).unwrap().frames,
            })
            .collect();
        corpus.ads.push(affectstream::evaluation::AdRecord {
            ad_id: ad.ad_id.clone(),
            label: ad.label,
            moments: ad.moments.clone(),
            sessions,
        });
    }
    corpus
}

#[test]
fn criterion_04_composite_kpi_recovery() {
    let started = Instant::now();
    let spec = CorpusSpec {
        seed: 42,
        ..CorpusSpec::default()
    };
    let generated = generate_ad_corpus(&spec).unwrap();
    let state = generated.planted.name.clone();
    let corpus = analyze_corpus(&generated);

    let ad_kpi = roc_ad(&corpus, &state, SessionAggregator::Max).unwrap();
    assert!(ad_kpi >= 95.0, "roc-ad = {ad_kpi}");

    // Permuted-label null over 20 seeds.
    let mut null_sum = 0.0;
    for null_seed in 0..20u64 {
        let mut rng = keyed_rng(0xC4, &[null_seed]);
        let mut permuted = corpus.clone();
        let mut labels: Vec<bool> = permuted.ads.iter().map(|a| a.label).collect();
        labels.shuffle(&mut rng);
        for (ad, label) in permuted.ads.iter_mut().zip(labels) {
            ad.label = label;
        }
        null_sum += roc_ad(&permuted, &state, SessionAggregator::Max).unwrap();
    }
    let null_mean = null_sum / 20.0;
    assert!(
        (40.0..=60.0).contains(&null_mean),
        "null mean roc-ad = {null_mean}"
    );

    let sent_kpi = roc_sent(&corpus, &state, 1_000).unwrap();
    assert!(sent_kpi >= 90.0, "roc-sent = {sent_kpi}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    pass(
        "c04 composite-kpi-recovery",
        format!(
            "roc-ad = {ad_kpi:.1}, null mean = {null_mean:.1}, roc-sent = {sent_kpi:.1}, {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_05_rule_mining_recovery() {
    let started = Instant::now();
    let mut hits = 0;
    for seed in 0..20u64 {
        let spec = CorpusSpec {
            seed: 1_000 + seed,
            n_pos: 6,
            n_neg: 6,
            sessions_per_ad: 4,
            ..CorpusSpec::default()
        };
        let generated = generate_ad_corpus(&spec).unwrap();
        let corpus = analyze_corpus(&generated);
        let ranked = mine_significant_combinations(
            &corpus,
            &default_candidates(),
            &MiningOptions::default(),
        )
        .unwrap();
        if ranked[0].name == "AU1+AU12" {
            hits += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(hits >= 18, "planted pair ranked first in {hits}/20 seeds");
    pass(
        "c05 rule-mining-recovery",
        format!("planted pair first in {hits}/20 seeds, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_06_blink_exactness() {
    let engine = Engine::new(EngineConfig::default()).unwrap();
    for planted in 0..=20usize {
        let events: Vec<EventSpec> = (0..planted)
            .map(|i| EventSpec {
                kind: EventKind::Blink,
                aus: vec![],
                amplitude: 85.0,
                amplitude_from: None,
                onset_ms: 1_000 + i as u64 * 1_400,
                duration_ms: 150 + (i as u64 % 4) * 50, // 150-300 ms, inside the gate
            })
            .collect();
        let spec = ScenarioSpec {
            seed: 600 + planted as u64,
            duration_ms: 32_000,
            fps: 30.0,
            events,
            noise_sigma: 1.0,
            ..ScenarioSpec::default()
        };
        let (frames, truth) = generate_stream(&spec).unwrap();
        let out = engine.analyze_track(&frames).unwrap();
        assert_eq!(
            out.blinks.len(),
            truth.blink_count(),
            "planted {planted} blinks"
        );
    }

    // Out-of-gate pulses must yield zero detections: too short and too long.
    for duration in [33u64, 900, 2_000] {
        let spec = ScenarioSpec {
            seed: 7,
            duration_ms: 10_000,
            fps: 30.0,
            events: vec![EventSpec {
                kind: EventKind::Blink,
                aus: vec![],
                amplitude: 85.0,
                amplitude_from: None,
                onset_ms: 3_000,
                duration_ms: duration,
            }],
            noise_sigma: 1.0,
            ..ScenarioSpec::default()
        };
        let (frames, _) = generate_stream(&spec).unwrap();
        let out = engine.analyze_track(&frames).unwrap();
        assert_eq!(out.blinks.len(), 0, "pulse of {duration} ms is not a blink");
    }
    pass(
        "c06 blink-exactness",
        "0-20 planted blinks detected exactly; 33/900/2000 ms pulses rejected".into(),
    );
}

#[test]
fn criterion_07_pose_round_trip() {
    let template = PoseTemplate::default();
    let mut rng = ChaCha12Rng::seed_from_u64(0xC7);
    let mut max_err = 0.0f64;
    for _ in 0..1_000 {
        let truth = HeadPose {
            pitch: rng.random_range(-40.0..40.0),
            yaw: rng.random_range(-40.0..40.0),
            roll: rng.random_range(-40.0..40.0),
        };
        let scale = rng.random_range(30.0..300.0);
        let center = (rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0));
        let lm = project_template(&template, &truth, scale, center);
        let est = estimate_head_pose(&lm, &template).unwrap();
        max_err = max_err
            .max((est.pitch - truth.pitch).abs())
            .max((est.yaw - truth.yaw).abs())
            .max((est.roll - truth.roll).abs());
    }
    assert!(max_err < 1.0, "max angle error {max_err} deg");

    // Scale/translation invariance within 1e-6 degrees.
    let mut max_invariance_err = 0.0f64;
    for _ in 0..100 {
        let truth = HeadPose {
            pitch: rng.random_range(-40.0..40.0),
            yaw: rng.random_range(-40.0..40.0),
            roll: rng.random_range(-40.0..40.0),
        };
        let a = project_template(&template, &truth, 100.0, (0.0, 0.0));
        let s = rng.random_range(0.1..30.0);
        let (dx, dy) = (rng.random_range(-3e3..3e3), rng.random_range(-3e3..3e3));
        let move_ = |p: (f64, f64)| (p.0 * s + dx, p.1 * s + dy);
        let b = LandmarkSet {
            outer_left_eye: move_(a.outer_left_eye),
            outer_right_eye: move_(a.outer_right_eye),
            nose_tip: move_(a.nose_tip),
            chin: move_(a.chin),
        };
        let pa = estimate_head_pose(&a, &template).unwrap();
        let pb = estimate_head_pose(&b, &template).unwrap();
        max_invariance_err = max_invariance_err
            .max((pa.pitch - pb.pitch).abs())
            .max((pa.yaw - pb.yaw).abs())
            .max((pa.roll - pb.roll).abs());
    }
    assert!(max_invariance_err < 1e-6, "invariance err {max_invariance_err} deg");
    pass(
        "c07 pose-round-trip",
        format!(
            "1000 rotations, max error {max_err:.2e} deg; invariance {max_invariance_err:.2e} deg"
        ),
    );
}

#[test]
fn criterion_08_detection_schedule() {
    // 30 fps, 60 s ladder.
    let timestamps: Vec<u64> = (0..1_800u64)
        .map(|i| (i as f64 * 1000.0 / 30.0).floor() as u64)
        .collect();
    let schedule = schedule_detection(&timestamps, 500);

    // Independent brute-force elapsed-time scan.
    let mut expected = Vec::new();
    let mut last: Option<u64> = None;
    for &t in &timestamps {
        if last.is_none_or(|l| t - l >= 500) {
            expected.push(t);
            last = Some(t);
        }
    }
    assert_eq!(schedule, expected);
    assert_eq!(&schedule[..3], &[0, 500, 1000]);
    assert_eq!(schedule.len(), 120);
    pass(
        "c08 detection-schedule",
        format!("{} detection frames, first three {:?}", schedule.len(), &schedule[..3]),
    );
}

#[test]
fn criterion_09_emotion_table_checks() {
    let table = EmotionWeightTable::default();

    // All-zero AUs: neutral active everywhere along a stream.
    let engine = Engine::new(EngineConfig::default()).unwrap();
    let (frames, _) = generate_stream(&ScenarioSpec {
        duration_ms: 3_000,
        fps: 20.0,
        ..ScenarioSpec::default()
    })
    .unwrap();
    let out = engine.analyze_track(&frames).unwrap();
    for frame in &out.frames {
        assert!(frame.emotions.max_basic() < engine.config().emotions.theta_e);
        assert!(frame.emotions.neutral >= 99.0);
    }

    // Every prototype pattern scores exactly 100.
    for emotion in ALL_EMOTIONS {
        let mut au = AuScores::zeros();
        for (&channel, &w) in table.row(emotion) {
            if w > 0.0 {
                au.set(channel, 100.0);
            }
        }
        assert_eq!(emotion_scores(&au, &table, 20.0).get(emotion), 100.0);
    }

    // Anger suppression by the opposite-expression weights.
    let mut anger_proto = AuScores::zeros();
    anger_proto.set(Au::Au4, 100.0);
    anger_proto.set(Au::Au15, 100.0);
    anger_proto.set(Au::Au24, 100.0);
    let base = emotion_scores(&anger_proto, &table, 20.0).anger;
    let mut suppressed = anger_proto;
    suppressed.set(Au::Au1, 100.0);
    let lowered = emotion_scores(&suppressed, &table, 20.0).anger;
    assert!(lowered < base, "{lowered} !< {base}");
    pass(
        "c09 emotion-table-checks",
        format!("prototypes at 100, anger {base:.0} -> {lowered:.1} under AU1"),
    );
}

/// Direct-definition orthonormal DCT-II (quadruple sum over precomputed
/// cosines), independent of the separable implementation.
fn hf_power_direct_oracle(crop: &LumaGrid, n: usize, cutoff: f64) -> f64 {
    let table: Vec<f64> = (0..n * n)
        .map(|i| {
            let (f, x) = (i / n, i % n);
            (std::f64::consts::PI * (2 * x + 1) as f64 * f as f64 / (2.0 * n as f64)).cos()
        })
        .collect();
    let scale = |k: usize| {
        if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        }
    };
    let mut high = 0.0;
    let mut total = 0.0;
    let threshold = cutoff * 2.0 * (n as f64 - 1.0);
    for u in 0..n {
        for v in 0..n {
            if u == 0 && v == 0 {
                continue;
            }
            let mut acc = 0.0;
            for x in 0..n {
                for y in 0..n {
                    acc += crop.get(x, y) as f64 * table[u * n + x] * table[v * n + y];
                }
            }
            let c = scale(u) * scale(v) * acc;
            total += c * c;
            if (u + v) as f64 >= threshold {
                high += c * c;
            }
        }
    }
    if total <= 1e-12 {
        0.0
    } else {
        high / total
    }
}

#[test]
fn criterion_10_quality_identities() {
    let constant = LumaGrid::from_fn(64, 64, |_, _| 190);
    assert_eq!(high_freq_power(&constant, 64, 0.5), 0.0);
    assert_eq!(variance_luminance(&constant).unwrap(), 0.0);

    let symmetric = LumaGrid::from_fn(64, 64, |_, c| {
        let d = if c < 32 { c } else { 63 - c };
        (d * 4) as u8
    });
    assert_eq!(luminance_diff_lr(&symmetric).unwrap(), 0.0);

    let lm = LandmarkSet {
        outer_left_eye: (100.0, 100.0),
        outer_right_eye: (160.0, 180.0),
        nose_tip: (130.0, 150.0),
        chin: (130.0, 220.0),
    };
    assert_eq!(inter_ocular_distance(&lm, 640.0).unwrap(), 0.15625);

    let checkerboard = LumaGrid::from_fn(64, 64, |r, c| if (r + c) % 2 == 0 { 0 } else { 255 });
    let fast = high_freq_power(&checkerboard, 64, 0.5);
    let oracle = hf_power_direct_oracle(&checkerboard, 64, 0.5);
    assert!(
        (fast - oracle).abs() <= 0.02,
        "hf {fast} vs direct oracle {oracle}"
    );
    assert!(fast > 0.9);
    pass(
        "c10 quality-identities",
        format!("IOD = 0.15625, checkerboard hf = {fast:.4} (oracle {oracle:.4})"),
    );
}

#[test]
fn criterion_11_throughput_floor() {
    let single = run_bench(&BenchArgs {
        faces: 1,
        frames: 6_000,
        ..BenchArgs::default()
    })
    .unwrap();
    assert!(
        single.frames_per_sec >= 5_000.0,
        "single-face throughput {:.0} frames/s",
        single.frames_per_sec
    );

    let five = run_bench(&BenchArgs {
        faces: 5,
        frames: 3_000,
        ..BenchArgs::default()
    })
    .unwrap();
    let cost_1 = single.elapsed_s / single.face_frames as f64;
    let cost_5 = five.elapsed_s / five.face_frames as f64;
    assert!(
        cost_5 <= cost_1 * 1.8,
        "per-face-frame cost scaled superlinearly: {cost_5:.2e}s vs {cost_1:.2e}s"
    );
    pass(
        "c11 throughput-floor",
        format!(
            "1 face: {:.0} frames/s; 5 faces: {:.0} frames/s (per-frame cost x{:.2})",
            single.frames_per_sec,
            five.frames_per_sec,
            cost_5 / cost_1
        ),
    );
}

#[test]
fn criterion_12_byte_determinism_across_workers() {
    use std::process::Command;

    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.json");
    std::fs::write(
        &scenario,
        serde_json::to_string(&ScenarioSpec {
            seed: 99,
            duration_ms: 12_000,
            fps: 30.0,
            noise_sigma: 6.0,
            events: vec![
                EventSpec {
                    kind: EventKind::AuPulse,
                    aus: vec![Au::Au6, Au::Au12],
                    amplitude: 70.0,
                    amplitude_from: None,
                    onset_ms: 2_000,
                    duration_ms: 1_500,
                },
                EventSpec {
                    kind: EventKind::Blink,
                    aus: vec![],
                    amplitude: 85.0,
                    amplitude_from: None,
                    onset_ms: 5_000,
                    duration_ms: 200,
                },
            ],
            ..ScenarioSpec::default()
        })
        .unwrap(),
    )
    .unwrap();

    let bin = env!("CARGO_BIN_EXE_affectstream");
    // Three-face fixture: simulate three streams and concatenate them.
    let mut combined = Vec::new();
    for face in 0..3 {
        let out = dir.path().join(format!("sim{face}"));
        let status = Command::new(bin)
            .args(["simulate", "--scenario"])
            .arg(&scenario)
            .args(["--seed", &format!("{}", 100 + face)])
            .arg("--out")
            .arg(&out)
            .args(["--format", "jsonl"])
            .status()
            .unwrap();
        assert!(status.success());
        let mut text = std::fs::read_to_string(out.join("stream.jsonl")).unwrap();
        text = text.replace("face_0", &format!("face_{face}"));
        combined.push(text);
    }
    let input = dir.path().join("fixture.jsonl");
    std::fs::write(&input, combined.join("")).unwrap();

    let mut outputs = Vec::new();
    for (run, workers) in [(0, "1"), (1, "8"), (2, "1")] {
        let out = dir.path().join(format!("metrics_{run}.csv"));
        let status = Command::new(bin)
            .arg("analyze")
            .arg("--input")
            .arg(&input)
            .arg("--output")
            .arg(&out)
            .args(["--workers", workers])
            .status()
            .unwrap();
        assert!(status.success());
        let metric_bytes = std::fs::read(&out).unwrap();
        let blink_bytes =
            std::fs::read(dir.path().join(format!("metrics_{run}.csv.blinks.csv"))).unwrap();
        outputs.push((metric_bytes, blink_bytes));
    }
    assert_eq!(outputs[0], outputs[1], "workers 1 vs 8 differ");
    assert_eq!(outputs[0], outputs[2], "repeat runs differ");
    pass(
        "c12 byte-determinism",
        format!(
            "3-track fixture, {} metric bytes identical across runs and workers 1 vs 8",
            outputs[0].0.len()
        ),
    );
}
