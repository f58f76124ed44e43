//! Shared workload builders for the criterion benches.

use affectstream::au::Au;
use affectstream::synth::{
    generate_stream, CropPattern, CropSpec, EventKind, EventSpec, ScenarioSpec,
};
use affectstream::FrameObservation;

/// A medium-activity 30 fps stream: pulses, blinks, yaw turns, a bias
/// offset, landmarks each frame, crops at detector cadence.
pub fn workload(seed: u64, duration_ms: u64, with_crops: bool) -> Vec<FrameObservation> {
    let mut events = vec![EventSpec {
        kind: EventKind::BiasOffset,
        aus: vec![Au::Au17],
        amplitude: 12.0,
        amplitude_from: None,
        onset_ms: 0,
        duration_ms,
    }];
    let mut t = 600;
    let mut k = 0usize;
    while t + 2_600 < duration_ms {
        events.push(EventSpec {
            kind: EventKind::AuPulse,
            aus: vec![[Au::Au6, Au::Au12, Au::Au4][k % 3]],
            amplitude: 70.0,
            amplitude_from: None,
            onset_ms: t,
            duration_ms: 800,
        });
        events.push(EventSpec {
            kind: EventKind::Blink,
            aus: vec![],
            amplitude: 85.0,
            amplitude_from: None,
            onset_ms: t + 1_000,
            duration_ms: 180,
        });
        events.push(EventSpec {
            kind: EventKind::YawSweep,
            aus: vec![],
            amplitude: 30.0,
            amplitude_from: Some(-10.0),
            onset_ms: t + 1_300,
            duration_ms: 1_000,
        });
        t += 2_900;
        k += 1;
    }
    let spec = ScenarioSpec {
        seed,
        duration_ms,
        fps: 30.0,
        events,
        noise_sigma: 4.0,
        landmarks: true,
        crop: with_crops.then_some(CropSpec {
            pattern: CropPattern::Checkerboard { period: 4 },
            size: 64,
            every_n_frames: 15,
        }),
        ..ScenarioSpec::default()
    };
    generate_stream(&spec).expect("bench scenario is valid").0
}
