//! Round-trip and ordering properties of the stream formats.

use affectstream::au::{AuScores, AU_COUNT};
use affectstream::model::{BoundingBox, FrameObservation, LandmarkSet, LumaGrid};
use affectstream::stream::{parse_all, write_csv, write_jsonl, StreamFormat};
use proptest::prelude::*;

fn arb_au_scores() -> impl Strategy<Value = AuScores> {
    prop::collection::vec(0.0..=100.0f64, AU_COUNT).prop_map(|v| {
        let mut arr = [0.0; AU_COUNT];
        arr.copy_from_slice(&v);
        AuScores::from_array(arr).unwrap()
    })
}

fn arb_landmarks() -> impl Strategy<Value = LandmarkSet> {
    prop::collection::vec(-500.0..2000.0f64, 8).prop_map(|v| LandmarkSet {
        outer_left_eye: (v[0], v[1]),
        outer_right_eye: (v[2], v[3]),
        nose_tip: (v[4], v[5]),
        chin: (v[6], v[7]),
    })
}

fn arb_luma() -> impl Strategy<Value = LumaGrid> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h)
            .prop_map(move |data| LumaGrid::new(w, h, data).unwrap())
    })
}

fn arb_observation(with_luma: bool) -> impl Strategy<Value = FrameObservation> {
    (
        "[a-z0-9_]{1,8}",
        "[a-z0-9_]{1,8}",
        0u64..1_000_000_000_000,
        (-2000.0..2000.0f64, -2000.0..2000.0f64, 0.5..800.0f64, 0.5..800.0f64),
        prop::option::of(arb_landmarks()),
        prop::option::of(arb_au_scores()),
        if with_luma {
            prop::option::of(arb_luma()).boxed()
        } else {
            Just(None).boxed()
        },
    )
        .prop_map(|(video_id, face_id, ts, (x, y, w, h), landmarks, raw_au, luma)| {
            FrameObservation {
                video_id,
                face_id,
                timestamp_ms: ts,
                box_: BoundingBox { x, y, w, h },
                landmarks,
                raw_au,
                luma,
            }
        })
}

proptest! {
    /// serialize -> parse is the identity on valid CSV streams, preserving
    /// order (field equality; CSV floats use shortest round-trip form).
    #[test]
    fn csv_round_trip(frames in prop::collection::vec(arb_observation(false), 0..40)) {
        let mut buf = Vec::new();
        write_csv(frames.iter(), &mut buf).unwrap();
        let parsed = parse_all(&buf[..], StreamFormat::Csv).unwrap();
        prop_assert_eq!(parsed, frames);
    }

    /// Same for JSON Lines, including luma crops.
    #[test]
    fn jsonl_round_trip(frames in prop::collection::vec(arb_observation(true), 0..40)) {
        let mut buf = Vec::new();
        write_jsonl(frames.iter(), &mut buf).unwrap();
        let parsed = parse_all(&buf[..], StreamFormat::JsonLines).unwrap();
        prop_assert_eq!(parsed, frames);
    }

    /// Serialization is deterministic: same frames, same bytes.
    #[test]
    fn serialization_is_deterministic(frames in prop::collection::vec(arb_observation(true), 0..20)) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_jsonl(frames.iter(), &mut a).unwrap();
        write_jsonl(frames.iter(), &mut b).unwrap();
        prop_assert_eq!(a, b);
    }
}
