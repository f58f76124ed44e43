//! Canonical data types shared across the pipeline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::au::AuScores;
use crate::emotion::EmotionScores;
use crate::error::{Error, Result};
use crate::quality::QualityReport;

/// Axis-aligned face box in image pixels, top-left origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(w > 0.0 && h > 0.0) {
            return Err(Error::InvalidStream(format!(
                "bounding box must have positive size, got {w}x{h}"
            )));
        }
        Ok(BoundingBox { x, y, w, h })
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

/// The four tracked facial landmarks, in image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    pub outer_left_eye: (f64, f64),
    pub outer_right_eye: (f64, f64),
    pub nose_tip: (f64, f64),
    pub chin: (f64, f64),
}

impl LandmarkSet {
    /// Euclidean distance between the outer eye corners.
    pub fn eye_distance(&self) -> f64 {
        let dx = self.outer_right_eye.0 - self.outer_left_eye.0;
        let dy = self.outer_right_eye.1 - self.outer_left_eye.1;
        (dx * dx + dy * dy).sqrt()
    }

    /// The four points in fixed order: left eye, right eye, nose, chin.
    pub fn points(&self) -> [(f64, f64); 4] {
        [
            self.outer_left_eye,
            self.outer_right_eye,
            self.nose_tip,
            self.chin,
        ]
    }
}

/// Head orientation in degrees. Yaw is rotation about the vertical axis
/// (left/right turn), pitch about the horizontal axis (nod), roll about the
/// camera axis (sideways tilt).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadPose {
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
}

/// Row-major grayscale face crop, intensities 0–255.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LumaGrid {
    pub w: usize,
    pub h: usize,
    pub data: Vec<u8>,
}

impl LumaGrid {
    pub fn new(w: usize, h: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != w * h {
            return Err(Error::InvalidStream(format!(
                "luma grid {w}x{h} expects {} samples, got {}",
                w * h,
                data.len()
            )));
        }
        Ok(LumaGrid { w, h, data })
    }

    /// Fill from a generator over (row, col).
    pub fn from_fn(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(w * h);
        for row in 0..h {
            for col in 0..w {
                data.push(f(row, col));
            }
        }
        LumaGrid { w, h, data }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.w + col]
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// One face in one frame: the unit of ingestion.
///
/// `landmarks`, `raw_au` and `luma` are optional; metrics that depend on a
/// missing field are skipped for that frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation {
    pub video_id: String,
    pub face_id: String,
    pub timestamp_ms: u64,
    pub box_: BoundingBox,
    pub landmarks: Option<LandmarkSet>,
    pub raw_au: Option<AuScores>,
    pub luma: Option<LumaGrid>,
}

/// Graded score plus the binary activation the rule semantics define.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeScore {
    pub score: f64,
    pub active: bool,
}

/// Per-frame expressive metrics. `blink_rate` is blinks per minute over the
/// trailing window; `attention` is unavailable until a pose has been seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpressiveScores {
    pub blink_rate: f64,
    pub attention: Option<f64>,
    pub expressiveness: f64,
    pub valence: f64,
}

/// Fully derived per-frame output.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricFrame {
    pub timestamp_ms: u64,
    pub processed_au: AuScores,
    pub emotions: EmotionScores,
    pub composites: BTreeMap<String, CompositeScore>,
    pub expressive: ExpressiveScores,
    pub quality: Option<QualityReport>,
    pub pose: Option<HeadPose>,
}
