//! Face-tracking orchestration: detector-cadence scheduling, greedy IoU
//! track association, face alignment, and 3D head pose from the four
//! landmarks, all against pluggable detectors.
//!
//! The full face detector runs on a fixed time cadence; between passes each
//! live track keeps its last proposal box and only the landmark detector
//! runs. Pose uses a weak-perspective (orthographic plus scale) fit of a
//! canonical 3D template, which four points constrain in closed form.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundingBox, FrameObservation, HeadPose, LandmarkSet, LumaGrid};
use crate::raster;

/// Pick detection timestamps: the first frame always, then any frame at
/// least `interval_ms` after the previously selected one.
pub fn schedule_detection(timestamps_ms: &[u64], interval_ms: u64) -> Vec<u64> {
    let mut scheduler = DetectionScheduler::new(interval_ms);
    timestamps_ms
        .iter()
        .copied()
        .filter(|&t| scheduler.should_detect(t))
        .collect()
}

/// Streaming form of [`schedule_detection`].
#[derive(Debug, Clone)]
pub struct DetectionScheduler {
    interval_ms: u64,
    last: Option<u64>,
}

impl DetectionScheduler {
    pub fn new(interval_ms: u64) -> Self {
        DetectionScheduler {
            interval_ms,
            last: None,
        }
    }

    pub fn should_detect(&mut self, t_ms: u64) -> bool {
        let fire = match self.last {
            None => true,
            Some(last) => t_ms.saturating_sub(last) >= self.interval_ms,
        };
        if fire {
            self.last = Some(t_ms);
        }
        fire
    }
}

/// Intersection-over-union of two boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a.area() + b.area() - inter)
}

/// Track lifecycle state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Active,
    Lost,
}

/// Bookkeeping for one tracked face.
#[derive(Debug, Clone)]
pub struct FaceTrackState {
    pub face_id: String,
    pub last_box: BoundingBox,
    pub last_seen_ms: u64,
    pub status: TrackStatus,
    /// Consecutive detector passes without a match.
    pub misses: u32,
}

/// Outcome of matching detections against live tracks. Indices refer to the
/// slices passed to [`match_tracks`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchResult {
    /// (track index, detection index), highest IoU first.
    pub assignments: Vec<(usize, usize)>,
    /// Detections that start new tracks.
    pub new_detections: Vec<usize>,
    /// Tracks that went unmatched this pass.
    pub unmatched_tracks: Vec<usize>,
}

/// Greedy one-to-one matching, highest IoU first; pairs below `iou_min` stay
/// unmatched. Equal IoUs resolve to the lower track index, then the lower
/// detection index.
pub fn match_tracks(
    tracks: &[BoundingBox],
    detections: &[BoundingBox],
    iou_min: f64,
) -> MatchResult {
    debug_assert!(iou_min > 0.0 && iou_min < 1.0);
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, track) in tracks.iter().enumerate() {
        for (di, det) in detections.iter().enumerate() {
            let v = iou(track, det);
            if v >= iou_min {
                pairs.push((v, ti, di));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut result = MatchResult::default();
    let mut track_used = vec![false; tracks.len()];
    let mut det_used = vec![false; detections.len()];
    for (_, ti, di) in pairs {
        if !track_used[ti] && !det_used[di] {
            track_used[ti] = true;
            det_used[di] = true;
            result.assignments.push((ti, di));
        }
    }
    result.new_detections = (0..detections.len()).filter(|&d| !det_used[d]).collect();
    result.unmatched_tracks = (0..tracks.len()).filter(|&t| !track_used[t]).collect();
    result
}

/// Angle of the outer-eye segment in image coordinates (radians).
pub fn eye_angle_rad(landmarks: &LandmarkSet) -> Result<f64> {
    let dx = landmarks.outer_right_eye.0 - landmarks.outer_left_eye.0;
    let dy = landmarks.outer_right_eye.1 - landmarks.outer_left_eye.1;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateGeometry(
            "outer eye corners coincide".into(),
        ));
    }
    Ok(dy.atan2(dx))
}

/// Rotate the crop so the outer-eye segment is horizontal and resample to a
/// square `out_size` grid with bilinear interpolation.
pub fn align_face(crop: &LumaGrid, landmarks: &LandmarkSet, out_size: usize) -> Result<LumaGrid> {
    let angle = eye_angle_rad(landmarks)?;
    let values = raster::rotate_resample(crop, angle, out_size);
    let data = values
        .into_iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    LumaGrid::new(out_size, out_size, data)
}

/// Canonical head-frame coordinates (x right, y up, z toward the camera) of
/// the four landmarks. Unitless; only shape matters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoseTemplate {
    pub outer_left_eye: [f64; 3],
    pub outer_right_eye: [f64; 3],
    pub nose_tip: [f64; 3],
    pub chin: [f64; 3],
}

impl Default for PoseTemplate {
    fn default() -> Self {
        PoseTemplate {
            outer_left_eye: [-0.45, 0.35, 0.0],
            outer_right_eye: [0.45, 0.35, 0.0],
            nose_tip: [0.0, 0.0, 0.25],
            chin: [0.0, -0.65, 0.05],
        }
    }
}

impl PoseTemplate {
    pub fn points(&self) -> [Vector3<f64>; 4] {
        [
            Vector3::from(self.outer_left_eye),
            Vector3::from(self.outer_right_eye),
            Vector3::from(self.nose_tip),
            Vector3::from(self.chin),
        ]
    }

    fn centered(&self) -> [Vector3<f64>; 4] {
        let pts = self.points();
        let centroid: Vector3<f64> = pts.iter().sum::<Vector3<f64>>() / 4.0;
        [
            pts[0] - centroid,
            pts[1] - centroid,
            pts[2] - centroid,
            pts[3] - centroid,
        ]
    }

    /// The template must span three dimensions for the weak-perspective fit
    /// to be well posed.
    pub fn validate(&self) -> Result<()> {
        let gram = gram_matrix(&self.centered());
        if gram.determinant().abs() < 1e-9 {
            return Err(Error::Config(
                "pose template points are degenerate (coplanar or collinear)".into(),
            ));
        }
        Ok(())
    }
}

fn gram_matrix(centered: &[Vector3<f64>; 4]) -> Matrix3<f64> {
    let mut gram = Matrix3::zeros();
    for p in centered {
        gram += p * p.transpose();
    }
    gram
}

/// Head rotation as an intrinsic yaw (about y), pitch (about x), roll
/// (about z) sequence: `R = Ry(yaw) * Rx(pitch) * Rz(roll)`.
pub fn rotation_from_angles(pose: &HeadPose) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::y_axis(), pose.yaw.to_radians())
        * Rotation3::from_axis_angle(&Vector3::x_axis(), pose.pitch.to_radians())
        * Rotation3::from_axis_angle(&Vector3::z_axis(), pose.roll.to_radians())
}

/// Weak-perspective forward projection of the template under a head pose:
/// image x goes right, image y goes down.
pub fn project_template(
    template: &PoseTemplate,
    pose: &HeadPose,
    scale: f64,
    center: (f64, f64),
) -> LandmarkSet {
    let rot = rotation_from_angles(pose);
    let project = |p: [f64; 3]| -> (f64, f64) {
        let q = rot * Vector3::from(p);
        (center.0 + scale * q.x, center.1 - scale * q.y)
    };
    LandmarkSet {
        outer_left_eye: project(template.outer_left_eye),
        outer_right_eye: project(template.outer_right_eye),
        nose_tip: project(template.nose_tip),
        chin: project(template.chin),
    }
}

/// Recover the head pose from the four landmarks by a least-squares
/// weak-perspective fit of the template.
///
/// Scale- and translation-invariant. Collinear image points leave the
/// in-plane rotation rank-deficient and yield a degenerate-geometry error.
pub fn estimate_head_pose(landmarks: &LandmarkSet, template: &PoseTemplate) -> Result<HeadPose> {
    let centered = template.centered();
    let gram = gram_matrix(&centered);
    let inv = gram.try_inverse().ok_or_else(|| {
        Error::Config("pose template points are degenerate (coplanar or collinear)".into())
    })?;

    let pts = landmarks.points();
    let mean_u = pts.iter().map(|p| p.0).sum::<f64>() / 4.0;
    let mean_v = pts.iter().map(|p| p.1).sum::<f64>() / 4.0;

    // Normal equations of X m = b for the two image axes; image y points
    // down, the head frame's y points up.
    let mut bu = Vector3::zeros();
    let mut bv = Vector3::zeros();
    for (x, p) in centered.iter().zip(pts.iter()) {
        bu += x * (p.0 - mean_u);
        bv += x * (-(p.1 - mean_v));
    }
    let m1 = inv * bu;
    let m2 = inv * bv;

    let n1 = m1.norm();
    let n2 = m2.norm();
    if n1 < 1e-12 || n2 < 1e-12 {
        return Err(Error::DegenerateGeometry(
            "landmarks collapse the weak-perspective fit".into(),
        ));
    }
    let r1 = m1 / n1;
    let r2_raw = m2 - r1 * r1.dot(&m2);
    let n2_orth = r2_raw.norm();
    if n2_orth < 1e-9 * n2.max(1.0) {
        return Err(Error::DegenerateGeometry(
            "landmarks are collinear; head orientation is unobservable".into(),
        ));
    }
    let r2 = r2_raw / n2_orth;
    let r3 = r1.cross(&r2);

    // Rows of the recovered rotation.
    let rot = Matrix3::from_rows(&[r1.transpose(), r2.transpose(), r3.transpose()]);
    let pitch = (-rot[(1, 2)]).asin();
    let yaw = rot[(0, 2)].atan2(rot[(2, 2)]);
    let roll = rot[(1, 0)].atan2(rot[(1, 1)]);
    Ok(HeadPose {
        pitch: pitch.to_degrees(),
        yaw: yaw.to_degrees(),
        roll: roll.to_degrees(),
    })
}

/// Configuration of the tracking loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    /// Full face detection cadence.
    pub detection_interval_ms: u64,
    /// Minimum IoU for a detection to continue a track.
    pub iou_min: f64,
    /// Unmatched detector passes before a track is lost.
    pub miss_limit: u32,
    /// Resolution real detector integrations pre-scale frames to before
    /// detection. The replay detector ignores it.
    pub detector_resolution_px: [u32; 2],
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            detection_interval_ms: 500,
            iou_min: 0.3,
            miss_limit: 2,
            detector_resolution_px: [640, 480],
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.detection_interval_ms == 0 {
            return Err(Error::Config(
                "tracking.detection_interval_ms must be positive".into(),
            ));
        }
        if !(self.iou_min > 0.0 && self.iou_min < 1.0) {
            return Err(Error::Config("tracking.iou_min must lie in (0, 1)".into()));
        }
        if self.miss_limit == 0 {
            return Err(Error::Config("tracking.miss_limit must be positive".into()));
        }
        Ok(())
    }
}

/// Source of face boxes and landmarks for one video frame. Implementations
/// must be pure with respect to their inputs.
pub trait Detector {
    type Frame;

    /// Full-frame face detection (the expensive pass).
    fn detect_faces(&self, frame: &Self::Frame) -> Vec<BoundingBox>;

    /// Landmark detection on a face proposal (the cheap per-frame pass).
    fn detect_landmarks(&self, frame: &Self::Frame, region: &BoundingBox)
        -> Option<LandmarkSet>;
}

/// Replays pre-computed boxes and landmarks from an ingested stream: the
/// frame handle is the set of observations sharing one timestamp.
#[derive(Debug, Default, Clone, Copy)]
pub struct ReplayDetector;

impl Detector for ReplayDetector {
    type Frame = Vec<FrameObservation>;

    fn detect_faces(&self, frame: &Self::Frame) -> Vec<BoundingBox> {
        frame.iter().map(|o| o.box_).collect()
    }

    fn detect_landmarks(
        &self,
        frame: &Self::Frame,
        region: &BoundingBox,
    ) -> Option<LandmarkSet> {
        frame
            .iter()
            .map(|o| (iou(&o.box_, region), o))
            .filter(|(v, _)| *v > 0.0)
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .and_then(|(_, o)| o.landmarks)
    }
}

/// A per-frame emission of the tracking loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedFace {
    pub face_id: String,
    pub timestamp_ms: u64,
    pub box_: BoundingBox,
    pub landmarks: Option<LandmarkSet>,
}

/// Drives one video: schedules detector passes, associates detections with
/// tracks, and emits per-track observations every frame. One instance per
/// video; instances are independent.
pub struct TrackingOrchestrator<D: Detector> {
    detector: D,
    config: TrackerConfig,
    scheduler: DetectionScheduler,
    tracks: Vec<FaceTrackState>,
    next_id: u64,
}

impl<D: Detector> TrackingOrchestrator<D> {
    pub fn new(detector: D, config: TrackerConfig) -> Self {
        let scheduler = DetectionScheduler::new(config.detection_interval_ms);
        TrackingOrchestrator {
            detector,
            config,
            scheduler,
            tracks: Vec::new(),
            next_id: 0,
        }
    }

    /// All tracks seen so far, including lost ones.
    pub fn tracks(&self) -> &[FaceTrackState] {
        &self.tracks
    }

    /// Process one video frame at `t_ms` and emit an observation per active
    /// track.
    pub fn process_frame(&mut self, frame: &D::Frame, t_ms: u64) -> Vec<TrackedFace> {
        if self.scheduler.should_detect(t_ms) {
            self.run_detector_pass(frame, t_ms);
        }
        let mut out = Vec::new();
        for track in &mut self.tracks {
            if track.status != TrackStatus::Active {
                continue;
            }
            let landmarks = self.detector.detect_landmarks(frame, &track.last_box);
            track.last_seen_ms = t_ms;
            out.push(TrackedFace {
                face_id: track.face_id.clone(),
                timestamp_ms: t_ms,
                box_: track.last_box,
                landmarks,
            });
        }
        out
    }

    fn run_detector_pass(&mut self, frame: &D::Frame, t_ms: u64) {
        let detections = self.detector.detect_faces(frame);
        let active: Vec<usize> = (0..self.tracks.len())
            .filter(|&i| self.tracks[i].status == TrackStatus::Active)
            .collect();
        let boxes: Vec<BoundingBox> = active.iter().map(|&i| self.tracks[i].last_box).collect();
        let result = match_tracks(&boxes, &detections, self.config.iou_min);

        for &(ti, di) in &result.assignments {
            let track = &mut self.tracks[active[ti]];
            track.last_box = detections[di];
            track.last_seen_ms = t_ms;
            track.misses = 0;
        }
        for &ti in &result.unmatched_tracks {
            let track = &mut self.tracks[active[ti]];
            track.misses += 1;
            if track.misses >= self.config.miss_limit {
                track.status = TrackStatus::Lost;
            }
        }
        for &di in &result.new_detections {
            let face_id = format!("face_{}", self.next_id);
            self.next_id += 1;
            self.tracks.push(FaceTrackState {
                face_id,
                last_box: detections[di],
                last_seen_ms: t_ms,
                status: TrackStatus::Active,
                misses: 0,
            });
        }
    }
}
