//! Streaming facial-expression analytics.
//!
//! The pipeline turns per-frame face observations (boxes, landmarks, raw AU
//! classifier scores) into post-processed AU scores, basic emotions,
//! composite emotional states (sentimentality, confusion), expressive
//! metrics (blink, blink rate, attention, expressiveness, valence), and
//! data-quality metrics. Neural detectors sit behind a replay
//! interface and a deterministic synthetic generator provides verifiable
//! ground truth. An evaluation harness computes ROC-AUC, F1, and the
//! ad-level ROC-Ad / moment-level ROC-Sent KPIs with demographic slicing.

pub mod au;
pub mod composite;
pub mod emotion;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod expressive;
pub mod model;
pub mod postprocess;
pub mod quality;
mod raster;
pub mod stream;
pub mod synth;
pub mod tracking;

pub use au::{Au, AuScores, ALL_AUS, AU_COUNT};
pub use engine::{Engine, EngineConfig, TrackOutput};
pub use error::{Error, Result};
pub use model::{
    BoundingBox, CompositeScore, ExpressiveScores, FrameObservation, HeadPose, LandmarkSet,
    LumaGrid, MetricFrame,
};
