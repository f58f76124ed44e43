//! AU score post-processing: moving-mean smoothing, rolling-baseline
//! subtraction, and a sigmoid soft-threshold, applied per channel in that
//! order, plus the grid search that selects the stage parameters.
//!
//! The baseline is a trailing-window low quantile: it tracks the resting
//! level of each channel (canceling person- or environment-specific offsets
//! such as glasses) while ignoring expression peaks.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::au::{Au, AuScores, ALL_AUS};
use crate::error::{Error, Result};
use crate::evaluation::roc_auc;

/// Whether the smoothing window is centered on the frame (batch) or entirely
/// in the past (live streaming).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingMode {
    #[default]
    Centered,
    Causal,
}

/// Sigmoid soft-threshold parameters: slope `k` and center `t` on the 0–100
/// scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmoidParams {
    pub k: f64,
    pub t: f64,
}

impl Default for SigmoidParams {
    fn default() -> Self {
        SigmoidParams { k: 0.2, t: 50.0 }
    }
}

/// Parameters of the three-stage chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostprocessConfig {
    /// Odd number of frames in the moving-mean window.
    pub smooth_window_frames: usize,
    pub smoothing_mode: SmoothingMode,
    /// Trailing window over which the baseline quantile is taken.
    pub baseline_window_ms: u64,
    /// Quantile in [0, 1] used as the baseline estimate.
    pub baseline_quantile: f64,
    /// Sigmoid applied to every channel unless overridden.
    pub sigmoid: SigmoidParams,
    /// Per-channel sigmoid overrides.
    pub sigmoid_overrides: BTreeMap<Au, SigmoidParams>,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        PostprocessConfig {
            smooth_window_frames: 5,
            smoothing_mode: SmoothingMode::Centered,
            baseline_window_ms: 30_000,
            baseline_quantile: 0.1,
            sigmoid: SigmoidParams::default(),
            sigmoid_overrides: BTreeMap::new(),
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.smooth_window_frames == 0 || self.smooth_window_frames.is_multiple_of(2) {
            return Err(Error::Config(
                "postprocess.smooth_window_frames must be odd and positive".into(),
            ));
        }
        if self.baseline_window_ms == 0 {
            return Err(Error::Config(
                "postprocess.baseline_window_ms must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.baseline_quantile) {
            return Err(Error::Config(
                "postprocess.baseline_quantile must lie in [0, 1]".into(),
            ));
        }
        for (au, params) in std::iter::once((None, &self.sigmoid)).chain(
            self.sigmoid_overrides
                .iter()
                .map(|(au, p)| (Some(*au), p)),
        ) {
            if params.k <= 0.0 || !params.k.is_finite() {
                return Err(Error::Config(match au {
                    Some(au) => format!("postprocess sigmoid for {au}: slope k must be > 0"),
                    None => "postprocess sigmoid: slope k must be > 0".into(),
                }));
            }
            if !(0.0..=100.0).contains(&params.t) {
                return Err(Error::Config(
                    "postprocess sigmoid: center t must lie in [0, 100]".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn sigmoid_for(&self, au: Au) -> SigmoidParams {
        self.sigmoid_overrides.get(&au).copied().unwrap_or(self.sigmoid)
    }
}

/// Centered moving mean with the window truncated at the boundaries:
/// `out[i]` averages `series[i-w/2 ..= i+w/2]` clipped to valid indices.
pub fn moving_mean(series: &[f64], window: usize) -> Vec<f64> {
    debug_assert!(window >= 1);
    let n = series.len();
    let half = window / 2;
    let prefix = prefix_sums(series);
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}

/// Causal moving mean: `out[i]` averages the last `window` samples ending at
/// `i`, truncated at the start.
pub fn moving_mean_causal(series: &[f64], window: usize) -> Vec<f64> {
    debug_assert!(window >= 1);
    let n = series.len();
    let prefix = prefix_sums(series);
    (0..n)
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            (prefix[i + 1] - prefix[lo]) / (i + 1 - lo) as f64
        })
        .collect()
}

fn prefix_sums(series: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(series.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in series {
        acc += v;
        prefix.push(acc);
    }
    prefix
}

fn smooth(series: &[f64], config: &PostprocessConfig) -> Vec<f64> {
    match config.smoothing_mode {
        SmoothingMode::Centered => moving_mean(series, config.smooth_window_frames),
        SmoothingMode::Causal => moving_mean_causal(series, config.smooth_window_frames),
    }
}

/// Order statistic over a trailing time window, maintained incrementally.
///
/// The window at time `t` holds samples with timestamps in `(t - window, t]`.
/// The quantile is the nearest-rank element: index `round(q * (m - 1))` of
/// the sorted window of size `m`.
pub struct SlidingQuantile {
    window_ms: u64,
    quantile: f64,
    entries: VecDeque<(u64, f64)>,
    sorted: Vec<f64>,
}

impl SlidingQuantile {
    pub fn new(window_ms: u64, quantile: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&quantile));
        SlidingQuantile {
            window_ms,
            quantile,
            entries: VecDeque::new(),
            sorted: Vec::new(),
        }
    }

    /// Insert a sample and return the current window quantile.
    pub fn push(&mut self, timestamp_ms: u64, value: f64) -> f64 {
        let cutoff = timestamp_ms.saturating_sub(self.window_ms);
        while let Some(&(ts, old)) = self.entries.front() {
            if ts <= cutoff && timestamp_ms >= self.window_ms {
                self.entries.pop_front();
                let pos = self
                    .sorted
                    .binary_search_by(|probe| probe.total_cmp(&old))
                    .expect("evicted value must be present");
                self.sorted.remove(pos);
            } else {
                break;
            }
        }
        self.entries.push_back((timestamp_ms, value));
        let pos = self
            .sorted
            .binary_search_by(|probe| probe.total_cmp(&value))
            .unwrap_or_else(|p| p);
        self.sorted.insert(pos, value);

        let m = self.sorted.len();
        let idx = ((m as f64 - 1.0) * self.quantile).round() as usize;
        self.sorted[idx.min(m - 1)]
    }
}

/// Subtract the trailing-window quantile from each sample and clamp at zero.
pub fn baseline_normalize(
    series: &[f64],
    timestamps_ms: &[u64],
    window_ms: u64,
    quantile: f64,
) -> Vec<f64> {
    debug_assert_eq!(series.len(), timestamps_ms.len());
    let mut state = SlidingQuantile::new(window_ms, quantile);
    series
        .iter()
        .zip(timestamps_ms)
        .map(|(&v, &t)| (v - state.push(t, v)).max(0.0))
        .collect()
}

/// Sigmoid soft-threshold mapping into (0, 100): `100 / (1 + exp(-k(x - t)))`.
pub fn soft_threshold(x: f64, k: f64, t: f64) -> f64 {
    debug_assert!(k > 0.0);
    100.0 / (1.0 + (-k * (x - t)).exp())
}

/// Run one channel through the full chain: smooth, baseline, sigmoid.
pub fn postprocess_series(
    series: &[f64],
    timestamps_ms: &[u64],
    config: &PostprocessConfig,
    au: Au,
) -> Vec<f64> {
    let smoothed = smooth(series, config);
    let normalized = baseline_normalize(
        &smoothed,
        timestamps_ms,
        config.baseline_window_ms,
        config.baseline_quantile,
    );
    let SigmoidParams { k, t } = config.sigmoid_for(au);
    normalized
        .into_iter()
        .map(|v| soft_threshold(v, k, t))
        .collect()
}

/// Post-process every channel of a frame sequence independently.
pub fn postprocess_stream(
    timestamps_ms: &[u64],
    frames: &[AuScores],
    config: &PostprocessConfig,
) -> Vec<AuScores> {
    debug_assert_eq!(timestamps_ms.len(), frames.len());
    let mut out = vec![AuScores::zeros(); frames.len()];
    let mut channel = Vec::with_capacity(frames.len());
    for au in ALL_AUS {
        channel.clear();
        channel.extend(frames.iter().map(|f| f.get(au)));
        let processed = postprocess_series(&channel, timestamps_ms, config, au);
        for (frame, value) in out.iter_mut().zip(processed) {
            frame.set(au, value);
        }
    }
    out
}

/// One validation session for the grid search: a frame sequence with binary
/// per-frame labels for the channels under study.
#[derive(Debug, Clone)]
pub struct LabeledSeries {
    pub timestamps_ms: Vec<u64>,
    pub frames: Vec<AuScores>,
    pub labels: BTreeMap<Au, Vec<bool>>,
}

/// Parameter lattice for [`grid_search`]. Axes are combined exhaustively in
/// the order listed here, which also defines the tie-break order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub smoothing_mode: SmoothingMode,
    pub smooth_windows: Vec<usize>,
    pub baseline_windows_ms: Vec<u64>,
    pub baseline_quantiles: Vec<f64>,
    pub sigmoid_ks: Vec<f64>,
    pub sigmoid_ts: Vec<f64>,
}

impl GridSpec {
    fn configs(&self) -> Vec<PostprocessConfig> {
        let mut out = Vec::new();
        for &w in &self.smooth_windows {
            for &b in &self.baseline_windows_ms {
                for &q in &self.baseline_quantiles {
                    for &k in &self.sigmoid_ks {
                        for &t in &self.sigmoid_ts {
                            out.push(PostprocessConfig {
                                smooth_window_frames: w,
                                smoothing_mode: self.smoothing_mode,
                                baseline_window_ms: b,
                                baseline_quantile: q,
                                sigmoid: SigmoidParams { k, t },
                                sigmoid_overrides: BTreeMap::new(),
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// AUC per channel for one grid point.
#[derive(Debug, Clone)]
pub struct GridPointScore {
    pub config: PostprocessConfig,
    pub per_au: BTreeMap<Au, Option<f64>>,
    /// Mean over channels that had both label classes.
    pub mean_auc: f64,
    /// Channels excluded for having a single label class.
    pub excluded: Vec<Au>,
}

/// Result of an exhaustive grid search.
#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub best: PostprocessConfig,
    pub best_mean_auc: f64,
    pub table: Vec<GridPointScore>,
}

impl GridSearchResult {
    /// Emit the score table as CSV, one row per grid point.
    pub fn write_csv<W: std::io::Write>(&self, writer: &mut W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec![
            "smooth_window_frames".to_string(),
            "baseline_window_ms".to_string(),
            "baseline_quantile".to_string(),
            "sigmoid_k".to_string(),
            "sigmoid_t".to_string(),
            "mean_auc".to_string(),
        ];
        let searched: Vec<Au> = self
            .table
            .first()
            .map(|row| row.per_au.keys().copied().collect())
            .unwrap_or_default();
        header.extend(searched.iter().map(|au| format!("{}_auc", au.column())));
        out.write_record(&header)?;
        for row in &self.table {
            let mut fields = vec![
                row.config.smooth_window_frames.to_string(),
                row.config.baseline_window_ms.to_string(),
                row.config.baseline_quantile.to_string(),
                row.config.sigmoid.k.to_string(),
                row.config.sigmoid.t.to_string(),
                row.mean_auc.to_string(),
            ];
            for au in &searched {
                fields.push(match row.per_au.get(au) {
                    Some(Some(auc)) => auc.to_string(),
                    _ => String::new(),
                });
            }
            out.write_record(&fields)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn score_config(validation: &[LabeledSeries], config: &PostprocessConfig) -> GridPointScore {
    let mut searched: Vec<Au> = validation
        .iter()
        .flat_map(|s| s.labels.keys().copied())
        .collect();
    searched.sort_unstable();
    searched.dedup();

    let mut per_au = BTreeMap::new();
    let mut excluded = Vec::new();
    let mut sum = 0.0;
    let mut count = 0usize;
    for &au in &searched {
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for session in validation {
            let Some(session_labels) = session.labels.get(&au) else {
                continue;
            };
            let channel: Vec<f64> = session.frames.iter().map(|f| f.get(au)).collect();
            let processed = postprocess_series(&channel, &session.timestamps_ms, config, au);
            scores.extend(processed);
            labels.extend(session_labels.iter().copied());
        }
        match roc_auc(&scores, &labels) {
            Ok(auc) => {
                per_au.insert(au, Some(auc));
                sum += auc;
                count += 1;
            }
            Err(_) => {
                per_au.insert(au, None);
                excluded.push(au);
            }
        }
    }
    GridPointScore {
        config: config.clone(),
        per_au,
        mean_auc: if count > 0 { sum / count as f64 } else { f64::NAN },
        excluded,
    }
}

/// Exhaustively evaluate the lattice and return the configuration with the
/// highest mean ROC-AUC. Ties keep the earliest grid point in axis order.
/// Channels whose pooled labels are single-class are excluded from the mean
/// and reported per grid point.
pub fn grid_search(validation: &[LabeledSeries], grid: &GridSpec) -> Result<GridSearchResult> {
    let configs = grid.configs();
    if configs.is_empty() {
        return Err(Error::Config("grid search over an empty lattice".into()));
    }
    for config in &configs {
        config.validate()?;
    }
    let table: Vec<GridPointScore> = configs
        .par_iter()
        .map(|config| score_config(validation, config))
        .collect();
    let mut best_idx = None;
    for (i, row) in table.iter().enumerate() {
        if row.mean_auc.is_nan() {
            continue;
        }
        match best_idx {
            None => best_idx = Some(i),
            Some(j) if row.mean_auc > table[j].mean_auc => best_idx = Some(i),
            _ => {}
        }
    }
    let best_idx = best_idx.ok_or_else(|| {
        Error::SingleClass("every searched channel had single-class labels".into())
    })?;
    Ok(GridSearchResult {
        best: table[best_idx].config.clone(),
        best_mean_auc: table[best_idx].mean_auc,
        table,
    })
}
