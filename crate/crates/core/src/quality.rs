//! The five data-quality metrics computed on grayscale face crops and
//! landmarks: mean luminance, left/right luminance difference, luminance
//! variance (contrast), high-frequency spectral power (noise), and
//! inter-ocular distance (face size).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LandmarkSet, LumaGrid};
use crate::raster;

/// Knobs the quality metrics depend on. The normalization choices (analysis
/// size, cutoff rule, IOD denominator) are conventions, so each is exposed
/// here rather than hard-coded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QualityConfig {
    /// Square size crops are resampled to before the spectral analysis.
    pub analysis_size: usize,
    /// Fraction of the diagonal frequency range above which energy counts as
    /// high-frequency, in (0, 1).
    pub hf_cutoff_fraction: f64,
    /// Frame width in pixels used to normalize inter-ocular distance.
    pub frame_width_px: f64,
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig {
            analysis_size: 64,
            hf_cutoff_fraction: 0.5,
            frame_width_px: 1280.0,
        }
    }
}

impl QualityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.analysis_size < 2 {
            return Err(Error::Config("quality.analysis_size must be >= 2".into()));
        }
        if !(self.hf_cutoff_fraction > 0.0 && self.hf_cutoff_fraction < 1.0) {
            return Err(Error::Config(
                "quality.hf_cutoff_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.frame_width_px <= 0.0 || self.frame_width_px.is_nan() {
            return Err(Error::Config("quality.frame_width_px must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-frame quality metrics. Fields are present when their inputs were:
/// the first four need a crop, inter-ocular distance needs landmarks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QualityReport {
    pub mean_luminance: Option<f64>,
    pub luminance_diff_lr: Option<f64>,
    pub variance_luminance: Option<f64>,
    pub high_freq_power: Option<f64>,
    pub inter_ocular_distance: Option<f64>,
}

/// Average pixel intensity across the crop.
pub fn mean_luminance(crop: &LumaGrid) -> Result<f64> {
    if crop.is_empty() {
        return Err(Error::DegenerateGeometry("empty crop".into()));
    }
    let sum: f64 = crop.data.iter().map(|&v| v as f64).sum();
    Ok(sum / crop.data.len() as f64)
}

/// Mean intensity of the right half minus the left half; odd widths drop the
/// center column.
pub fn luminance_diff_lr(crop: &LumaGrid) -> Result<f64> {
    if crop.w < 2 || crop.h == 0 {
        return Err(Error::DegenerateGeometry(
            "crop must be at least 2 columns wide".into(),
        ));
    }
    let half = crop.w / 2;
    let right_start = crop.w - half;
    let mut left = 0.0;
    let mut right = 0.0;
    for row in 0..crop.h {
        for col in 0..half {
            left += crop.get(row, col) as f64;
        }
        for col in right_start..crop.w {
            right += crop.get(row, col) as f64;
        }
    }
    let n = (half * crop.h) as f64;
    Ok(right / n - left / n)
}

/// Population variance of the crop intensities (contrast).
pub fn variance_luminance(crop: &LumaGrid) -> Result<f64> {
    let mean = mean_luminance(crop)?;
    let sum_sq: f64 = crop
        .data
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum();
    Ok(sum_sq / crop.data.len() as f64)
}

/// Orthonormal DCT-II basis for size `n`, cached per size.
fn dct_basis(n: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut basis = vec![0.0; n * n];
            for u in 0..n {
                let scale = if u == 0 {
                    (1.0 / n as f64).sqrt()
                } else {
                    (2.0 / n as f64).sqrt()
                };
                for x in 0..n {
                    basis[u * n + x] = scale
                        * (std::f64::consts::PI * (2.0 * x as f64 + 1.0) * u as f64
                            / (2.0 * n as f64))
                            .cos();
                }
            }
            Arc::new(basis)
        })
        .clone()
}

/// Separable 2D orthonormal DCT-II of a square grid: B * F * B^T.
pub(crate) fn dct2(values: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(values.len(), n * n);
    let basis = dct_basis(n);
    // rows: T[u][y] = sum_x B[u][x] * F[x][y], with F row-major by (row=y? )
    // Layout: values[row * n + col]; transform columns first, then rows.
    let mut tmp = vec![0.0; n * n];
    for u in 0..n {
        let b_row = &basis[u * n..(u + 1) * n];
        for col in 0..n {
            let mut acc = 0.0;
            for (row, &b) in b_row.iter().enumerate() {
                acc += b * values[row * n + col];
            }
            tmp[u * n + col] = acc;
        }
    }
    let mut out = vec![0.0; n * n];
    for u in 0..n {
        let t_row = &tmp[u * n..(u + 1) * n];
        for v in 0..n {
            let b_row = &basis[v * n..(v + 1) * n];
            let acc: f64 = t_row.iter().zip(b_row).map(|(&t, &b)| t * b).sum();
            out[u * n + v] = acc;
        }
    }
    out
}

/// Fraction of non-DC spectral energy above the diagonal cutoff.
///
/// The crop is resampled to `analysis_size` squared, transformed with an
/// orthonormal cosine basis, and the squared coefficients with
/// `u + v >= cutoff_fraction * 2 * (n - 1)` are summed and divided by the
/// total squared energy excluding the DC term. A constant image returns 0.
pub fn high_freq_power(crop: &LumaGrid, analysis_size: usize, cutoff_fraction: f64) -> f64 {
    if crop.is_empty() {
        return 0.0;
    }
    let n = analysis_size;
    let resampled = raster::resample(crop, n, n);
    let coeffs = dct2(&resampled, n);
    let threshold = cutoff_fraction * 2.0 * (n as f64 - 1.0);
    let mut high = 0.0;
    let mut total = 0.0;
    for u in 0..n {
        for v in 0..n {
            if u == 0 && v == 0 {
                continue;
            }
            let sq = coeffs[u * n + v] * coeffs[u * n + v];
            total += sq;
            if (u + v) as f64 >= threshold {
                high += sq;
            }
        }
    }
    if total <= 1e-12 {
        0.0
    } else {
        high / total
    }
}

/// Outer-eye-corner distance as a fraction of the frame width, in (0, 1].
pub fn inter_ocular_distance(landmarks: &LandmarkSet, frame_width_px: f64) -> Result<f64> {
    if frame_width_px <= 0.0 || frame_width_px.is_nan() {
        return Err(Error::Config("frame width must be positive".into()));
    }
    let dist = landmarks.eye_distance();
    if dist == 0.0 {
        return Err(Error::DegenerateGeometry(
            "outer eye corners coincide".into(),
        ));
    }
    Ok((dist / frame_width_px).min(1.0))
}

/// Assemble a report from whatever inputs the frame carries. Returns `None`
/// when neither a crop nor landmarks are available.
pub fn assess(
    crop: Option<&LumaGrid>,
    landmarks: Option<&LandmarkSet>,
    config: &QualityConfig,
) -> Option<QualityReport> {
    let mut report = QualityReport::default();
    if let Some(crop) = crop {
        report.mean_luminance = mean_luminance(crop).ok();
        report.luminance_diff_lr = luminance_diff_lr(crop).ok();
        report.variance_luminance = variance_luminance(crop).ok();
        report.high_freq_power = Some(high_freq_power(
            crop,
            config.analysis_size,
            config.hf_cutoff_fraction,
        ));
    }
    if let Some(lm) = landmarks {
        report.inter_ocular_distance = inter_ocular_distance(lm, config.frame_width_px).ok();
    }
    if report == QualityReport::default() {
        None
    } else {
        Some(report)
    }
}
