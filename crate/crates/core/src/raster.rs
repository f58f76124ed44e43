//! Shared raster helpers: bilinear sampling and rotation/resampling of
//! grayscale grids.

use crate::model::LumaGrid;

/// Bilinear sample at fractional coordinates, clamping to the grid edges.
pub(crate) fn sample_bilinear(grid: &LumaGrid, x: f64, y: f64) -> f64 {
    let max_x = (grid.w - 1) as f64;
    let max_y = (grid.h - 1) as f64;
    let x = x.clamp(0.0, max_x);
    let y = y.clamp(0.0, max_y);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(grid.w - 1);
    let y1 = (y0 + 1).min(grid.h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;

    let p00 = grid.get(y0, x0) as f64;
    let p10 = grid.get(y0, x1) as f64;
    let p01 = grid.get(y1, x0) as f64;
    let p11 = grid.get(y1, x1) as f64;
    let top = p00 + (p10 - p00) * fx;
    let bottom = p01 + (p11 - p01) * fx;
    top + (bottom - top) * fy
}

/// Resample to `out_w` x `out_h` with pixel-center alignment. Identity when
/// the sizes already match.
pub(crate) fn resample(grid: &LumaGrid, out_w: usize, out_h: usize) -> Vec<f64> {
    let sx = grid.w as f64 / out_w as f64;
    let sy = grid.h as f64 / out_h as f64;
    let mut out = Vec::with_capacity(out_w * out_h);
    for row in 0..out_h {
        let y = (row as f64 + 0.5) * sy - 0.5;
        for col in 0..out_w {
            let x = (col as f64 + 0.5) * sx - 0.5;
            out.push(sample_bilinear(grid, x, y));
        }
    }
    out
}

/// Rotate by `-angle_rad` about the grid center while resampling to a square
/// `out_size` output. `angle_rad` is the angle of the feature that should end
/// up horizontal (the output is counter-rotated).
pub(crate) fn rotate_resample(grid: &LumaGrid, angle_rad: f64, out_size: usize) -> Vec<f64> {
    let (sin, cos) = angle_rad.sin_cos();
    let sx = grid.w as f64 / out_size as f64;
    let sy = grid.h as f64 / out_size as f64;
    let cx_in = grid.w as f64 / 2.0;
    let cy_in = grid.h as f64 / 2.0;
    let c_out = out_size as f64 / 2.0;

    let mut out = Vec::with_capacity(out_size * out_size);
    for row in 0..out_size {
        let yo = (row as f64 + 0.5) - c_out;
        for col in 0..out_size {
            let xo = (col as f64 + 0.5) - c_out;
            // Scale into input units, then rotate forward by +angle (the
            // inverse of the output rotation).
            let xs = xo * sx;
            let ys = yo * sy;
            let xi = cos * xs - sin * ys;
            let yi = sin * xs + cos * ys;
            out.push(sample_bilinear(grid, xi + cx_in - 0.5, yi + cy_in - 0.5));
        }
    }
    out
}
