//! Center-area texture features.
//!
//! Each sub band gets its own center: the row with the largest variance and
//! the column with the largest variance (population statistics, ties to the
//! lowest index). A 16x16 window around that point is shifted inward when it
//! would cross the plane border and only shrinks when the plane itself is
//! smaller. The window is quantized over its own value range and summarized
//! by its GLCM statistics.

use crate::dwt::SubbandSet;
use crate::error::Result;
use crate::plane::Plane;
use crate::texture::{quantize_self_range, texture_of, GlcmConfig};

pub const CENTER_WINDOW: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterPoint {
    pub row: usize,
    pub col: usize,
    pub row_variance: f64,
    pub col_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowColStats {
    pub row_means: Vec<f64>,
    pub row_vars: Vec<f64>,
    pub col_means: Vec<f64>,
    pub col_vars: Vec<f64>,
}

pub fn row_col_stats(plane: &Plane) -> RowColStats {
    let (w, h) = plane.dims();
    let mut row_means = Vec::with_capacity(h);
    let mut row_vars = Vec::with_capacity(h);
    for r in 0..h {
        let row = plane.row(r);
        let mean = row.iter().sum::<f64>() / w as f64;
        row_means.push(mean);
        row_vars.push(row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w as f64);
    }

    let mut col_means = vec![0.0; w];
    for r in 0..h {
        for (acc, v) in col_means.iter_mut().zip(plane.row(r)) {
            *acc += v;
        }
    }
    col_means.iter_mut().for_each(|m| *m /= h as f64);
    let mut col_vars = vec![0.0; w];
    for r in 0..h {
        for ((acc, v), m) in col_vars.iter_mut().zip(plane.row(r)).zip(&col_means) {
            *acc += (v - m).powi(2);
        }
    }
    col_vars.iter_mut().for_each(|v| *v /= h as f64);

    RowColStats {
        row_means,
        row_vars,
        col_means,
        col_vars,
    }
}

/// Index of the first maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// # Panics
/// On an empty plane.
pub fn find_center(plane: &Plane) -> CenterPoint {
    assert!(!plane.is_empty(), "find_center on an empty plane");
    let stats = row_col_stats(plane);
    let row = argmax(&stats.row_vars);
    let col = argmax(&stats.col_vars);
    CenterPoint {
        row,
        col,
        row_variance: stats.row_vars[row],
        col_variance: stats.col_vars[col],
    }
}

/// Start and length of a `size`-wide window centered on `center` within `len`.
pub fn window_span(center: usize, len: usize, size: usize) -> (usize, usize) {
    if len <= size {
        return (0, len);
    }
    let start = center.saturating_sub(size / 2).min(len - size);
    (start, size)
}

pub fn center_window(plane: &Plane, center: &CenterPoint) -> Plane {
    let (r0, h) = window_span(center.row, plane.height(), CENTER_WINDOW);
    let (c0, w) = window_span(center.col, plane.width(), CENTER_WINDOW);
    plane.crop(r0, c0, w, h)
}

/// Sixteen values: `[corr, contrast, homog, energy]` for `LL, LH, HL, HH`.
pub fn center_features(bands: &SubbandSet, glcm: &GlcmConfig) -> Result<[f64; 16]> {
    let mut out = [0.0; 16];
    for (k, plane) in bands.planes().into_iter().enumerate() {
        let window = center_window(plane, &find_center(plane));
        let tex = texture_of(&quantize_self_range(&window, glcm.levels)?, glcm)?;
        out[4 * k..4 * k + 4].copy_from_slice(&tex.to_vector());
    }
    Ok(out)
}
