//! Gray-level co-occurrence matrices and the four texture statistics
//! (correlation, contrast, energy, homogeneity).
//!
//! Gray levels are indexed from zero. Shifting the index origin changes the
//! marginal means but none of the four statistics, so results agree with
//! one-based formulations. Means and standard deviations in the
//! correlation term are the marginal moments of the normalized matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Product of marginal standard deviations below which correlation is
/// reported as NaN (constant input).
const DEGENERATE_SIGMA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct GlcmConfig {
    pub levels: usize,
    /// `(dy, dx)` displacement from a pixel to its neighbor.
    pub offset: (isize, isize),
    pub symmetric: bool,
}

impl Default for GlcmConfig {
    fn default() -> Self {
        GlcmConfig {
            levels: 8,
            offset: (0, 1),
            symmetric: true,
        }
    }
}

impl GlcmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::InvalidConfig(format!("glcm.levels must be >= 2, got {}", self.levels)));
        }
        if self.offset == (0, 0) {
            return Err(Error::InvalidConfig("glcm.offset must be non-zero".into()));
        }
        Ok(())
    }
}

/// Matrix of gray-level bin indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quantized {
    pub width: usize,
    pub height: usize,
    pub bins: Vec<usize>,
}

impl Quantized {
    pub fn from_rows(rows: &[&[usize]]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        Quantized {
            width,
            height,
            bins: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> usize {
        self.bins[r * self.width + c]
    }

    pub fn transpose(&self) -> Quantized {
        let mut bins = Vec::with_capacity(self.bins.len());
        for c in 0..self.width {
            for r in 0..self.height {
                bins.push(self.get(r, c));
            }
        }
        Quantized {
            width: self.height,
            height: self.width,
            bins,
        }
    }
}

/// Bin index of `v` in `[lo, hi]` split into `levels` equal bins; values
/// are clamped to the range and `hi` falls in the last bin.
#[inline]
pub fn quantize_value(v: f64, levels: usize, lo: f64, hi: f64) -> usize {
    if v.is_nan() {
        return 0;
    }
    let t = (v.clamp(lo, hi) - lo) / (hi - lo);
    ((levels as f64 * t).floor() as usize).min(levels - 1)
}

pub fn quantize(matrix: &Plane, levels: usize, range: (f64, f64)) -> Result<Quantized> {
    let (lo, hi) = range;
    if levels < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::BadRange { lo, hi, levels });
    }
    Ok(Quantized {
        width: matrix.width(),
        height: matrix.height(),
        bins: matrix
            .as_slice()
            .iter()
            .map(|&v| quantize_value(v, levels, lo, hi))
            .collect(),
    })
}

/// Quantizes over the matrix's own `(min, max)`; a constant matrix maps to
/// bin 0 everywhere.
pub fn quantize_self_range(matrix: &Plane, levels: usize) -> Result<Quantized> {
    match matrix.min_max() {
        Some((lo, hi)) if lo < hi => quantize(matrix, levels, (lo, hi)),
        _ => {
            if levels < 2 {
                return Err(Error::BadRange { lo: 0.0, hi: 0.0, levels });
            }
            Ok(Quantized {
                width: matrix.width(),
                height: matrix.height(),
                bins: vec![0; matrix.as_slice().len()],
            })
        }
    }
}

/// Normalized co-occurrence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    levels: usize,
    p: Vec<f64>,
    pub offset: (isize, isize),
    pub symmetric: bool,
}

impl Glcm {
    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// Builds a GLCM directly from a probability table (row-major `L x L`).
    pub fn from_probabilities(levels: usize, p: Vec<f64>) -> Result<Self> {
        if levels < 2 || p.len() != levels * levels {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {levels} levels",
                p.len()
            )));
        }
        let symmetric = (0..levels).all(|i| (0..levels).all(|j| p[i * levels + j] == p[j * levels + i]));
        Ok(Glcm {
            levels,
            p,
            offset: (0, 0),
            symmetric,
        })
    }

    /// `(mean, stddev)` of the row and column marginals.
    pub fn marginal_moments(&self) -> ((f64, f64), (f64, f64)) {
        let l = self.levels;
        let mut px = vec![0.0; l];
        let mut py = vec![0.0; l];
        for i in 0..l {
            for j in 0..l {
                let v = self.p(i, j);
                px[i] += v;
                py[j] += v;
            }
        }
        let moments = |m: &[f64]| {
            let mean: f64 = m.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
            let var: f64 = m.iter().enumerate().map(|(k, v)| (k as f64 - mean).powi(2) * v).sum();
            (mean, var.sqrt())
        };
        (moments(&px), moments(&py))
    }
}

pub fn glcm(q: &Quantized, levels: usize, offset: (isize, isize), symmetric: bool) -> Result<Glcm> {
    let (dy, dx) = offset;
    let no_pairs = Error::NoPairs {
        dy,
        dx,
        width: q.width,
        height: q.height,
    };
    let (h, w) = (q.height as isize, q.width as isize);
    // Rows r with 0 <= r + dy < h, likewise columns.
    let r0 = (-dy).max(0);
    let r1 = (h - dy).min(h);
    let c0 = (-dx).max(0);
    let c1 = (w - dx).min(w);
    if r0 >= r1 || c0 >= c1 {
        return Err(no_pairs);
    }

    let mut counts = vec![0u64; levels * levels];
    for r in r0..r1 {
        for c in c0..c1 {
            let i = q.get(r as usize, c as usize);
            let j = q.get((r + dy) as usize, (c + dx) as usize);
            debug_assert!(i < levels && j < levels, "bin out of range");
            counts[i * levels + j] += 1;
            if symmetric {
                counts[j * levels + i] += 1;
            }
        }
    }
    let total: u64 = counts.iter().sum();
    let total = total as f64;
    Ok(Glcm {
        levels,
        p: counts.into_iter().map(|n| n as f64 / total).collect(),
        offset,
        symmetric,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextureFeatures {
    pub correlation: f64,
    pub contrast: f64,
    pub energy: f64,
    pub homogeneity: f64,
}

impl TextureFeatures {
    /// Feature-vector order `[correlation, contrast, homogeneity, energy]`,
    /// with an undefined (NaN) correlation emitted as 0.
    pub fn to_vector(&self) -> [f64; 4] {
        let corr = if self.correlation.is_nan() { 0.0 } else { self.correlation };
        [corr, self.contrast, self.homogeneity, self.energy]
    }

    /// Statistics of a single-valued input.
    pub fn constant() -> Self {
        TextureFeatures {
            correlation: f64::NAN,
            contrast: 0.0,
            energy: 1.0,
            homogeneity: 1.0,
        }
    }
}

pub fn features(g: &Glcm) -> TextureFeatures {
    let l = g.levels;
    let ((mu_i, sd_i), (mu_j, sd_j)) = g.marginal_moments();
    let mut cov = 0.0;
    let mut contrast = 0.0;
    let mut energy = 0.0;
    let mut homogeneity = 0.0;
    for i in 0..l {
        for j in 0..l {
            let p = g.p(i, j);
            if p == 0.0 {
                continue;
            }
            let d = i.abs_diff(j) as f64;
            cov += (i as f64 - mu_i) * (j as f64 - mu_j) * p;
            contrast += d * d * p;
            energy += p * p;
            homogeneity += p / (1.0 + d);
        }
    }
    let denom = sd_i * sd_j;
    let correlation = if denom < DEGENERATE_SIGMA {
        f64::NAN
    } else {
        (cov / denom).clamp(-1.0, 1.0)
    };
    TextureFeatures {
        correlation,
        contrast,
        energy,
        homogeneity,
    }
}

/// Quantize, build the GLCM and compute its statistics in one step.
/// A matrix too small for the offset has no texture and reports the
/// constant-input statistics.
pub fn texture_of(q: &Quantized, cfg: &GlcmConfig) -> Result<TextureFeatures> {
    match glcm(q, cfg.levels, cfg.offset, cfg.symmetric) {
        Ok(g) => Ok(features(&g)),
        Err(Error::NoPairs { .. }) => Ok(TextureFeatures::constant()),
        Err(e) => Err(e),
    }
}
