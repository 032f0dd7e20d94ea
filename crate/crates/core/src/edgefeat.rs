//! Canny edge detection on sub bands and the per-band edge statistics.
//!
//! Pipeline: Gaussian smoothing (radius `ceil(3 sigma)`, replicated
//! borders), 3x3 Sobel gradients, non-maximum suppression along the
//! gradient direction quantized to 0/45/90/135 degrees, and hysteresis with
//! 8-connectivity. `t_low` and `t_high` are fractions of the largest
//! smoothed gradient magnitude in the plane.
//!
//! Suppression keeps a pixel when it is strictly larger than its neighbor
//! against the gradient direction and not smaller than the one along it.
//! Magnitudes within a relative `1e-9` of each other count as equal, so a
//! symmetric ridge of two equal maxima keeps exactly one pixel regardless
//! of rounding.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dwt::SubbandSet;
use crate::error::{Error, Result};
use crate::plane::Plane;

const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CannyConfig {
    pub sigma: f64,
    pub t_low: f64,
    pub t_high: f64,
}

impl Default for CannyConfig {
    fn default() -> Self {
        CannyConfig {
            sigma: 1.0,
            t_low: 0.1,
            t_high: 0.3,
        }
    }
}

impl CannyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("canny.sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.t_low >= 0.0 && self.t_low < self.t_high && self.t_high.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "canny thresholds must satisfy 0 <= t_low < t_high, got {} / {}",
                self.t_low, self.t_high
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
    pub grad_mag: Plane,
    /// Pixels that passed suppression and the high threshold.
    pub strong_seeds: usize,
}

impl EdgeMap {
    pub fn is_edge(&self, r: usize, c: usize) -> bool {
        self.mask[r * self.width + c]
    }

    pub fn edge_count(&self) -> usize {
        self.mask.iter().filter(|&&e| e).count()
    }

    pub fn density(&self) -> f64 {
        self.edge_count() as f64 / self.mask.len() as f64
    }

    /// Mean smoothed gradient magnitude over edge pixels, 0 without edges.
    pub fn mean_edge_magnitude(&self) -> f64 {
        let (sum, n) = self
            .mask
            .iter()
            .zip(self.grad_mag.as_slice())
            .filter(|(e, _)| **e)
            .fold((0.0, 0usize), |(s, n), (_, m)| (s + m, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

fn gaussian_blur(p: &Plane, sigma: f64) -> Plane {
    let k = gaussian_kernel(sigma);
    let radius = (k.len() / 2) as isize;
    let (w, h) = p.dims();
    let mut tmp = Plane::zeros(w, h);
    for r in 0..h {
        let src = p.row(r);
        for c in 0..w {
            let mut acc = 0.0;
            for (t, kv) in k.iter().enumerate() {
                acc += kv * src[clamp_index(c as isize + t as isize - radius, w)];
            }
            tmp.set(r, c, acc);
        }
    }
    let mut out = Plane::zeros(w, h);
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (t, kv) in k.iter().enumerate() {
                acc += kv * tmp.get(clamp_index(r as isize + t as isize - radius, h), c);
            }
            out.set(r, c, acc);
        }
    }
    out
}

/// Sobel `(gx, gy)` with replicated borders; `gx` grows to the right,
/// `gy` downwards.
fn sobel(p: &Plane) -> (Plane, Plane) {
    let (w, h) = p.dims();
    let at = |r: isize, c: isize| p.get(clamp_index(r, h), clamp_index(c, w));
    let mut gx = Plane::zeros(w, h);
    let mut gy = Plane::zeros(w, h);
    for r in 0..h as isize {
        for c in 0..w as isize {
            let x = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
            let y = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
            gx.set(r as usize, c as usize, x);
            gy.set(r as usize, c as usize, y);
        }
    }
    (gx, gy)
}

/// `(dy, dx)` step along the gradient, quantized to four directions.
#[inline]
pub fn direction_step(gx: f64, gy: f64) -> (isize, isize) {
    let mut deg = gy.atan2(gx).to_degrees();
    if deg < 0.0 {
        deg += 180.0;
    }
    if !(22.5..157.5).contains(&deg) {
        (0, 1)
    } else if deg < 67.5 {
        (1, 1)
    } else if deg < 112.5 {
        (1, 0)
    } else {
        (1, -1)
    }
}

/// `a` is larger than `b` beyond the tie tolerance.
#[inline]
fn clearly_greater(a: f64, b: f64) -> bool {
    a - b > TIE_EPS * a.abs().max(b.abs())
}

pub fn canny(plane: &Plane, cfg: &CannyConfig) -> Result<EdgeMap> {
    let (w, h) = plane.dims();
    if w < 3 || h < 3 {
        return Err(Error::PlaneTooSmall { width: w, height: h });
    }
    cfg.validate()?;

    let smoothed = gaussian_blur(plane, cfg.sigma);
    let (gx, gy) = sobel(&smoothed);
    let mag = Plane::from_fn(w, h, |r, c| gx.get(r, c).hypot(gy.get(r, c)));
    let max = mag.as_slice().iter().copied().fold(0.0, f64::max);

    let mut mask = vec![false; w * h];
    if max == 0.0 {
        return Ok(EdgeMap {
            width: w,
            height: h,
            mask,
            grad_mag: mag,
            strong_seeds: 0,
        });
    }

    let neighbor = |r: usize, c: usize, dy: isize, dx: isize| -> f64 {
        let (rr, cc) = (r as isize + dy, c as isize + dx);
        if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
            0.0
        } else {
            mag.get(rr as usize, cc as usize)
        }
    };
    let mut thin = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let m = mag.get(r, c);
            let (dy, dx) = direction_step(gx.get(r, c), gy.get(r, c));
            let before = neighbor(r, c, -dy, -dx);
            let after = neighbor(r, c, dy, dx);
            if clearly_greater(m, before) && !clearly_greater(after, m) {
                thin[r * w + c] = m;
            }
        }
    }

    let high = cfg.t_high * max;
    let low = cfg.t_low * max;
    let mut queue = VecDeque::new();
    for (k, &m) in thin.iter().enumerate() {
        if m > 0.0 && m >= high {
            mask[k] = true;
            queue.push_back(k);
        }
    }
    let strong_seeds = queue.len();
    while let Some(k) = queue.pop_front() {
        let (r, c) = ((k / w) as isize, (k % w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (rr, cc) = (r + dy, c + dx);
                if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                    continue;
                }
                let j = rr as usize * w + cc as usize;
                if !mask[j] && thin[j] > 0.0 && thin[j] >= low {
                    mask[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }

    Ok(EdgeMap {
        width: w,
        height: h,
        mask,
        grad_mag: mag,
        strong_seeds,
    })
}

/// Eight values: `[edge density, mean edge magnitude]` for `LL, LH, HL, HH`.
pub fn edge_features(bands: &SubbandSet, cfg: &CannyConfig) -> Result<[f64; 8]> {
    let mut out = [0.0; 8];
    for (k, plane) in bands.planes().into_iter().enumerate() {
        let edges = canny(plane, cfg)?;
        out[2 * k] = edges.density();
        out[2 * k + 1] = edges.mean_edge_magnitude();
    }
    Ok(out)
}
