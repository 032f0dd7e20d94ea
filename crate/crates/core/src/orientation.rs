//! Directional features of the approximation band.
//!
//! The gradient of `LL` is read off the detail bands of the same level:
//! the horizontal component from `HL` and the vertical one from `LH`
//! (swappable through [`OrientationConfig::swap_axes`]). From it we derive
//!
//! * a per-pixel coherence map, the gradient-weighted mean of
//!   `cos(theta_center - theta_neighbor)` over a centered 5x5 window that
//!   shrinks at the borders, and
//! * a dominant orientation per non-overlapping 8x8 block from the
//!   double-angle average `0.5 * atan2(sum d^2 sin 2t, sum d^2 cos 2t) + pi/2`,
//!   where `d` is coherence and `t` the gradient angle. Partial blocks at the
//!   right and bottom edges are dropped.
//!
//! Both maps are then summarized by their GLCM statistics.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::dwt::SubbandSet;
use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::texture::{quantize, texture_of, GlcmConfig};

pub const COHERENCE_WINDOW: usize = 5;
pub const ORIENTATION_BLOCK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OrientationConfig {
    /// Take the horizontal gradient from `LH` and the vertical from `HL`.
    pub swap_axes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub gx: Plane,
    pub gy: Plane,
    pub magnitude: Plane,
    pub angle: Plane,
}

/// Gradient angle `atan(gx / gy)` folded into `(-pi/2, pi/2]`, defined as 0
/// where both components vanish.
#[inline]
pub fn gradient_angle(gx: f64, gy: f64) -> f64 {
    if gx == 0.0 && gy == 0.0 {
        return 0.0;
    }
    let a = gx.atan2(gy);
    if a > FRAC_PI_2 {
        a - PI
    } else if a <= -FRAC_PI_2 {
        a + PI
    } else {
        a
    }
}

impl GradientField {
    pub fn from_components(gx: Plane, gy: Plane) -> Result<Self> {
        if gx.dims() != gy.dims() {
            return Err(Error::DimensionMismatch("gradient components differ in size".into()));
        }
        let (w, h) = gx.dims();
        let mut magnitude = Plane::zeros(w, h);
        let mut angle = Plane::zeros(w, h);
        for (k, (x, y)) in gx.as_slice().iter().zip(gy.as_slice()).enumerate() {
            magnitude.as_mut_slice()[k] = x.abs() + y.abs();
            angle.as_mut_slice()[k] = gradient_angle(*x, *y);
        }
        Ok(GradientField {
            gx,
            gy,
            magnitude,
            angle,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.gx.dims()
    }
}

pub fn gradient_from_subbands(bands: &SubbandSet, cfg: &OrientationConfig) -> GradientField {
    let (gx, gy) = if cfg.swap_axes {
        (bands.lh.clone(), bands.hl.clone())
    } else {
        (bands.hl.clone(), bands.lh.clone())
    };
    GradientField::from_components(gx, gy).expect("sub bands share dimensions")
}

/// Sum over a `(2 * radius + 1)`-wide window along rows, then columns,
/// clipped at the borders.
fn box_sum(p: &Plane, radius: usize) -> Plane {
    let (w, h) = p.dims();
    let mut rows = Plane::zeros(w, h);
    for r in 0..h {
        let src = p.row(r);
        let dst = rows.row_mut(r);
        for c in 0..w {
            let lo = c.saturating_sub(radius);
            let hi = (c + radius).min(w - 1);
            dst[c] = src[lo..=hi].iter().sum();
        }
    }
    let mut out = Plane::zeros(w, h);
    for r in 0..h {
        let lo = r.saturating_sub(radius);
        let hi = (r + radius).min(h - 1);
        for c in 0..w {
            out.set(r, c, (lo..=hi).map(|k| rows.get(k, c)).sum());
        }
    }
    out
}

/// Per-pixel coherence over a centered `window x window` neighborhood.
///
/// Uses `cos(a - b) = cos a cos b + sin a sin b` so each window needs only
/// three box sums. Pixels whose window carries no gradient get 0.
pub fn coherence(field: &GradientField, window: usize) -> Plane {
    let (w, h) = field.dims();
    let radius = window / 2;
    let mag = &field.magnitude;
    let wc = Plane::from_fn(w, h, |r, c| mag.get(r, c) * field.angle.get(r, c).cos());
    let ws = Plane::from_fn(w, h, |r, c| mag.get(r, c) * field.angle.get(r, c).sin());
    let (sum_c, sum_s, sum_g) = (box_sum(&wc, radius), box_sum(&ws, radius), box_sum(mag, radius));
    Plane::from_fn(w, h, |r, c| {
        let g = sum_g.get(r, c);
        if g == 0.0 {
            return 0.0;
        }
        let t = field.angle.get(r, c);
        ((t.cos() * sum_c.get(r, c) + t.sin() * sum_s.get(r, c)) / g).clamp(-1.0, 1.0)
    })
}

/// Dominant orientation per non-overlapping `block x block` tile, in `[0, pi]`.
pub fn dominant_orientation(field: &GradientField, coh: &Plane, block: usize) -> Result<Plane> {
    if field.dims() != coh.dims() {
        return Err(Error::DimensionMismatch("coherence map and gradient field differ in size".into()));
    }
    let (w, h) = field.dims();
    let (bw, bh) = (w / block, h / block);
    let mut num = Plane::zeros(bw, bh);
    let mut den = Plane::zeros(bw, bh);
    for r in 0..bh * block {
        for c in 0..bw * block {
            let d2 = coh.get(r, c).powi(2);
            let t2 = 2.0 * field.angle.get(r, c);
            num[(r / block, c / block)] += d2 * t2.sin();
            den[(r / block, c / block)] += d2 * t2.cos();
        }
    }
    Ok(Plane::from_fn(bw, bh, |r, c| block_orientation(num.get(r, c), den.get(r, c))))
}

#[inline]
pub fn block_orientation(num: f64, den: f64) -> f64 {
    if num == 0.0 && den == 0.0 {
        return FRAC_PI_2;
    }
    (0.5 * num.atan2(den) + FRAC_PI_2).clamp(0.0, PI)
}

/// Eight values: coherence `[corr, contrast, homog, energy]` followed by the
/// same four for the orientation map.
pub fn directional_features(bands: &SubbandSet, glcm: &GlcmConfig, cfg: &OrientationConfig) -> Result<[f64; 8]> {
    let (w, h) = bands.dims();
    if w < ORIENTATION_BLOCK || h < ORIENTATION_BLOCK {
        return Err(Error::BandTooSmall {
            width: w,
            height: h,
            min: ORIENTATION_BLOCK,
        });
    }
    let field = gradient_from_subbands(bands, cfg);
    let coh = coherence(&field, COHERENCE_WINDOW);
    let theta = dominant_orientation(&field, &coh, ORIENTATION_BLOCK)?;

    let coh_tex = texture_of(&quantize(&coh, glcm.levels, (-1.0, 1.0))?, glcm)?;
    let theta_tex = texture_of(&quantize(&theta, glcm.levels, (0.0, PI))?, glcm)?;
    let mut out = [0.0; 8];
    out[..4].copy_from_slice(&coh_tex.to_vector());
    out[4..].copy_from_slice(&theta_tex.to_vector());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn field(w: usize, h: usize, gx: f64, gy: f64) -> GradientField {
        GradientField::from_components(Plane::filled(w, h, gx), Plane::filled(w, h, gy)).unwrap()
    }

    #[test]
    fn magnitude_and_angle() {
        let f = field(1, 1, 3.0, 4.0);
        assert_eq!(f.magnitude.get(0, 0), 7.0);
        assert!((gradient_angle(1.0, 1.0) - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(gradient_angle(0.0, 0.0), 0.0);
        assert_eq!(field(1, 1, 0.0, 0.0).magnitude.get(0, 0), 0.0);
    }

    #[test]
    fn angle_fold_agrees_with_single_argument_arctan() {
        for &(gx, gy) in &[(1.0, 2.0), (-1.0, 2.0), (1.0, -2.0), (-3.0, -0.5)] {
            let a: f64 = gradient_angle(gx, gy);
            assert!((a - (gx / gy).atan()).abs() < 1e-15);
        }
        assert_eq!(gradient_angle(1.0, 0.0), FRAC_PI_2);
        assert_eq!(gradient_angle(-1.0, 0.0), FRAC_PI_2);
    }

    #[test]
    fn uniform_field_is_fully_coherent() {
        let coh = coherence(&field(9, 7, 2.0, -1.0), 5);
        assert!(coh.as_slice().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn zero_field_has_zero_coherence() {
        let coh = coherence(&field(6, 6, 0.0, 0.0), 5);
        assert!(coh.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn horizontal_angles_give_half_pi() {
        let f = field(16, 8, 0.0, 1.0);
        let coh = Plane::filled(16, 8, 0.7);
        let theta = dominant_orientation(&f, &coh, 8).unwrap();
        assert_eq!(theta.dims(), (2, 1));
        assert!(theta.as_slice().iter().all(|v| (v - FRAC_PI_2).abs() < 1e-15));
    }

    #[test]
    fn diagonal_angles_give_three_quarter_pi() {
        let f = field(8, 8, 1.0, 1.0);
        let theta = dominant_orientation(&f, &Plane::filled(8, 8, 1.0), 8).unwrap();
        assert!((theta.get(0, 0) - 3.0 * FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn empty_blocks_default_to_half_pi() {
        let f = field(8, 8, 0.0, 0.0);
        let theta = dominant_orientation(&f, &Plane::zeros(8, 8), 8).unwrap();
        assert_eq!(theta.get(0, 0), FRAC_PI_2);
        assert_eq!(block_orientation(0.0, -0.0), FRAC_PI_2);
        assert_eq!(block_orientation(-0.0, 0.0), FRAC_PI_2);
    }

    #[test]
    fn partial_blocks_are_dropped() {
        let f = field(17, 23, 1.0, 0.0);
        let theta = dominant_orientation(&f, &Plane::filled(17, 23, 1.0), 8).unwrap();
        assert_eq!(theta.dims(), (2, 2));
    }

    #[test]
    fn constant_band_features() {
        let mut bands = SubbandSet::zeros(1, 16, 16);
        bands.ll = Plane::filled(16, 16, 100.0);
        let f = directional_features(&bands, &GlcmConfig::default(), &OrientationConfig::default()).unwrap();
        assert_eq!(f.len(), 8);
        assert_eq!(&f[..4], &[0.0, 0.0, 1.0, 1.0]);
        // All blocks are pi/2, a constant orientation map.
        assert_eq!(&f[4..], &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn small_band_is_rejected() {
        let bands = SubbandSet::zeros(3, 7, 20);
        assert!(matches!(
            directional_features(&bands, &GlcmConfig::default(), &OrientationConfig::default()),
            Err(Error::BandTooSmall { .. })
        ));
    }

    #[test]
    fn swap_axes_exchanges_components() {
        let mut bands = SubbandSet::zeros(1, 2, 2);
        bands.hl = Plane::filled(2, 2, 1.0);
        let f = gradient_from_subbands(&bands, &OrientationConfig::default());
        assert_eq!(f.gx.get(0, 0), 1.0);
        let f = gradient_from_subbands(&bands, &OrientationConfig { swap_axes: true });
        assert_eq!(f.gy.get(0, 0), 1.0);
    }
}
