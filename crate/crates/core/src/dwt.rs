//! Separable 2-D Daubechies wavelet transform.
//!
//! One analysis step filters every row with the low/high-pass pair and
//! downsamples by two, then does the same down every column of both
//! results. Sub bands are named by the filter applied along rows first and
//! along columns second:
//!
//! * `LL`: low/low, the approximation.
//! * `LH`: low along rows, high along columns. Responds to variation in the
//!   vertical direction (vertical detail).
//! * `HL`: high along rows, low along columns (horizontal detail).
//! * `HH`: high/high, diagonal detail.
//!
//! Each output plane has `ceil(n / 2)` samples per axis. Odd-length signals
//! are first padded by repeating the last sample. Samples outside the
//! (padded) signal come from half-sample symmetric or periodic extension.
//!
//! Both extension modes give a square, invertible analysis operator on the
//! padded length, so [`idwt2_single`] reconstructs exactly in either mode.
//! Periodic extension additionally makes the operator orthogonal, which is
//! what the energy-preservation property relies on.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::{GrayImage, Plane};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

// Analysis low-pass coefficients, normalized so that the sum of squares is 1
// (Daubechies, "Ten Lectures on Wavelets", table 6.1; same values as
// PyWavelets `rec_lo`).
const DB1: [f64; 2] = [1.0 / SQRT_2, 1.0 / SQRT_2];
const DB4: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

fn db2() -> [f64; 4] {
    let s3 = 3f64.sqrt();
    let d = 4.0 * SQRT_2;
    [(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Wavelet {
    /// Haar.
    Db1,
    /// 4-tap Daubechies.
    #[default]
    Db2,
    /// 8-tap Daubechies.
    Db4,
}

impl Wavelet {
    pub fn id(self) -> &'static str {
        match self {
            Wavelet::Db1 => "db1",
            Wavelet::Db2 => "db2",
            Wavelet::Db4 => "db4",
        }
    }

    pub fn filters(self) -> FilterPair {
        let lo: Vec<f64> = match self {
            Wavelet::Db1 => DB1.to_vec(),
            Wavelet::Db2 => db2().to_vec(),
            Wavelet::Db4 => DB4.to_vec(),
        };
        FilterPair::from_lowpass(lo)
    }
}

impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "db1" | "haar" => Ok(Wavelet::Db1),
            "db2" => Ok(Wavelet::Db2),
            "db4" => Ok(Wavelet::Db4),
            other => Err(Error::InvalidConfig(format!("unknown wavelet {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Extension {
    #[default]
    Symmetric,
    Periodic,
}

/// Orthogonal analysis filters; `hi[t] = (-1)^t lo[L-1-t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl FilterPair {
    pub fn from_lowpass(lo: Vec<f64>) -> Self {
        let n = lo.len();
        let hi = (0..n)
            .map(|t| if t % 2 == 0 { lo[n - 1 - t] } else { -lo[n - 1 - t] })
            .collect();
        FilterPair { lo, hi }
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    /// Offset that roughly centers the filter on each output pair.
    fn shift(&self) -> isize {
        (self.len() / 2) as isize - 1
    }
}

/// Maps a possibly out-of-range index onto `[0, n)`.
fn extend_index(i: isize, n: usize, ext: Extension) -> usize {
    let n = n as isize;
    match ext {
        Extension::Periodic => i.rem_euclid(n) as usize,
        Extension::Symmetric => {
            // Half-sample symmetric: ... x1 x0 | x0 x1 ... x(n-1) | x(n-1) ...
            let period = 2 * n;
            let j = i.rem_euclid(period);
            (if j < n { j } else { period - 1 - j }) as usize
        }
    }
}

/// Single-level 1-D analysis. `lo_out`/`hi_out` must hold `ceil(n/2)` values.
fn analyze_1d(x: &[f64], f: &FilterPair, ext: Extension, scratch: &mut Vec<f64>, lo_out: &mut [f64], hi_out: &mut [f64]) {
    let n = x.len();
    let m = n + n % 2;
    let half = m / 2;
    let taps = f.len();
    let s = f.shift();

    // scratch[j] holds the extended, padded signal at index j - s.
    scratch.clear();
    scratch.extend((0..(m + taps)).map(|j| {
        let k = extend_index(j as isize - s, m, ext);
        x[k.min(n - 1)]
    }));
    for k in 0..half {
        let window = &scratch[2 * k..2 * k + taps];
        let mut a = 0.0;
        let mut d = 0.0;
        for t in 0..taps {
            a += f.lo[t] * window[t];
            d += f.hi[t] * window[t];
        }
        lo_out[k] = a;
        hi_out[k] = d;
    }
}

/// Dense analysis operator on a padded length `m`: rows `0..m/2` produce
/// low-pass coefficients, rows `m/2..m` the high-pass ones.
fn analysis_matrix(m: usize, f: &FilterPair, ext: Extension) -> DMatrix<f64> {
    let half = m / 2;
    let s = f.shift();
    let mut w = DMatrix::zeros(m, m);
    for k in 0..half {
        for t in 0..f.len() {
            let col = extend_index(2 * k as isize + t as isize - s, m, ext);
            w[(k, col)] += f.lo[t];
            w[(half + k, col)] += f.hi[t];
        }
    }
    w
}

fn synthesis_matrix(m: usize, f: &FilterPair, ext: Extension) -> Result<DMatrix<f64>> {
    analysis_matrix(m, f, ext)
        .try_inverse()
        .ok_or_else(|| Error::DimensionMismatch(format!("analysis operator of length {m} is singular")))
}

/// Inverse of [`analyze_1d`] on a padded length `m = 2 * lo.len()`,
/// truncated to `out.len()` samples.
fn synthesize_1d(lo: &[f64], hi: &[f64], synth: &DMatrix<f64>, out: &mut [f64]) {
    let half = lo.len();
    for (n, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..half {
            acc += synth[(n, k)] * lo[k] + synth[(n, half + k)] * hi[k];
        }
        *o = acc;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub level: u8,
    pub ll: Plane,
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
}

impl SubbandSet {
    /// `(width, height)` shared by all four planes.
    pub fn dims(&self) -> (usize, usize) {
        self.ll.dims()
    }

    /// Planes in the canonical `LL, LH, HL, HH` order.
    pub fn planes(&self) -> [&Plane; 4] {
        [&self.ll, &self.lh, &self.hl, &self.hh]
    }

    pub fn zeros(level: u8, width: usize, height: usize) -> Self {
        SubbandSet {
            level,
            ll: Plane::zeros(width, height),
            lh: Plane::zeros(width, height),
            hl: Plane::zeros(width, height),
            hh: Plane::zeros(width, height),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandPyramid {
    pub levels: Vec<SubbandSet>,
    pub original_size: (usize, usize),
    pub wavelet: Wavelet,
}

/// Output plane size for an input axis of length `n`.
pub fn half_len(n: usize) -> usize {
    n.div_ceil(2)
}

/// One level of the 2-D transform. The returned set has `level == 1`.
pub fn dwt2_single(image: &Plane, wavelet: Wavelet, ext: Extension) -> Result<SubbandSet> {
    if image.is_empty() {
        return Err(Error::EmptyInput);
    }
    let f = wavelet.filters();
    let (w, h) = image.dims();
    let (cw, ch) = (half_len(w), half_len(h));
    let mut scratch = Vec::new();

    // Rows: low/high along x.
    let mut row_lo = Plane::zeros(cw, h);
    let mut row_hi = Plane::zeros(cw, h);
    for r in 0..h {
        let (mut lo, mut hi) = (vec![0.0; cw], vec![0.0; cw]);
        analyze_1d(image.row(r), &f, ext, &mut scratch, &mut lo, &mut hi);
        row_lo.row_mut(r).copy_from_slice(&lo);
        row_hi.row_mut(r).copy_from_slice(&hi);
    }

    // Columns: low/high along y.
    let mut out = SubbandSet::zeros(1, cw, ch);
    let mut col = vec![0.0; h];
    let (mut lo, mut hi) = (vec![0.0; ch], vec![0.0; ch]);
    for c in 0..cw {
        for (src, low_dst, high_dst) in [
            (&row_lo, &mut out.ll, &mut out.lh),
            (&row_hi, &mut out.hl, &mut out.hh),
        ] {
            for (r, v) in col.iter_mut().enumerate() {
                *v = src.get(r, c);
            }
            analyze_1d(&col, &f, ext, &mut scratch, &mut lo, &mut hi);
            for r in 0..ch {
                low_dst.set(r, c, lo[r]);
                high_dst.set(r, c, hi[r]);
            }
        }
    }
    Ok(out)
}

/// Exact inverse of [`dwt2_single`] for the same wavelet and extension.
/// `target_size` is `(width, height)` of the original matrix.
pub fn idwt2_single(
    bands: &SubbandSet,
    wavelet: Wavelet,
    ext: Extension,
    target_size: (usize, usize),
) -> Result<Plane> {
    let (cw, ch) = bands.dims();
    if bands.planes().iter().any(|p| p.dims() != (cw, ch)) {
        return Err(Error::DimensionMismatch("sub band planes differ in size".into()));
    }
    let (tw, th) = target_size;
    if cw == 0 || ch == 0 || half_len(tw) != cw || half_len(th) != ch {
        return Err(Error::DimensionMismatch(format!(
            "target {tw}x{th} is inconsistent with {cw}x{ch} sub bands"
        )));
    }
    let f = wavelet.filters();
    let synth_cols = synthesis_matrix(2 * ch, &f, ext)?;
    let synth_rows = synthesis_matrix(2 * cw, &f, ext)?;

    let mut row_lo = Plane::zeros(cw, th);
    let mut row_hi = Plane::zeros(cw, th);
    let mut out_col = vec![0.0; th];
    for c in 0..cw {
        for (low, high, dst) in [
            (&bands.ll, &bands.lh, &mut row_lo),
            (&bands.hl, &bands.hh, &mut row_hi),
        ] {
            synthesize_1d(&low.column(c), &high.column(c), &synth_cols, &mut out_col);
            for (r, v) in out_col.iter().enumerate() {
                dst.set(r, c, *v);
            }
        }
    }

    let mut out = Plane::zeros(tw, th);
    for r in 0..th {
        synthesize_1d(row_lo.row(r), row_hi.row(r), &synth_rows, out.row_mut(r));
    }
    Ok(out)
}

/// Smallest image side accepted by [`decompose3`].
pub const MIN_IMAGE_SIDE: usize = 16;

/// Three-level decomposition; level `k + 1` transforms level `k`'s `LL`.
pub fn decompose3(image: &GrayImage, wavelet: Wavelet, ext: Extension) -> Result<SubbandPyramid> {
    let (w, h) = (image.width(), image.height());
    if w < MIN_IMAGE_SIDE || h < MIN_IMAGE_SIDE {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: MIN_IMAGE_SIDE,
        });
    }
    let mut levels: Vec<SubbandSet> = Vec::with_capacity(3);
    for level in 1..=3u8 {
        let source = levels.last().map_or(image.plane(), |prev| &prev.ll);
        let mut set = dwt2_single(source, wavelet, ext)?;
        set.level = level;
        levels.push(set);
    }
    Ok(SubbandPyramid {
        levels,
        original_size: (w, h),
        wavelet,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_are_orthonormal() {
        for w in [Wavelet::Db1, Wavelet::Db2, Wavelet::Db4] {
            let f = w.filters();
            let n = f.len();
            for shift in (0..n).step_by(2) {
                let dot: f64 = (0..n - shift).map(|t| f.lo[t] * f.lo[t + shift]).sum();
                let expect = if shift == 0 { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12, "{w} shift {shift}: {dot}");
            }
            assert!((f.lo.iter().sum::<f64>() - SQRT_2).abs() < 1e-12);
            assert!(f.hi.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn constant_haar_has_no_detail() {
        let c = 3.5;
        let bands = dwt2_single(&Plane::filled(8, 8, c), Wavelet::Db1, Extension::Symmetric).unwrap();
        assert!(bands.ll.as_slice().iter().all(|v| (v - 2.0 * c).abs() < 1e-12));
        for p in [&bands.lh, &bands.hl, &bands.hh] {
            assert!(p.as_slice().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn constant_db2_symmetric_has_no_detail() {
        let bands = dwt2_single(&Plane::filled(9, 6, 10.0), Wavelet::Db2, Extension::Symmetric).unwrap();
        assert_eq!(bands.dims(), (5, 3));
        assert!(bands.ll.as_slice().iter().all(|v| (v - 20.0).abs() < 1e-12));
        assert!(bands.hh.as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn single_pixel_is_degenerate_not_empty() {
        let bands = dwt2_single(&Plane::filled(1, 1, 5.0), Wavelet::Db2, Extension::Symmetric).unwrap();
        assert_eq!(bands.dims(), (1, 1));
        assert!((bands.ll.get(0, 0) - 10.0).abs() < 1e-12);
        for p in [&bands.lh, &bands.hl, &bands.hh] {
            assert!(p.get(0, 0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_input_is_rejected() {
        let err = dwt2_single(&Plane::zeros(0, 0), Wavelet::Db2, Extension::Symmetric).unwrap_err();
        assert!(matches!(err, Error::EmptyInput));
    }

    #[test]
    fn zero_bands_reconstruct_to_zero() {
        let bands = SubbandSet::zeros(1, 4, 3);
        let out = idwt2_single(&bands, Wavelet::Db2, Extension::Symmetric, (8, 5)).unwrap();
        assert_eq!(out.dims(), (8, 5));
        assert!(out.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn inconsistent_target_is_rejected() {
        let bands = SubbandSet::zeros(1, 4, 4);
        for target in [(10, 8), (8, 5), (6, 8)] {
            let err = idwt2_single(&bands, Wavelet::Db2, Extension::Symmetric, target).unwrap_err();
            assert!(matches!(err, Error::DimensionMismatch(_)), "{target:?}");
        }
    }

    #[test]
    fn odd_sizes_round_trip() {
        let x = Plane::from_fn(7, 5, |r, c| ((r * 7 + c) as f64).sin() * 40.0);
        for ext in [Extension::Symmetric, Extension::Periodic] {
            let bands = dwt2_single(&x, Wavelet::Db4, ext).unwrap();
            assert_eq!(bands.dims(), (4, 3));
            let back = idwt2_single(&bands, Wavelet::Db4, ext, (7, 5)).unwrap();
            assert!(back.max_abs_diff(&x) < 1e-9, "{ext:?}");
        }
    }

    #[test]
    fn pyramid_shapes() {
        let img = GrayImage::new(64, 64, vec![1.0; 64 * 64]).unwrap();
        let p = decompose3(&img, Wavelet::Db2, Extension::Symmetric).unwrap();
        let dims: Vec<_> = p.levels.iter().map(|l| l.dims()).collect();
        assert_eq!(dims, vec![(32, 32), (16, 16), (8, 8)]);
        assert_eq!(p.levels.iter().map(|l| l.level).collect::<Vec<_>>(), vec![1, 2, 3]);

        let img = GrayImage::new(300, 480, vec![0.0; 300 * 480]).unwrap();
        let p = decompose3(&img, Wavelet::Db2, Extension::Symmetric).unwrap();
        assert_eq!(p.levels[0].dims(), (150, 240));
        assert_eq!(p.levels[2].dims(), (38, 60));
    }

    #[test]
    fn level_two_decomposes_level_one_ll() {
        let img = GrayImage::new(32, 32, (0..1024).map(|i| (i % 251) as f64).collect()).unwrap();
        let p = decompose3(&img, Wavelet::Db2, Extension::Symmetric).unwrap();
        let direct = dwt2_single(&p.levels[0].ll, Wavelet::Db2, Extension::Symmetric).unwrap();
        assert_eq!(direct.ll, p.levels[1].ll);
        assert_eq!(direct.hh, p.levels[1].hh);
    }

    #[test]
    fn small_image_is_rejected() {
        let img = GrayImage::new(8, 8, vec![0.0; 64]).unwrap();
        assert!(matches!(
            decompose3(&img, Wavelet::Db2, Extension::Symmetric),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn wavelet_ids_parse() {
        for w in [Wavelet::Db1, Wavelet::Db2, Wavelet::Db4] {
            assert_eq!(w.id().parse::<Wavelet>().unwrap(), w);
        }
        assert!("db3".parse::<Wavelet>().is_err());
    }
}
