//! Slow, direct reference implementations of the fingerwave kernels.
//!
//! Nothing here depends on `fingerwave-core`. Every routine is written
//! straight from its defining formula, with no separability, box sums or
//! other shortcuts, so that tests can compare the optimized kernels against
//! an independent derivation. Matrices are `Vec<Vec<f64>>` in row-major
//! order (`m[row][col]`).

use std::f64::consts::{FRAC_PI_2, PI};

pub type Matrix = Vec<Vec<f64>>;

pub fn dims(m: &Matrix) -> (usize, usize) {
    (m.first().map_or(0, |r| r.len()), m.len())
}

// ---------------------------------------------------------------------------
// Wavelets

/// Daubechies analysis low-pass filters with 1, 2 and 4 vanishing moments.
pub fn daubechies_lowpass(order: usize) -> Vec<f64> {
    let r2 = 2f64.sqrt();
    match order {
        1 => vec![1.0 / r2, 1.0 / r2],
        2 => {
            let r3 = 3f64.sqrt();
            vec![(1.0 + r3) / (4.0 * r2), (3.0 + r3) / (4.0 * r2), (3.0 - r3) / (4.0 * r2), (1.0 - r3) / (4.0 * r2)]
        }
        4 => vec![
            0.230_377_813_308_855_23,
            0.714_846_570_552_541_5,
            0.630_880_767_929_590_4,
            -0.027_983_769_416_983_85,
            -0.187_034_811_718_881_14,
            0.030_841_381_835_986_965,
            0.032_883_011_666_982_945,
            -0.010_597_401_784_997_278,
        ],
        _ => panic!("no reference filter for db{order}"),
    }
}

/// Quadrature mirror of `lo`.
pub fn highpass_of(lo: &[f64]) -> Vec<f64> {
    let n = lo.len();
    (0..n).map(|t| (-1f64).powi(t as i32) * lo[n - 1 - t]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Symmetric,
    Periodic,
}

fn fold(i: i64, n: usize, b: Boundary) -> usize {
    let n = n as i64;
    match b {
        Boundary::Periodic => (((i % n) + n) % n) as usize,
        Boundary::Symmetric => {
            // Reflect about -1/2 and n - 1/2 until inside.
            let mut i = i;
            loop {
                if i < 0 {
                    i = -i - 1;
                } else if i >= n {
                    i = 2 * n - 1 - i;
                } else {
                    return i as usize;
                }
            }
        }
    }
}

/// Pads odd dimensions by repeating the last row / column.
pub fn pad_even(x: &Matrix) -> Matrix {
    let (w, h) = dims(x);
    let (pw, ph) = (w + w % 2, h + h % 2);
    (0..ph)
        .map(|r| (0..pw).map(|c| x[r.min(h - 1)][c.min(w - 1)]).collect())
        .collect()
}

/// One level of the 2-D transform by direct double summation:
///
/// `B[k][l] = sum_s sum_t fv[s] fh[t] X[2k + s - shift][2l + t - shift]`
///
/// with `fh` applied along rows (x) and `fv` down columns (y). Returns
/// `[LL, LH, HL, HH]` where the first letter names the row filter.
pub fn dwt2_direct(x: &Matrix, lo: &[f64], b: Boundary) -> [Matrix; 4] {
    let x = pad_even(x);
    let (w, h) = dims(&x);
    let hi = highpass_of(lo);
    let taps = lo.len();
    let shift = (taps / 2) as i64 - 1;
    let band = |fh: &[f64], fv: &[f64]| -> Matrix {
        (0..h / 2)
            .map(|k| {
                (0..w / 2)
                    .map(|l| {
                        let mut acc = 0.0;
                        for s in 0..taps {
                            for t in 0..taps {
                                let r = fold(2 * k as i64 + s as i64 - shift, h, b);
                                let c = fold(2 * l as i64 + t as i64 - shift, w, b);
                                acc += fv[s] * fh[t] * x[r][c];
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    };
    [band(lo, lo), band(lo, &hi), band(&hi, lo), band(&hi, &hi)]
}

pub fn energy(m: &Matrix) -> f64 {
    m.iter().flatten().map(|v| v * v).sum()
}

// ---------------------------------------------------------------------------
// Co-occurrence statistics

/// Bin of `v` among `levels` equal slices of `[lo, hi]`, clamped.
pub fn quantize_value(v: f64, levels: usize, lo: f64, hi: f64) -> usize {
    let v = v.max(lo).min(hi);
    let mut bin = 0;
    for k in 1..levels {
        if v >= lo + (hi - lo) * k as f64 / levels as f64 {
            bin = k;
        }
    }
    bin
}

/// Counts of `(q[a], q[b])` over every ordered pixel pair with
/// `b - a == (dy, dx)`, found by enumerating all pairs of positions.
pub fn glcm_counts(q: &[Vec<usize>], levels: usize, offset: (i64, i64), symmetric: bool) -> Vec<Vec<u64>> {
    let h = q.len();
    let w = q.first().map_or(0, |r| r.len());
    let mut counts = vec![vec![0u64; levels]; levels];
    for r1 in 0..h {
        for c1 in 0..w {
            for r2 in 0..h {
                for c2 in 0..w {
                    if (r2 as i64 - r1 as i64, c2 as i64 - c1 as i64) == offset {
                        counts[q[r1][c1]][q[r2][c2]] += 1;
                        if symmetric {
                            counts[q[r2][c2]][q[r1][c1]] += 1;
                        }
                    }
                }
            }
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Haralick {
    pub correlation: f64,
    pub contrast: f64,
    pub energy: f64,
    pub homogeneity: f64,
}

/// Textbook statistics of a count matrix, with gray levels numbered from 1.
/// Correlation is NaN when either marginal has zero spread.
pub fn haralick(counts: &[Vec<u64>]) -> Haralick {
    let l = counts.len();
    let total: u64 = counts.iter().flatten().sum();
    let p = |i: usize, j: usize| counts[i - 1][j - 1] as f64 / total as f64;
    let (mut mu_i, mut mu_j) = (0.0, 0.0);
    for i in 1..=l {
        for j in 1..=l {
            mu_i += i as f64 * p(i, j);
            mu_j += j as f64 * p(i, j);
        }
    }
    let (mut var_i, mut var_j) = (0.0, 0.0);
    for i in 1..=l {
        for j in 1..=l {
            var_i += (i as f64 - mu_i).powi(2) * p(i, j);
            var_j += (j as f64 - mu_j).powi(2) * p(i, j);
        }
    }
    let (mut cov, mut contrast, mut energy, mut homogeneity) = (0.0, 0.0, 0.0, 0.0);
    for i in 1..=l {
        for j in 1..=l {
            let d = i as f64 - j as f64;
            cov += (i as f64 - mu_i) * (j as f64 - mu_j) * p(i, j);
            contrast += d * d * p(i, j);
            energy += p(i, j).powi(2);
            homogeneity += p(i, j) / (1.0 + d.abs());
        }
    }
    let sd = (var_i * var_j).sqrt();
    Haralick {
        correlation: if sd == 0.0 { f64::NAN } else { cov / sd },
        contrast,
        energy,
        homogeneity,
    }
}

// ---------------------------------------------------------------------------
// Orientation

/// `atan(gx / gy)` with the vertical case mapped to `pi/2` and the empty
/// gradient to 0.
pub fn angle(gx: f64, gy: f64) -> f64 {
    if gy != 0.0 {
        (gx / gy).atan()
    } else if gx != 0.0 {
        FRAC_PI_2
    } else {
        0.0
    }
}

/// Coherence of every pixel: the `|gx| + |gy|` weighted mean of
/// `cos(theta_center - theta_neighbor)` over the in-bounds part of a
/// centered `window x window` neighborhood. Zero where the weights vanish.
pub fn coherence(gx: &Matrix, gy: &Matrix, window: usize) -> Matrix {
    let (w, h) = dims(gx);
    let r = (window / 2) as i64;
    let mut out = vec![vec![0.0; w]; h];
    for m in 0..h {
        for n in 0..w {
            let center = angle(gx[m][n], gy[m][n]);
            let (mut num, mut den) = (0.0, 0.0);
            for i in m as i64 - r..=m as i64 + r {
                for j in n as i64 - r..=n as i64 + r {
                    if i < 0 || j < 0 || i >= h as i64 || j >= w as i64 {
                        continue;
                    }
                    let (i, j) = (i as usize, j as usize);
                    let g = gx[i][j].abs() + gy[i][j].abs();
                    num += g * (center - angle(gx[i][j], gy[i][j])).cos();
                    den += g;
                }
            }
            out[m][n] = if den == 0.0 { 0.0 } else { num / den };
        }
    }
    out
}

/// Dominant orientation per complete `block x block` tile.
pub fn block_orientation(gx: &Matrix, gy: &Matrix, coh: &Matrix, block: usize) -> Matrix {
    let (w, h) = dims(gx);
    (0..h / block)
        .map(|br| {
            (0..w / block)
                .map(|bc| {
                    let (mut s, mut c) = (0.0, 0.0);
                    for r in br * block..(br + 1) * block {
                        for col in bc * block..(bc + 1) * block {
                            let t = angle(gx[r][col], gy[r][col]);
                            let d = coh[r][col];
                            s += d * d * (2.0 * t).sin();
                            c += d * d * (2.0 * t).cos();
                        }
                    }
                    if s == 0.0 && c == 0.0 {
                        FRAC_PI_2
                    } else {
                        0.5 * s.atan2(c) + FRAC_PI_2
                    }
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Row / column statistics

/// Two-pass population mean and variance.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mut mean = 0.0;
    for v in values {
        mean += v;
    }
    mean /= n;
    let mut var = 0.0;
    for v in values {
        var += (v - mean) * (v - mean);
    }
    (mean, var / n)
}

pub fn rows_mean_var(m: &Matrix) -> Vec<(f64, f64)> {
    m.iter().map(|r| mean_var(r)).collect()
}

pub fn cols_mean_var(m: &Matrix) -> Vec<(f64, f64)> {
    let (w, _) = dims(m);
    (0..w)
        .map(|c| mean_var(&m.iter().map(|r| r[c]).collect::<Vec<_>>()))
        .collect()
}

/// First index whose value no other value exceeds.
pub fn argmax_scan(values: &[f64]) -> usize {
    (0..values.len())
        .find(|&i| values.iter().all(|v| *v <= values[i]))
        .expect("non-empty input")
}

// ---------------------------------------------------------------------------
// Canny

pub const CANNY_TIE: f64 = 1e-9;

fn clamp(i: i64, n: usize) -> usize {
    i.max(0).min(n as i64 - 1) as usize
}

/// 2-D Gaussian of radius `ceil(3 sigma)` applied as one direct
/// convolution with replicated borders.
pub fn gaussian_2d(x: &Matrix, sigma: f64) -> Matrix {
    let (w, h) = dims(x);
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::new();
    let mut total = 0.0;
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let v = (-((dy * dy) as f64) / (2.0 * sigma * sigma)).exp() * (-((dx * dx) as f64) / (2.0 * sigma * sigma)).exp();
            kernel.push((dy, dx, v));
            total += v;
        }
    }
    (0..h)
        .map(|r| {
            (0..w)
                .map(|c| {
                    kernel
                        .iter()
                        .map(|(dy, dx, v)| v / total * x[clamp(r as i64 + dy, h)][clamp(c as i64 + dx, w)])
                        .sum()
                })
                .collect()
        })
        .collect()
}

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

pub fn sobel(x: &Matrix) -> (Matrix, Matrix) {
    let (w, h) = dims(x);
    let apply = |k: &[[f64; 3]; 3]| -> Matrix {
        (0..h)
            .map(|r| {
                (0..w)
                    .map(|c| {
                        let mut acc = 0.0;
                        for (i, row) in k.iter().enumerate() {
                            for (j, kv) in row.iter().enumerate() {
                                acc += kv * x[clamp(r as i64 + i as i64 - 1, h)][clamp(c as i64 + j as i64 - 1, w)];
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    };
    (apply(&SOBEL_X), apply(&SOBEL_Y))
}

/// Neighbor step along the gradient chosen from the slope `|gy| / |gx|`.
pub fn slope_step(gx: f64, gy: f64) -> (i64, i64) {
    let (ax, ay) = (gx.abs(), gy.abs());
    if ay < (PI / 8.0).tan() * ax || (ax == 0.0 && ay == 0.0) {
        (0, 1)
    } else if ay >= (3.0 * PI / 8.0).tan() * ax {
        (1, 0)
    } else if (gx > 0.0) == (gy > 0.0) {
        (1, 1)
    } else {
        (1, -1)
    }
}

fn clearly_above(a: f64, b: f64) -> bool {
    a - b > CANNY_TIE * a.abs().max(b.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CannyReference {
    pub mask: Vec<Vec<bool>>,
    pub magnitude: Matrix,
    pub strong: usize,
}

/// Canny with thresholds relative to the largest gradient magnitude.
/// Hysteresis grows the strong set by repeated full passes until nothing
/// changes.
pub fn canny(x: &Matrix, sigma: f64, t_low: f64, t_high: f64) -> CannyReference {
    let (w, h) = dims(x);
    let (gx, gy) = sobel(&gaussian_2d(x, sigma));
    let mag: Matrix = (0..h)
        .map(|r| (0..w).map(|c| (gx[r][c] * gx[r][c] + gy[r][c] * gy[r][c]).sqrt()).collect())
        .collect();
    let max = mag.iter().flatten().fold(0.0f64, |a, b| a.max(*b));
    let at = |r: i64, c: i64| {
        if r < 0 || c < 0 || r >= h as i64 || c >= w as i64 {
            0.0
        } else {
            mag[r as usize][c as usize]
        }
    };
    let mut kept = vec![vec![false; w]; h];
    for r in 0..h {
        for c in 0..w {
            let (dy, dx) = slope_step(gx[r][c], gy[r][c]);
            let m = mag[r][c];
            let behind = at(r as i64 - dy, c as i64 - dx);
            let ahead = at(r as i64 + dy, c as i64 + dx);
            kept[r][c] = clearly_above(m, behind) && !clearly_above(ahead, m);
        }
    }
    let mut mask = vec![vec![false; w]; h];
    let mut strong = 0;
    if max > 0.0 {
        for r in 0..h {
            for c in 0..w {
                if kept[r][c] && mag[r][c] >= t_high * max {
                    mask[r][c] = true;
                    strong += 1;
                }
            }
        }
        loop {
            let mut changed = false;
            for r in 0..h {
                for c in 0..w {
                    if mask[r][c] || !kept[r][c] || mag[r][c] < t_low * max {
                        continue;
                    }
                    let touches = (-1..=1).any(|dy| {
                        (-1..=1).any(|dx| {
                            let (rr, cc) = (r as i64 + dy, c as i64 + dx);
                            rr >= 0 && cc >= 0 && rr < h as i64 && cc < w as i64 && mask[rr as usize][cc as usize]
                        })
                    });
                    if touches {
                        mask[r][c] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
    CannyReference {
        mask,
        magnitude: mag,
        strong,
    }
}

// ---------------------------------------------------------------------------
// Rates

/// FAR and FRR (percent) at `t` straight from the trial lists.
pub fn rates_at(genuine: &[f64], impostor: &[f64], t: f64) -> (f64, f64) {
    let far = if impostor.is_empty() {
        0.0
    } else {
        100.0 * impostor.iter().filter(|d| **d <= t).count() as f64 / impostor.len() as f64
    };
    let frr = 100.0 * genuine.iter().filter(|d| **d > t).count() as f64 / genuine.len() as f64;
    (far, frr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_are_orthonormal() {
        for order in [1, 2, 4] {
            let lo = daubechies_lowpass(order);
            let hi = highpass_of(&lo);
            assert!((lo.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((lo.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-12);
            assert!(lo.iter().zip(&hi).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_fold() {
        let got: Vec<usize> = (-3..7).map(|i| fold(i, 4, Boundary::Symmetric)).collect();
        assert_eq!(got, vec![2, 1, 0, 0, 1, 2, 3, 3, 2, 1]);
    }

    #[test]
    fn haar_of_constant_is_pure_approximation() {
        let x = vec![vec![3.0; 4]; 4];
        let [ll, lh, hl, hh] = dwt2_direct(&x, &daubechies_lowpass(1), Boundary::Periodic);
        assert!(ll.iter().flatten().all(|v| (v - 6.0).abs() < 1e-12));
        for b in [lh, hl, hh] {
            assert!(b.iter().flatten().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn glcm_counts_horizontal_pairs() {
        let q = vec![vec![0, 1], vec![1, 1]];
        let c = glcm_counts(&q, 2, (0, 1), false);
        assert_eq!(c, vec![vec![0, 1], vec![0, 1]]);
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax_scan(&[1.0, 3.0, 3.0, 2.0]), 1);
    }
}
