#![allow(dead_code)]

use fingerwave_core::Plane;
use fingerwave_oracles::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_plane(rng: &mut ChaCha8Rng, w: usize, h: usize, lo: f64, hi: f64) -> Plane {
    Plane::from_fn(w, h, |_, _| rng.random_range(lo..hi))
}

pub fn to_matrix(p: &Plane) -> Matrix {
    (0..p.height()).map(|r| p.row(r).to_vec()).collect()
}

pub fn max_diff(p: &Plane, m: &Matrix) -> f64 {
    assert_eq!((p.width(), p.height()), fingerwave_oracles::dims(m), "shape differs");
    let mut worst = 0.0f64;
    for (r, row) in m.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            worst = worst.max((p.get(r, c) - v).abs());
        }
    }
    worst
}
