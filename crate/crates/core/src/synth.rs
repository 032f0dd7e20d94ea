//! Synthetic ridge-pattern fingerprints for tests and demos.
//!
//! Every finger owns a block-wise constant orientation field (8x8 blocks)
//! and a ridge frequency, both drawn from a generator seeded by
//! `(seed, finger)`. An impression renders
//! `sin(2 pi f (x cos t + y sin t))` per block, scaled to `[0, 255]`, after
//! translating the finger by up to `max_shift` pixels and adding Gaussian
//! noise drawn from `(seed, finger, sample)`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{write_pgm, NamingPattern};
use crate::plane::GrayImage;

pub const SYNTH_BLOCK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationField {
    /// One ridge angle (radians) for the whole image.
    Global(f64),
    /// Explicit angles per 8x8 block, row-major; indices are clamped.
    Blocks { cols: usize, rows: usize, angles: Vec<f64> },
    /// A smooth random field with one loop-like singularity, per finger.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    /// Base ridge frequency in cycles per pixel; each finger varies it by
    /// up to 15%.
    pub ridge_frequency: f64,
    pub orientation_field: OrientationField,
    pub noise_sigma: f64,
    /// Largest translation between impressions, in pixels.
    pub max_shift: i64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            width: 192,
            height: 192,
            ridge_frequency: 0.1,
            orientation_field: OrientationField::Random,
            noise_sigma: 12.0,
            max_shift: 3,
            seed: 1,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!("image size {}x{} must be positive", self.width, self.height));
        }
        if !(self.ridge_frequency > 0.0 && self.ridge_frequency < 0.5) {
            return bad(format!("ridge frequency {} outside (0, 0.5)", self.ridge_frequency));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma {} must be >= 0", self.noise_sigma));
        }
        if self.max_shift < 0 {
            return bad("max shift must be >= 0".into());
        }
        if let OrientationField::Blocks { cols, rows, angles } = &self.orientation_field {
            if *cols == 0 || *rows == 0 || angles.len() != cols * rows {
                return bad("block orientation map does not match its grid".into());
            }
        }
        Ok(())
    }
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, finger: u32, sample: Option<u32>) -> ChaCha8Rng {
    let mut s = mix(seed ^ mix(u64::from(finger)));
    if let Some(sample) = sample {
        s = mix(s ^ mix(u64::from(sample).wrapping_add(0xA5A5)));
    }
    ChaCha8Rng::seed_from_u64(s)
}

/// Identity of one synthetic finger.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerModel {
    pub frequency: f64,
    field: FieldModel,
}

#[derive(Debug, Clone, PartialEq)]
enum FieldModel {
    Fixed(OrientationField),
    Random {
        base: f64,
        core: (f64, f64),
        waves: [(f64, f64, f64, f64); 2],
    },
}

impl FingerModel {
    pub fn new(params: &SynthParams, finger: u32) -> Self {
        let mut rng = stream(params.seed, finger, None);
        let frequency = (params.ridge_frequency * rng.random_range(0.85..1.15)).min(0.49);
        let field = match &params.orientation_field {
            OrientationField::Random => FieldModel::Random {
                base: rng.random_range(0.0..PI),
                core: (
                    rng.random_range(0.3..0.7) * params.width as f64,
                    rng.random_range(0.3..0.7) * params.height as f64,
                ),
                waves: [
                    (
                        rng.random_range(0.2..0.6),
                        rng.random_range(0.5..2.0),
                        rng.random_range(0.0..2.0 * PI),
                        rng.random_range(0.0..PI),
                    ),
                    (
                        rng.random_range(0.2..0.6),
                        rng.random_range(0.5..2.0),
                        rng.random_range(0.0..2.0 * PI),
                        rng.random_range(0.0..PI),
                    ),
                ],
            },
            fixed => FieldModel::Fixed(fixed.clone()),
        };
        FingerModel { frequency, field }
    }

    /// Ridge angle of the block containing finger coordinates `(x, y)`.
    pub fn block_angle(&self, params: &SynthParams, x: f64, y: f64) -> f64 {
        let bs = SYNTH_BLOCK as f64;
        let (bx, by) = ((x / bs).floor(), (y / bs).floor());
        match &self.field {
            FieldModel::Fixed(OrientationField::Global(a)) => *a,
            FieldModel::Fixed(OrientationField::Blocks { cols, rows, angles }) => {
                let c = (bx.max(0.0) as usize).min(cols - 1);
                let r = (by.max(0.0) as usize).min(rows - 1);
                angles[r * cols + c]
            }
            FieldModel::Fixed(OrientationField::Random) => unreachable!("random fields are resolved per finger"),
            FieldModel::Random { base, core, waves } => {
                let (cx, cy) = ((bx + 0.5) * bs, (by + 0.5) * bs);
                let (w, h) = (params.width as f64, params.height as f64);
                let mut a = base + 0.5 * (cy - core.1).atan2(cx - core.0);
                for (amp, k, phase, dir) in waves {
                    let u = (cx / w) * dir.cos() + (cy / h) * dir.sin();
                    a += amp * (2.0 * PI * k * u + phase).sin();
                }
                a
            }
        }
    }
}

/// Renders impression `sample` of `finger`.
pub fn render_sample(params: &SynthParams, finger: u32, sample: u32) -> Result<GrayImage> {
    params.validate()?;
    let model = FingerModel::new(params, finger);
    let mut rng = stream(params.seed, finger, Some(sample));
    let (dx, dy) = if params.max_shift > 0 {
        (
            rng.random_range(-params.max_shift..=params.max_shift) as f64,
            rng.random_range(-params.max_shift..=params.max_shift) as f64,
        )
    } else {
        (0.0, 0.0)
    };
    let noise = (params.noise_sigma > 0.0).then(|| Normal::new(0.0, params.noise_sigma).expect("sigma > 0"));
    let (w, h) = (params.width, params.height);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = (x as f64 + dx, y as f64 + dy);
            let t = model.block_angle(params, sx, sy);
            let ridge = (2.0 * PI * model.frequency * (sx * t.cos() + sy * t.sin())).sin();
            let mut v = 127.5 + 127.5 * ridge;
            if let Some(n) = &noise {
                v += n.sample(&mut rng);
            }
            data.push(v.clamp(0.0, 255.0).round());
        }
    }
    GrayImage::new(w, h, data)
}

/// Writes `samples` impressions for each finger id as binary PGM files
/// named by `naming`. Returns the paths in `(finger, sample)` order.
pub fn write_corpus(
    out_dir: &Path,
    params: &SynthParams,
    fingers: impl IntoIterator<Item = u32>,
    samples: u32,
    naming: &NamingPattern,
) -> Result<Vec<PathBuf>> {
    params.validate()?;
    if samples == 0 {
        return Err(Error::InvalidConfig("need at least one sample per finger".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::new();
    for finger in fingers {
        for sample in 1..=samples {
            let path = out_dir.join(naming.file_name(finger, sample, "pgm"));
            write_pgm(&render_sample(params, finger, sample)?, &path)?;
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(Error::InvalidConfig("need at least one finger".into()));
    }
    Ok(paths)
}
