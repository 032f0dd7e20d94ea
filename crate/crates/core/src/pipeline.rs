//! Feature extraction, templates and the template store.
//!
//! Feature vector layout for each DWT level `k` in `1..=3`, starting at
//! offset `32 * (k - 1)`:
//!
//! | range      | content                                                    |
//! |------------|------------------------------------------------------------|
//! | `0..4`     | coherence map GLCM: correlation, contrast, homogeneity, energy |
//! | `4..8`     | orientation map GLCM, same order                           |
//! | `8..24`    | center-window GLCM of `LL`, `LH`, `HL`, `HH`, four each     |
//! | `24..32`   | edge density and mean edge magnitude of `LL`, `LH`, `HL`, `HH` |

use std::collections::BTreeMap;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::centerarea::center_features;
use crate::dwt::{decompose3, Extension, Wavelet};
use crate::edgefeat::{edge_features, CannyConfig};
use crate::error::{Error, Result};
use crate::ingest::{load_image, SampleRef};
use crate::orientation::{directional_features, OrientationConfig};
use crate::plane::GrayImage;
use crate::texture::GlcmConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const LEVELS: usize = 3;
pub const DIRECTIONAL_LEN: usize = 8;
pub const CENTER_LEN: usize = 16;
pub const EDGE_LEN: usize = 8;
pub const LEVEL_LEN: usize = DIRECTIONAL_LEN + CENTER_LEN + EDGE_LEN;
pub const FEATURE_LEN: usize = LEVELS * LEVEL_LEN;

/// Index ranges of one level's feature groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelLayout {
    pub directional: Range<usize>,
    pub center: Range<usize>,
    pub edge: Range<usize>,
}

pub fn level_layout(level: usize) -> LevelLayout {
    assert!((1..=LEVELS).contains(&level), "level {level} out of range");
    let base = (level - 1) * LEVEL_LEN;
    LevelLayout {
        directional: base..base + DIRECTIONAL_LEN,
        center: base + DIRECTIONAL_LEN..base + DIRECTIONAL_LEN + CENTER_LEN,
        edge: base + DIRECTIONAL_LEN + CENTER_LEN..base + LEVEL_LEN,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Raw Euclidean distance on the concatenated features.
    #[default]
    None,
    /// Per-dimension z-score with statistics from the enrolled templates.
    Zscore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub schema_version: u32,
    pub wavelet: Wavelet,
    pub extension: Extension,
    pub glcm: GlcmConfig,
    pub canny: CannyConfig,
    pub orientation: OrientationConfig,
    pub normalization: Normalization,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            schema_version: SCHEMA_VERSION,
            wavelet: Wavelet::default(),
            extension: Extension::default(),
            glcm: GlcmConfig::default(),
            canny: CannyConfig::default(),
            orientation: OrientationConfig::default(),
            normalization: Normalization::default(),
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaMismatch {
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        self.glcm.validate()?;
        self.canny.validate()
    }

    /// Hex SHA-256 of the canonical JSON encoding. Any setting that changes
    /// extracted features or distances changes the hash.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Feature vector of one image; length [`FEATURE_LEN`].
pub fn extract(image: &GrayImage, cfg: &ExtractionConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let pyramid = decompose3(image, cfg.wavelet, cfg.extension)?;
    let mut features = Vec::with_capacity(FEATURE_LEN);
    for bands in &pyramid.levels {
        features.extend(directional_features(bands, &cfg.glcm, &cfg.orientation)?);
        features.extend(center_features(bands, &cfg.glcm)?);
        features.extend(edge_features(bands, &cfg.canny)?);
    }
    check_finite(&features)?;
    Ok(features)
}

fn check_finite(features: &[f64]) -> Result<()> {
    match features.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFiniteFeature(i)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub finger_id: u32,
    pub sample_id: u32,
    pub features: Vec<f64>,
    pub config_hash: String,
    pub source_path: Option<PathBuf>,
}

#[derive(Serialize)]
struct TemplateFileOut<'a> {
    schema_version: u32,
    #[serde(flatten)]
    template: &'a Template,
}

#[derive(Deserialize)]
struct TemplateFileIn {
    finger_id: u32,
    sample_id: u32,
    features: Vec<f64>,
    #[serde(default)]
    config_hash: Option<String>,
    #[serde(default)]
    source_path: Option<PathBuf>,
}

fn parse_error(path: &Path, e: &serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Serializes a template as a single JSON document. Floats use the
/// shortest representation that round-trips exactly.
pub fn template_to_json(t: &Template) -> Result<String> {
    check_finite(&t.features)?;
    if t.config_hash.is_empty() {
        return Err(Error::ConfigHashMissing);
    }
    let doc = TemplateFileOut {
        schema_version: SCHEMA_VERSION,
        template: t,
    };
    Ok(serde_json::to_string_pretty(&doc).expect("template serializes"))
}

pub fn template_from_json(text: &str, path: &Path) -> Result<Template> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_error(path, &e))?;
    let version = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0);
    if version != u64::from(SCHEMA_VERSION) {
        return Err(Error::SchemaMismatch {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: SCHEMA_VERSION,
        });
    }
    let raw: TemplateFileIn = serde_json::from_value(value).map_err(|e| parse_error(path, &e))?;
    let config_hash = raw.config_hash.filter(|h| !h.is_empty()).ok_or(Error::ConfigHashMissing)?;
    check_finite(&raw.features)?;
    Ok(Template {
        finger_id: raw.finger_id,
        sample_id: raw.sample_id,
        features: raw.features,
        config_hash,
        source_path: raw.source_path,
    })
}

pub fn save_template(t: &Template, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = template_to_json(t)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_template(path: impl AsRef<Path>) -> Result<Template> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    template_from_json(&text, path)
}

/// Per-dimension mean and standard deviation of enrolled features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ZScore {
    pub fn fit<'a>(vectors: impl IntoIterator<Item = &'a [f64]>) -> Option<Self> {
        let vectors: Vec<&[f64]> = vectors.into_iter().collect();
        let n = vectors.len();
        let d = vectors.first()?.len();
        let mut mean = vec![0.0; d];
        for v in &vectors {
            mean.iter_mut().zip(*v).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut std = vec![0.0; d];
        for v in &vectors {
            std.iter_mut()
                .zip(*v)
                .zip(&mean)
                .for_each(|((s, x), m)| *s += (x - m).powi(2));
        }
        std.iter_mut().for_each(|s| *s = (*s / n as f64).sqrt());
        Some(ZScore { mean, std })
    }

    /// Constant dimensions (zero spread) map to 0.
    pub fn apply(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect()
    }
}

/// Enrolled templates grouped by finger, sorted by sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateStore {
    config: ExtractionConfig,
    config_hash: String,
    fingers: BTreeMap<u32, Vec<Template>>,
    zscore: Option<ZScore>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    config_hash: String,
    config: ExtractionConfig,
    #[serde(default)]
    zscore: Option<ZScore>,
    fingers: BTreeMap<u32, Vec<String>>,
}

const MANIFEST: &str = "manifest.json";
const TEMPLATE_DIR: &str = "templates";

impl TemplateStore {
    pub fn new(config: ExtractionConfig) -> Self {
        let config_hash = config.config_hash();
        TemplateStore {
            config,
            config_hash,
            fingers: BTreeMap::new(),
            zscore: None,
        }
    }

    pub fn config(&self) -> &ExtractionConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn insert(&mut self, t: Template) -> Result<()> {
        if t.config_hash != self.config_hash {
            return Err(Error::ConfigMismatch {
                expected: self.config_hash.clone(),
                found: t.config_hash,
            });
        }
        let group = self.fingers.entry(t.finger_id).or_default();
        let pos = group.partition_point(|g| g.sample_id < t.sample_id);
        group.insert(pos, t);
        self.zscore = None;
        Ok(())
    }

    /// Recomputes normalization statistics; call after the last insert.
    pub fn finalize(&mut self) {
        self.zscore = match self.config.normalization {
            Normalization::None => None,
            Normalization::Zscore => ZScore::fit(self.iter().map(|t| t.features.as_slice())),
        };
    }

    pub fn zscore(&self) -> Option<&ZScore> {
        self.zscore.as_ref()
    }

    /// Features as compared by the matcher: raw, or z-scored when the store
    /// was built with normalization.
    pub fn project(&self, features: &[f64]) -> Vec<f64> {
        match &self.zscore {
            Some(z) => z.apply(features),
            None => features.to_vec(),
        }
    }

    pub fn finger_ids(&self) -> Vec<u32> {
        self.fingers.keys().copied().collect()
    }

    pub fn templates_of(&self, finger: u32) -> Option<&[Template]> {
        self.fingers.get(&finger).map(Vec::as_slice)
    }

    pub fn contains(&self, finger: u32) -> bool {
        self.fingers.contains_key(&finger)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Template> {
        self.fingers.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.fingers.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.fingers.is_empty()
    }

    pub fn finger_count(&self) -> usize {
        self.fingers.len()
    }

    /// Writes `manifest.json` plus one JSON file per template under
    /// `templates/`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let tdir = dir.join(TEMPLATE_DIR);
        fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
        let mut files: BTreeMap<u32, Vec<String>> = BTreeMap::new();
        for t in self.iter() {
            let name = format!("{}_{}.json", t.finger_id, t.sample_id);
            save_template(t, tdir.join(&name))?;
            files.entry(t.finger_id).or_default().push(format!("{TEMPLATE_DIR}/{name}"));
        }
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            config_hash: self.config_hash.clone(),
            config: self.config.clone(),
            zscore: self.zscore.clone(),
            fingers: files,
        };
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_error(&path, &e))?;
        let version = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0);
        if version != u64::from(SCHEMA_VERSION) {
            return Err(Error::SchemaMismatch {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                expected: SCHEMA_VERSION,
            });
        }
        let manifest: Manifest = serde_json::from_value(value).map_err(|e| parse_error(&path, &e))?;
        let mut store = TemplateStore::new(manifest.config);
        if store.config_hash != manifest.config_hash {
            return Err(Error::ConfigMismatch {
                expected: manifest.config_hash,
                found: store.config_hash,
            });
        }
        for rel in manifest.fingers.values().flatten() {
            store.insert(load_template(dir.join(rel))?)?;
        }
        store.zscore = manifest.zscore;
        Ok(store)
    }
}

/// An image that could not be turned into a template.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractionFailure {
    pub finger_id: u32,
    pub sample_id: u32,
    pub path: PathBuf,
    pub error: String,
}

pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

/// Loads and extracts every sample in parallel. Output order follows the
/// input order; per-image failures are collected instead of aborting.
pub fn extract_samples(
    samples: &[SampleRef],
    cfg: &ExtractionConfig,
    progress: Option<Progress<'_>>,
) -> Result<(Vec<Template>, Vec<ExtractionFailure>)> {
    cfg.validate()?;
    let hash = cfg.config_hash();
    let done = AtomicUsize::new(0);
    let results: Vec<_> = samples
        .par_iter()
        .map(|s| {
            let out = load_image(&s.path).and_then(|img| extract(&img, cfg));
            let n = done.fetch_add(1, Ordering::Relaxed) + 1;
            if let Some(report) = progress {
                report(n, samples.len());
            }
            (s, out)
        })
        .collect();

    let mut templates = Vec::with_capacity(samples.len());
    let mut failures = Vec::new();
    for (s, out) in results {
        match out {
            Ok(features) => templates.push(Template {
                finger_id: s.finger_id,
                sample_id: s.sample_id,
                features,
                config_hash: hash.clone(),
                source_path: Some(s.path.clone()),
            }),
            Err(e) => {
                log::warn!("skipping {}: {e}", s.path.display());
                failures.push(ExtractionFailure {
                    finger_id: s.finger_id,
                    sample_id: s.sample_id,
                    path: s.path.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    Ok((templates, failures))
}

#[derive(Debug, Clone)]
pub struct Enrollment {
    pub store: TemplateStore,
    pub failures: Vec<ExtractionFailure>,
}

/// Builds a store from the enrollment impressions.
pub fn enroll_database(
    enroll: &[SampleRef],
    cfg: &ExtractionConfig,
    progress: Option<Progress<'_>>,
) -> Result<Enrollment> {
    if enroll.is_empty() {
        return Err(Error::EmptyDataset(PathBuf::new()));
    }
    let (templates, failures) = extract_samples(enroll, cfg, progress)?;
    let mut store = TemplateStore::new(cfg.clone());
    for t in templates {
        store.insert(t)?;
    }
    store.finalize();
    Ok(Enrollment { store, failures })
}
