//! Image loading and dataset layout.
//!
//! Images are read from binary (P5) or ASCII (P2) PGM with `maxval <= 255`,
//! or from 8-bit PNG. Color PNGs are reduced to luminance with the Rec. 601
//! weights. Sample values are kept as stored (no rescaling by `maxval`), so
//! a P5 file written back with [`write_pgm`] reloads bit-identically.
//!
//! Datasets follow the FVC convention of one file per impression named
//! `<finger>_<sample>.<ext>`. [`scan_dataset`] splits an enrollment
//! directory into enrollment impressions (samples `1..=enroll_samples`) and
//! genuine probes (everything above), and takes every impression of an
//! optional second directory as impostor probes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use regex::Regex;

use crate::error::{Error, Result};
use crate::plane::GrayImage;

const IMAGE_EXTENSIONS: &[&str] = &["pgm", "png"];

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes, path)
}

/// Decodes an in-memory PGM or PNG; `path` is only used in error messages.
pub fn decode_image(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    match bytes {
        [b'P', b'2', ..] | [b'P', b'5', ..] => decode_pgm(bytes, path),
        [0x89, b'P', b'N', b'G', ..] => decode_png(bytes, path),
        _ => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: "expected a PGM (P2/P5) or PNG signature".into(),
        }),
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str, path: &Path) -> Result<usize> {
        let tok = self.token().ok_or_else(|| corrupt(path, format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| corrupt(path, format!("invalid {what} {:?}", String::from_utf8_lossy(tok))))
    }
}

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::CorruptHeader {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn decode_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let mut rd = HeaderReader { bytes, pos: 0 };
    let binary = rd.token() == Some(b"P5");
    let width = rd.number("width", path)?;
    let height = rd.number("height", path)?;
    let maxval = rd.number("maxval", path)?;
    if width == 0 || height == 0 {
        return Err(corrupt(path, format!("non-positive dimensions {width}x{height}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!("maxval {maxval} (only 1..=255 is supported)"),
        });
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| corrupt(path, "dimensions overflow"))?;

    let data: Vec<f64> = if binary {
        // Exactly one whitespace byte separates maxval from the raster.
        let start = rd.pos + 1;
        let payload = bytes.get(start..).unwrap_or(&[]);
        if payload.len() < count {
            return Err(corrupt(
                path,
                format!("payload truncated: {} of {count} bytes", payload.len()),
            ));
        }
        payload[..count].iter().map(|&b| f64::from(b)).collect()
    } else {
        let mut data = Vec::with_capacity(count);
        for i in 0..count {
            let tok = rd
                .token()
                .ok_or_else(|| corrupt(path, format!("payload truncated: {i} of {count} samples")))?;
            let v = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|&v| v <= maxval)
                .ok_or_else(|| corrupt(path, format!("bad sample {:?}", String::from_utf8_lossy(tok))))?;
            data.push(v as f64);
        }
        data
    };
    GrayImage::new(width, height, data)
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    use image::DynamicImage;

    let unsupported = |reason: String| Error::UnsupportedFormat {
        path: path.to_path_buf(),
        reason,
    };
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| unsupported(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let luma = |r: u8, g: u8, b: u8| 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    let data: Vec<f64> = match &img {
        DynamicImage::ImageLuma8(buf) => buf.as_raw().iter().map(|&v| f64::from(v)).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| f64::from(p.0[0])).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        other => {
            return Err(unsupported(format!(
                "{:?} PNG (only 8-bit samples are supported)",
                other.color()
            )))
        }
    };
    GrayImage::new(w, h, data).map_err(|e| corrupt(path, e.to_string()))
}

/// Writes a binary (P5) PGM with maxval 255; pixels are rounded to 8 bits.
pub fn write_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(image.data().len() + 20);
    write!(out, "P5\n{} {}\n255\n", image.width(), image.height()).expect("write to Vec");
    out.extend(image.to_u8());
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Identity of one impression within a dataset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct SampleRef {
    pub finger_id: u32,
    pub sample_id: u32,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub enroll: Vec<SampleRef>,
    pub genuine_test: Vec<SampleRef>,
    pub impostor_test: Vec<SampleRef>,
}

impl DatasetSplit {
    pub fn enrolled_fingers(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.enroll.iter().map(|s| s.finger_id).collect();
        ids.dedup();
        ids
    }
}

/// File-stem pattern with `{finger}` and `{sample}` placeholders.
#[derive(Debug, Clone)]
pub struct NamingPattern {
    source: String,
    regex: Regex,
    finger_first: bool,
}

impl NamingPattern {
    pub fn parse(pattern: &str) -> Result<Self> {
        let f = pattern.find("{finger}");
        let s = pattern.find("{sample}");
        let (Some(f), Some(s)) = (f, s) else {
            return Err(Error::InvalidConfig(format!(
                "naming pattern {pattern:?} must contain {{finger}} and {{sample}}"
            )));
        };
        let mut re = String::from("^");
        let mut rest = pattern;
        while let Some(open) = rest.find('{') {
            re.push_str(&regex::escape(&rest[..open]));
            let tail = &rest[open..];
            if let Some(t) = tail.strip_prefix("{finger}").or_else(|| tail.strip_prefix("{sample}")) {
                re.push_str(r"(\d+)");
                rest = t;
            } else {
                re.push_str(r"\{");
                rest = &tail[1..];
            }
        }
        re.push_str(&regex::escape(rest));
        re.push('$');
        Ok(NamingPattern {
            source: pattern.to_string(),
            regex: Regex::new(&re).map_err(|e| Error::InvalidConfig(e.to_string()))?,
            finger_first: f < s,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }

    /// Extracts `(finger, sample)` from a file stem.
    pub fn match_stem(&self, stem: &str) -> Option<(u32, u32)> {
        let caps = self.regex.captures(stem)?;
        let a: u32 = caps.get(1)?.as_str().parse().ok()?;
        let b: u32 = caps.get(2)?.as_str().parse().ok()?;
        let (finger, sample) = if self.finger_first { (a, b) } else { (b, a) };
        (finger > 0 && sample > 0).then_some((finger, sample))
    }

    pub fn file_name(&self, finger: u32, sample: u32, ext: &str) -> String {
        let stem = self
            .source
            .replace("{finger}", &finger.to_string())
            .replace("{sample}", &sample.to_string());
        format!("{stem}.{ext}")
    }
}

impl Default for NamingPattern {
    fn default() -> Self {
        NamingPattern::parse("{finger}_{sample}").expect("default pattern is valid")
    }
}

/// Lists every image file in `dir` matching `naming`, sorted by
/// `(finger_id, sample_id)`. Files with other extensions are ignored.
pub fn scan_directory(dir: &Path, naming: &NamingPattern) -> Result<Vec<SampleRef>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut samples = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let (finger_id, sample_id) = naming
            .match_stem(stem)
            .ok_or_else(|| Error::MalformedFilename(path.clone()))?;
        samples.push(SampleRef {
            finger_id,
            sample_id,
            path,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset(dir.to_path_buf()));
    }
    samples.sort();
    Ok(samples)
}

/// Splits a dataset per the verification protocol: samples up to
/// `enroll_samples` are enrolled, later samples become genuine probes, and
/// every file in `impostor_dir` becomes an impostor probe.
pub fn scan_dataset(
    enroll_dir: &Path,
    impostor_dir: Option<&Path>,
    naming: &NamingPattern,
    enroll_samples: u32,
) -> Result<DatasetSplit> {
    let mut split = DatasetSplit::default();
    for s in scan_directory(enroll_dir, naming)? {
        if s.sample_id <= enroll_samples {
            split.enroll.push(s);
        } else {
            split.genuine_test.push(s);
        }
    }
    if split.enroll.is_empty() {
        return Err(Error::EmptyDataset(enroll_dir.to_path_buf()));
    }
    if let Some(dir) = impostor_dir {
        split.impostor_test = scan_directory(dir, naming)?;
        let enrolled = split.enrolled_fingers();
        if let Some(s) = split
            .impostor_test
            .iter()
            .find(|s| enrolled.binary_search(&s.finger_id).is_ok())
        {
            return Err(Error::Overlap(s.finger_id));
        }
    }
    Ok(split)
}
