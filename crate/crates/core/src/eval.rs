//! Verification protocol: genuine and impostor trials, threshold sweeps,
//! FAR/FRR/TSR rows and the equal error rate.
//!
//! Rates are percentages:
//!
//! * `FAR = impostor accepts / impostor trials * 100`
//! * `FRR = MMC / NF * 100`, `TSR = MC / NF * 100`, where `NF` is the number
//!   of genuine trials, `MC` the genuine accepts and `MMC` the genuine
//!   rejects.
//!
//! Since a trial is accepted when its distance is at most the threshold,
//! FAR never decreases and FRR never increases along a sweep. The EER is
//! located by linear interpolation between the two rows that bracket the
//! FAR/FRR crossing.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::Matcher;
use crate::pipeline::Template;

/// Threshold column of the published FAR/FRR/TSR table.
pub const REFERENCE_THRESHOLDS: [f64; 12] = [25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 57.0, 59.0, 60.0, 61.0, 62.0];

/// How impostor probes pick the enrolled identity they claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimAssignment {
    /// Impostor `k` claims the `k mod NF`-th enrolled finger (ascending ids).
    #[default]
    RoundRobin,
    /// A seeded shuffle of the round-robin assignment.
    Seeded(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenuineTrial {
    pub finger_id: u32,
    pub sample_id: u32,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpostorTrial {
    pub finger_id: u32,
    pub sample_id: u32,
    pub claimed_finger: u32,
    pub distance: f64,
}

/// Distances of every trial; thresholds are applied afterwards.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrialScores {
    pub genuine: Vec<GenuineTrial>,
    pub impostor: Vec<ImpostorTrial>,
}

pub fn impostor_claims(count: usize, enrolled: &[u32], rule: ClaimAssignment) -> Vec<u32> {
    if enrolled.is_empty() {
        return Vec::new();
    }
    let mut claims: Vec<u32> = (0..count).map(|k| enrolled[k % enrolled.len()]).collect();
    if let ClaimAssignment::Seeded(seed) = rule {
        claims.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    claims
}

pub fn score_genuine(matcher: &Matcher<'_>, probes: &[Template]) -> Result<Vec<GenuineTrial>> {
    probes
        .iter()
        .map(|p| {
            Ok(GenuineTrial {
                finger_id: p.finger_id,
                sample_id: p.sample_id,
                distance: matcher.score(p, p.finger_id)?.distance,
            })
        })
        .collect()
}

pub fn score_impostors(matcher: &Matcher<'_>, probes: &[Template], rule: ClaimAssignment) -> Result<Vec<ImpostorTrial>> {
    let store = matcher.store();
    if let Some(p) = probes.iter().find(|p| store.contains(p.finger_id)) {
        return Err(Error::Overlap(p.finger_id));
    }
    let claims = impostor_claims(probes.len(), &store.finger_ids(), rule);
    probes
        .iter()
        .zip(claims)
        .map(|(p, claimed)| {
            Ok(ImpostorTrial {
                finger_id: p.finger_id,
                sample_id: p.sample_id,
                claimed_finger: claimed,
                distance: matcher.score(p, claimed)?.distance,
            })
        })
        .collect()
}

pub fn score_trials(
    matcher: &Matcher<'_>,
    genuine: &[Template],
    impostor: &[Template],
    rule: ClaimAssignment,
) -> Result<TrialScores> {
    Ok(TrialScores {
        genuine: score_genuine(matcher, genuine)?,
        impostor: score_impostors(matcher, impostor, rule)?,
    })
}

/// `(MC, MMC)`: genuine accepts and rejects at `threshold`.
pub fn genuine_trials(scores: &TrialScores, threshold: f64) -> (usize, usize) {
    let mc = scores.genuine.iter().filter(|t| t.distance <= threshold).count();
    (mc, scores.genuine.len() - mc)
}

/// Impostor accepts at `threshold`.
pub fn impostor_trials(scores: &TrialScores, threshold: f64) -> usize {
    scores.impostor.iter().filter(|t| t.distance <= threshold).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub threshold: f64,
    pub far_pct: f64,
    pub frr_pct: f64,
    pub tsr_pct: f64,
    /// Genuine accepts.
    pub mc: usize,
    /// Genuine rejects.
    pub mmc: usize,
    /// Impostor accepts.
    pub impostor_mc: usize,
}

pub fn eval_row(scores: &TrialScores, threshold: f64) -> EvalRow {
    let (mc, mmc) = genuine_trials(scores, threshold);
    let imc = impostor_trials(scores, threshold);
    let nf = scores.genuine.len() as f64;
    let ni = scores.impostor.len();
    EvalRow {
        threshold,
        far_pct: if ni == 0 { 0.0 } else { imc as f64 / ni as f64 * 100.0 },
        frr_pct: mmc as f64 / nf * 100.0,
        tsr_pct: mc as f64 / nf * 100.0,
        mc,
        mmc,
        impostor_mc: imc,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProtocolMetadata {
    pub enrolled_fingers: usize,
    pub enrolled_templates: usize,
    pub genuine_trials: usize,
    pub impostor_trials: usize,
    pub extraction_failures: usize,
    pub config_hash: String,
    /// Effective run configuration.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub eer_defined: bool,
    pub eer_pct: Option<f64>,
    pub eer_threshold: Option<f64>,
    pub metadata: ProtocolMetadata,
}

/// `(eer_pct, threshold)` at the FAR/FRR crossing, if the sweep brackets it.
pub fn equal_error_rate(rows: &[EvalRow]) -> Option<(f64, f64)> {
    if rows.len() < 2 {
        return None;
    }
    let diff = |r: &EvalRow| r.far_pct - r.frr_pct;
    let i = rows.iter().position(|r| diff(r) >= 0.0)?;
    if i == 0 {
        return (diff(&rows[0]) == 0.0).then_some((rows[0].far_pct, rows[0].threshold));
    }
    let (a, b) = (&rows[i - 1], &rows[i]);
    let alpha = -diff(a) / (diff(b) - diff(a));
    let eer = a.far_pct + alpha * (b.far_pct - a.far_pct);
    let t = a.threshold + alpha * (b.threshold - a.threshold);
    Some((eer, t))
}

pub fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    let ok = !thresholds.is_empty()
        && thresholds.iter().all(|t| t.is_finite())
        && thresholds.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::BadThresholds)
    }
}

pub fn sweep(scores: &TrialScores, thresholds: &[f64], metadata: ProtocolMetadata) -> Result<EvalReport> {
    check_thresholds(thresholds)?;
    if scores.genuine.is_empty() {
        return Err(Error::EmptyDataset(Default::default()));
    }
    let rows: Vec<EvalRow> = thresholds.iter().map(|&t| eval_row(scores, t)).collect();
    let eer = equal_error_rate(&rows);
    Ok(EvalReport {
        rows,
        eer_defined: eer.is_some(),
        eer_pct: eer.map(|e| e.0),
        eer_threshold: eer.map(|e| e.1),
        metadata,
    })
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,far,frr,tsr,mc,mmc\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{},{}", r.threshold, r.far_pct, r.frr_pct, r.tsr_pct, r.mc, r.mmc).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table with columns `Threshold %FAR %FRR %TSR`.
    pub fn to_table(&self) -> String {
        let mut out = String::from("Threshold\t%FAR\t%FRR\t%TSR\n");
        for r in &self.rows {
            writeln!(out, "{}\t{:.2}\t{:.2}\t{:.2}", r.threshold, r.far_pct, r.frr_pct, r.tsr_pct).unwrap();
        }
        out
    }

    /// `EER=<pct>% @ t=<threshold>` or `EER=undefined`.
    pub fn eer_line(&self) -> String {
        match (self.eer_pct, self.eer_threshold) {
            (Some(e), Some(t)) => format!("EER={e:.4}% @ t={t:.4}"),
            _ => "EER=undefined".to_string(),
        }
    }

    /// Writes `<stem>.csv` and `<stem>.json` next to `out` (any extension on
    /// `out` is replaced).
    pub fn write(&self, out: &Path) -> Result<()> {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        for (ext, body) in [("csv", self.to_csv()), ("json", self.to_json())] {
            let path = out.with_extension(ext);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Parses `lo:hi:step` (inclusive of `hi` up to rounding) or a
/// comma-separated list.
pub fn parse_thresholds(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("bad threshold spec {spec:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, step] = parts[..] else {
            return Err(bad());
        };
        let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
        if !(step > 0.0) || hi < lo {
            return Err(bad());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| lo + i as f64 * step).collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    check_thresholds(&values)?;
    Ok(values)
}

/// `points` evenly spaced thresholds from 0 to just above the largest
/// observed distance.
pub fn auto_thresholds(scores: &TrialScores, points: usize) -> Vec<f64> {
    let max = scores
        .genuine
        .iter()
        .map(|t| t.distance)
        .chain(scores.impostor.iter().map(|t| t.distance))
        .fold(0.0, f64::max);
    let top = if max > 0.0 { max * 1.001 } else { 1.0 };
    let points = points.max(2);
    (0..points).map(|i| top * i as f64 / (points - 1) as f64).collect()
}

/// Rule for picking the reported operating point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatingPoint {
    /// The row at exactly this threshold.
    Threshold(f64),
    /// Smallest `FAR + FRR`, lowest threshold on ties.
    MinTotalError,
}

pub fn select_operating_point(report: &EvalReport, rule: OperatingPoint) -> Option<EvalRow> {
    match rule {
        OperatingPoint::Threshold(t) => report.rows.iter().find(|r| r.threshold == t).copied(),
        OperatingPoint::MinTotalError => report
            .rows
            .iter()
            .copied()
            .reduce(|best, r| if r.far_pct + r.frr_pct < best.far_pct + best.frr_pct { r } else { best }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTriple {
    pub method: String,
    pub far_pct: f64,
    pub frr_pct: f64,
    pub tsr_pct: f64,
}

/// Published rates of the 2-D wavelet authentication method (AMFAUW).
pub fn amfauw_baseline() -> RateTriple {
    RateTriple {
        method: "AMFAUW".into(),
        far_pct: 5.91,
        frr_pct: 6.14,
        tsr_pct: 94.09,
    }
}

/// Published operating point of the DWT non-minutiae method.
pub fn dwtfr_reference() -> RateTriple {
    RateTriple {
        method: "DWTFR (published)".into(),
        far_pct: 0.0,
        frr_pct: 3.0,
        tsr_pct: 97.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<RateTriple>,
}

impl ComparisonTable {
    pub fn to_text(&self) -> String {
        let mut out = String::from("Method\t%FAR\t%FRR\t%TSR\n");
        for r in &self.rows {
            writeln!(out, "{}\t{}\t{}\t{}", r.method, r.far_pct, r.frr_pct, r.tsr_pct).unwrap();
        }
        out
    }
}

pub fn compare_report(report: &EvalReport, rule: OperatingPoint, baselines: &[RateTriple]) -> Option<ComparisonTable> {
    let row = select_operating_point(report, rule)?;
    let mut rows = baselines.to_vec();
    rows.push(RateTriple {
        method: format!("proposed @ t={}", row.threshold),
        far_pct: row.far_pct,
        frr_pct: row.frr_pct,
        tsr_pct: row.tsr_pct,
    });
    Some(ComparisonTable { rows })
}
