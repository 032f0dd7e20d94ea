//! Run configuration and the end-to-end evaluation protocol
//! (enroll, score genuine and impostor probes, sweep thresholds).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{auto_thresholds, score_trials, sweep, ClaimAssignment, EvalReport, ProtocolMetadata, TrialScores};
use crate::ingest::{DatasetSplit, NamingPattern};
use crate::matcher::{Aggregation, Matcher};
use crate::pipeline::{enroll_database, extract_samples, ExtractionConfig, ExtractionFailure, Progress, TemplateStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingConfig {
    pub aggregation: Aggregation,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        MatchingConfig {
            aggregation: Aggregation::Min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Samples `1..=enroll_samples` are enrolled; later ones are probes.
    pub enroll_samples: u32,
    pub naming: String,
    pub impostor_claims: ClaimAssignment,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            enroll_samples: 7,
            naming: "{finger}_{sample}".into(),
            impostor_claims: ClaimAssignment::RoundRobin,
        }
    }
}

impl ProtocolConfig {
    pub fn naming(&self) -> Result<NamingPattern> {
        NamingPattern::parse(&self.naming)
    }
}

/// Everything a run needs, loadable from a TOML file:
///
/// ```toml
/// [extraction]
/// wavelet = "db2"          # db1 | db2 | db4
/// extension = "symmetric"  # symmetric | periodic
/// normalization = "none"   # none | zscore
/// [extraction.glcm]
/// levels = 8
/// offset = [0, 1]
/// symmetric = true
/// [extraction.canny]
/// sigma = 1.0
/// t_low = 0.1
/// t_high = 0.3
/// [extraction.orientation]
/// swap_axes = false
/// [matching]
/// aggregation = "min"      # min | mean | median
/// [protocol]
/// enroll_samples = 7
/// naming = "{finger}_{sample}"
/// impostor_claims = "round-robin"  # or { seeded = 42 }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub extraction: ExtractionConfig,
    pub matching: MatchingConfig,
    pub protocol: ProtocolConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.extraction.validate()?;
        self.protocol.naming()?;
        if self.protocol.enroll_samples == 0 {
            return Err(Error::InvalidConfig("protocol.enroll_samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// How the sweep thresholds are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdChoice {
    Explicit(Vec<f64>),
    /// Evenly spaced over the observed distance range.
    Auto(usize),
}

#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub store: TemplateStore,
    pub scores: TrialScores,
    pub report: EvalReport,
    pub failures: Vec<ExtractionFailure>,
}

/// Enrolls `split.enroll`, scores all probes and sweeps thresholds.
/// Probes that fail extraction are dropped and listed in `failures`.
pub fn run_protocol(
    split: &DatasetSplit,
    cfg: &RunConfig,
    thresholds: &ThresholdChoice,
    progress: Option<Progress<'_>>,
) -> Result<ProtocolRun> {
    cfg.validate()?;
    let enrollment = enroll_database(&split.enroll, &cfg.extraction, progress)?;
    let store = enrollment.store;
    if store.is_empty() {
        return Err(Error::EmptyStore);
    }
    let mut failures = enrollment.failures;
    let (genuine, f) = extract_samples(&split.genuine_test, &cfg.extraction, progress)?;
    failures.extend(f);
    let (impostor, f) = extract_samples(&split.impostor_test, &cfg.extraction, progress)?;
    failures.extend(f);

    let matcher = Matcher::new(&store, cfg.matching.aggregation);
    let scores = score_trials(&matcher, &genuine, &impostor, cfg.protocol.impostor_claims)?;
    let thresholds = match thresholds {
        ThresholdChoice::Explicit(t) => t.clone(),
        ThresholdChoice::Auto(n) => auto_thresholds(&scores, *n),
    };
    let metadata = ProtocolMetadata {
        enrolled_fingers: store.finger_count(),
        enrolled_templates: store.len(),
        genuine_trials: scores.genuine.len(),
        impostor_trials: scores.impostor.len(),
        extraction_failures: failures.len(),
        config_hash: store.config_hash().to_string(),
        config: serde_json::to_value(cfg).expect("config serializes"),
    };
    let report = sweep(&scores, &thresholds, metadata)?;
    Ok(ProtocolRun {
        store,
        scores,
        report,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let cfg = RunConfig::from_toml(
            "[extraction]\nwavelet = \"db4\"\n[extraction.canny]\nsigma = 2.0\n[protocol]\nimpostor_claims = { seeded = 5 }\n",
        )
        .unwrap();
        assert_eq!(cfg.extraction.wavelet, crate::dwt::Wavelet::Db4);
        assert_eq!(cfg.extraction.canny.sigma, 2.0);
        assert_eq!(cfg.extraction.canny.t_high, 0.3);
        assert_eq!(cfg.protocol.impostor_claims, ClaimAssignment::Seeded(5));
        assert_eq!(cfg.protocol.enroll_samples, 7);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::from_toml("[extraction.canny]\nt_low = 0.5\nt_high = 0.2\n").is_err());
        assert!(RunConfig::from_toml("[extraction]\nwavelet = \"db3\"\n").is_err());
        assert!(RunConfig::from_toml("[extraction]\nbogus = 1\n").is_err());
        assert!(RunConfig::from_toml("[protocol]\nnaming = \"{finger}\"\n").is_err());
    }
}
