//! Euclidean template matching.
//!
//! A probe claiming finger `F` is scored against every enrolled impression
//! of `F`; the per-finger score is the minimum distance by default (mean
//! and median are available). A probe matches when its score is at most
//! the threshold.

use std::cmp::Ordering;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{Template, TemplateStore};

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Min,
    Mean,
    Median,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Aggregation::Min),
            "mean" => Ok(Aggregation::Mean),
            "median" => Ok(Aggregation::Median),
            other => Err(Error::InvalidConfig(format!("unknown aggregation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchDecision {
    pub distance: f64,
    pub matched: bool,
    pub threshold: f64,
    /// Sample id of the closest enrolled impression.
    pub best_sample_id: u32,
}

/// Aggregated distance of a probe to one finger's impressions, plus the
/// sample id of the nearest one (lowest id on ties).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerScore {
    pub distance: f64,
    pub best_sample_id: u32,
}

/// Scores probes against a store. Enrolled vectors are projected once
/// (z-scored if the store uses normalization).
#[derive(Debug, Clone)]
pub struct Matcher<'a> {
    store: &'a TemplateStore,
    aggregation: Aggregation,
    projected: Vec<(u32, Vec<(u32, Vec<f64>)>)>,
}

impl<'a> Matcher<'a> {
    pub fn new(store: &'a TemplateStore, aggregation: Aggregation) -> Self {
        let projected = store
            .finger_ids()
            .into_iter()
            .map(|f| {
                let samples = store
                    .templates_of(f)
                    .unwrap_or_default()
                    .iter()
                    .map(|t| (t.sample_id, store.project(&t.features)))
                    .collect();
                (f, samples)
            })
            .collect();
        Matcher {
            store,
            aggregation,
            projected,
        }
    }

    pub fn store(&self) -> &TemplateStore {
        self.store
    }

    fn check_probe(&self, probe: &Template) -> Result<Vec<f64>> {
        if probe.config_hash != self.store.config_hash() {
            return Err(Error::ConfigMismatch {
                expected: self.store.config_hash().to_string(),
                found: probe.config_hash.clone(),
            });
        }
        Ok(self.store.project(&probe.features))
    }

    fn score_projected(&self, probe: &[f64], samples: &[(u32, Vec<f64>)]) -> Result<FingerScore> {
        let mut dists = Vec::with_capacity(samples.len());
        let mut best = (f64::INFINITY, 0u32);
        for (sample_id, v) in samples {
            let d = euclidean(probe, v)?;
            if d < best.0 || (d == best.0 && *sample_id < best.1) {
                best = (d, *sample_id);
            }
            dists.push(d);
        }
        let distance = match self.aggregation {
            Aggregation::Min => best.0,
            Aggregation::Mean => dists.iter().sum::<f64>() / dists.len() as f64,
            Aggregation::Median => {
                dists.sort_by(f64::total_cmp);
                let n = dists.len();
                if n % 2 == 1 {
                    dists[n / 2]
                } else {
                    0.5 * (dists[n / 2 - 1] + dists[n / 2])
                }
            }
        };
        Ok(FingerScore {
            distance,
            best_sample_id: best.1,
        })
    }

    /// Distance of `probe` to the claimed finger.
    pub fn score(&self, probe: &Template, claimed_finger: u32) -> Result<FingerScore> {
        let probe = self.check_probe(probe)?;
        let samples = self
            .projected
            .binary_search_by_key(&claimed_finger, |(f, _)| *f)
            .map(|i| &self.projected[i].1)
            .map_err(|_| Error::UnknownFinger(claimed_finger))?;
        self.score_projected(&probe, samples)
    }

    pub fn verify(&self, probe: &Template, claimed_finger: u32, threshold: f64) -> Result<MatchDecision> {
        let s = self.score(probe, claimed_finger)?;
        Ok(MatchDecision {
            distance: s.distance,
            matched: s.distance <= threshold,
            threshold,
            best_sample_id: s.best_sample_id,
        })
    }

    /// Every enrolled finger ranked by ascending distance (ties by finger id).
    pub fn identify(&self, probe: &Template, threshold: f64) -> Result<Vec<Candidate>> {
        if self.store.is_empty() {
            return Err(Error::EmptyStore);
        }
        let probe = self.check_probe(probe)?;
        let mut ranked = self
            .projected
            .iter()
            .map(|(f, samples)| {
                let s = self.score_projected(&probe, samples)?;
                Ok(Candidate {
                    finger_id: *f,
                    distance: s.distance,
                    within_threshold: s.distance <= threshold,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ranked.sort_by(|a, b| match a.distance.total_cmp(&b.distance) {
            Ordering::Equal => a.finger_id.cmp(&b.finger_id),
            o => o,
        });
        Ok(ranked)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub finger_id: u32,
    pub distance: f64,
    pub within_threshold: bool,
}

pub fn verify(
    probe: &Template,
    claimed_finger: u32,
    store: &TemplateStore,
    threshold: f64,
    aggregation: Aggregation,
) -> Result<MatchDecision> {
    Matcher::new(store, aggregation).verify(probe, claimed_finger, threshold)
}

pub fn identify(probe: &Template, store: &TemplateStore, threshold: f64, aggregation: Aggregation) -> Result<Vec<Candidate>> {
    Matcher::new(store, aggregation).identify(probe, threshold)
}
