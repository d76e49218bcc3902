//! Threshold classification of a distance matrix.
//!
//! Two programs are declared variants of each other when their distance is at
//! or below the threshold (inclusive). Families are the connected components of
//! that pair graph, i.e. single-linkage clusters cut at the threshold.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::{DistanceError, DistanceMatrix};

/// Working threshold reported for the Win32.Evol variants.
pub const REFERENCE_THRESHOLD: f64 = 0.057;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(#[from] DistanceError),
    #[error("threshold {0} must be a finite number >= 0")]
    InvalidThreshold(f64),
    #[error("program `{0}` has no family label")]
    Unlabeled(String),
    #[error("label given for `{0}`, which is not in the matrix")]
    UnknownProgram(String),
    #[error("calibration needs at least two families, got {0}")]
    TooFewFamilies(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    threshold: f64,
}

impl ClassifierConfig {
    pub fn new(threshold: f64) -> Result<ClassifierConfig, ClassifyError> {
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(ClassifyError::InvalidThreshold(threshold));
        }
        Ok(ClassifierConfig { threshold })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            threshold: REFERENCE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantPair {
    pub a: String,
    pub b: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub threshold: f64,
    /// Below-or-at-threshold pairs in matrix order.
    pub pairs: Vec<VariantPair>,
    /// Partition of all ids; members in matrix order, clusters ordered by first member.
    pub clusters: Vec<Vec<String>>,
}

impl Classification {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("classification serializes");
        s.push('\n');
        s
    }

    pub fn cluster_of(&self, id: &str) -> Option<usize> {
        self.clusters.iter().position(|c| c.iter().any(|m| m == id))
    }
}

pub fn classify(m: &DistanceMatrix, cfg: &ClassifierConfig) -> Result<Classification, ClassifyError> {
    m.validate()?;
    let n = m.len();
    let mut uf = UnionFind::<usize>::new(n);
    let mut pairs = Vec::new();
    for (i, j, d) in m.pairs() {
        if d <= cfg.threshold {
            uf.union(i, j);
            pairs.push(VariantPair {
                a: m.labels()[i].clone(),
                b: m.labels()[j].clone(),
                distance: d,
            });
        }
    }
    let mut clusters: Vec<Vec<String>> = Vec::new();
    let mut slot: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        let root = uf.find(i);
        let idx = *slot.entry(root).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[idx].push(m.labels()[i].clone());
    }
    Ok(Classification {
        threshold: cfg.threshold,
        pairs,
        clusters,
    })
}

/// Text rendering of the matrix with at-or-below-threshold cells starred.
pub fn render_table(m: &DistanceMatrix, cfg: &ClassifierConfig) -> String {
    let t = cfg.threshold;
    let mut out = m.render(|v| v <= t);
    out.push_str(&format!("\n* distance <= {t}\n"));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Calibration {
    /// Every intra-family distance is below every inter-family distance.
    Separable {
        threshold: f64,
        intra_max: f64,
        inter_min: f64,
    },
    /// No threshold separates the families.
    Overlap { intra_max: f64, inter_min: f64 },
}

impl Calibration {
    pub fn threshold(&self) -> Option<f64> {
        match self {
            Calibration::Separable { threshold, .. } => Some(*threshold),
            Calibration::Overlap { .. } => None,
        }
    }
}

/// Largest same-family distance as the threshold, provided it stays strictly
/// below the smallest cross-family distance.
pub fn calibrate_threshold(
    m: &DistanceMatrix,
    families: &BTreeMap<String, String>,
) -> Result<Calibration, ClassifyError> {
    m.validate()?;
    if let Some(id) = families.keys().find(|id| m.index_of(id).is_none()) {
        return Err(ClassifyError::UnknownProgram(id.clone()));
    }
    let family: Vec<&str> = m
        .labels()
        .iter()
        .map(|l| {
            families
                .get(l)
                .map(String::as_str)
                .ok_or_else(|| ClassifyError::Unlabeled(l.clone()))
        })
        .collect::<Result<_, _>>()?;
    let distinct: BTreeSet<&str> = family.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(ClassifyError::TooFewFamilies(distinct.len()));
    }
    let mut intra_max: f64 = 0.0;
    let mut inter_min = f64::INFINITY;
    for (i, j, d) in m.pairs() {
        if family[i] == family[j] {
            intra_max = intra_max.max(d);
        } else {
            inter_min = inter_min.min(d);
        }
    }
    Ok(if intra_max < inter_min {
        Calibration::Separable {
            threshold: intra_max,
            intra_max,
            inter_min,
        }
    } else {
        Calibration::Overlap {
            intra_max,
            inter_min,
        }
    })
}
