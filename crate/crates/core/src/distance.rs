//! Minkowski-form histogram distances, min-match subroutine pairing and the
//! symmetric program distance.
//!
//! The histogram distance is `Σ w_i·|x_i − y_i|^r` over parallel bins. By
//! default no `1/r` root is taken, so `r = 2` gives the plain sum of squared
//! differences; [`MetricSpec::with_root`] switches to the rooted form.
//!
//! Program distance works on subroutine histograms: each histogram of the
//! query is matched to its nearest histogram in the target, and the mean of
//! those minima is the directed distance. The symmetric distance averages both
//! directions.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asm::Mnemonic;
use crate::histogram::{HistogramSet, OpcodeHistogram};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistanceError {
    #[error("histogram for `{0}` is not normalized")]
    KindMismatch(String),
    #[error("histogram set for `{0}` is empty")]
    EmptySet(String),
    #[error("duplicate program id `{0}`")]
    DuplicateId(String),
    #[error("a distance matrix needs at least two programs, got {0}")]
    TooFewPrograms(usize),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
}

/// Exponent, optional per-mnemonic weights and root flag of the Minkowski form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    exponent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<BTreeMap<Mnemonic, f64>>,
    #[serde(default)]
    root: bool,
}

impl Default for MetricSpec {
    fn default() -> Self {
        MetricSpec::squared_euclidean()
    }
}

impl MetricSpec {
    /// `r = 2`, unweighted, no root.
    pub fn squared_euclidean() -> MetricSpec {
        MetricSpec {
            exponent: 2.0,
            weights: None,
            root: false,
        }
    }

    pub fn minkowski(exponent: f64) -> Result<MetricSpec, DistanceError> {
        MetricSpec::squared_euclidean().with_exponent(exponent)
    }

    pub fn with_exponent(mut self, exponent: f64) -> Result<MetricSpec, DistanceError> {
        if !(exponent.is_finite() && exponent >= 1.0) {
            return Err(DistanceError::InvalidMetric(format!(
                "exponent {exponent} must be a finite number >= 1"
            )));
        }
        self.exponent = exponent;
        Ok(self)
    }

    /// Mnemonics missing from `weights` keep weight 1.
    pub fn with_weights(
        mut self,
        weights: BTreeMap<Mnemonic, f64>,
    ) -> Result<MetricSpec, DistanceError> {
        if let Some((m, w)) = weights.iter().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(DistanceError::InvalidMetric(format!(
                "weight for `{m}` is {w}, must be positive"
            )));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn with_root(mut self, root: bool) -> MetricSpec {
        self.root = root;
        self
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn root(&self) -> bool {
        self.root
    }

    pub fn weights(&self) -> Option<&BTreeMap<Mnemonic, f64>> {
        self.weights.as_ref()
    }

    /// Re-checks invariants after deserialization.
    pub fn validate(&self) -> Result<(), DistanceError> {
        MetricSpec::squared_euclidean().with_exponent(self.exponent)?;
        if let Some(w) = &self.weights {
            MetricSpec::squared_euclidean().with_weights(w.clone())?;
        }
        Ok(())
    }

    fn weight(&self, m: &Mnemonic) -> f64 {
        self.weights
            .as_ref()
            .and_then(|w| w.get(m).copied())
            .unwrap_or(1.0)
    }

    fn term(&self, diff: f64) -> f64 {
        let d = diff.abs();
        if self.exponent == 1.0 {
            d
        } else if self.exponent == 2.0 {
            d * d
        } else {
            d.powf(self.exponent)
        }
    }
}

/// Distance between two normalized histograms over the union of their bins,
/// accumulated in ascending mnemonic order.
pub fn histogram_distance(
    x: &OpcodeHistogram,
    y: &OpcodeHistogram,
    metric: &MetricSpec,
) -> Result<f64, DistanceError> {
    let xb = x
        .frequencies()
        .ok_or_else(|| DistanceError::KindMismatch(x.source().subroutine.clone()))?;
    let yb = y
        .frequencies()
        .ok_or_else(|| DistanceError::KindMismatch(y.source().subroutine.clone()))?;

    let mut sum = 0.0;
    let mut xi = xb.iter().peekable();
    let mut yi = yb.iter().peekable();
    loop {
        let (m, a, b) = match (xi.peek(), yi.peek()) {
            (None, None) => break,
            (Some((mx, a)), None) => (*mx, **a, 0.0),
            (None, Some((my, b))) => (*my, 0.0, **b),
            (Some((mx, a)), Some((my, b))) => match mx.cmp(my) {
                std::cmp::Ordering::Less => (*mx, **a, 0.0),
                std::cmp::Ordering::Greater => (*my, 0.0, **b),
                std::cmp::Ordering::Equal => (*mx, **a, **b),
            },
        };
        // advance whichever side(s) supplied `m`
        if xi.peek().is_some_and(|(k, _)| *k == m) {
            xi.next();
        }
        if yi.peek().is_some_and(|(k, _)| *k == m) {
            yi.next();
        }
        sum += metric.weight(m) * metric.term(a - b);
    }
    Ok(if metric.root {
        sum.powf(1.0 / metric.exponent)
    } else {
        sum
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub query_index: usize,
    pub query_subroutine: String,
    pub target_index: usize,
    pub target_subroutine: String,
    pub distance: f64,
}

/// Best target match for every query histogram, plus their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub query: String,
    pub target: String,
    pub entries: Vec<MatchEntry>,
    pub directed: f64,
}

impl MatchReport {
    pub fn minima(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.distance).collect()
    }
}

fn check_set(set: &HistogramSet) -> Result<(), DistanceError> {
    if set.is_empty() {
        return Err(DistanceError::EmptySet(set.program().to_string()));
    }
    Ok(())
}

/// Pairs every query histogram with its nearest target histogram.
/// Ties go to the smallest target index.
pub fn min_match(
    query: &HistogramSet,
    target: &HistogramSet,
    metric: &MetricSpec,
) -> Result<MatchReport, DistanceError> {
    check_set(query)?;
    check_set(target)?;
    let mut entries = Vec::with_capacity(query.len());
    for (i, h) in query.histograms().iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in target.histograms().iter().enumerate() {
            let d = histogram_distance(h, g, metric)?;
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((j, d));
            }
        }
        let (j, d) = best.expect("target set is non-empty");
        entries.push(MatchEntry {
            query_index: i,
            query_subroutine: h.source().subroutine.clone(),
            target_index: j,
            target_subroutine: target.histograms()[j].source().subroutine.clone(),
            distance: d,
        });
    }
    let directed = entries.iter().map(|e| e.distance).sum::<f64>() / entries.len() as f64;
    Ok(MatchReport {
        query: query.program().to_string(),
        target: target.program().to_string(),
        entries,
        directed,
    })
}

/// Mean nearest-match distance from `query` into `target`. Not symmetric.
pub fn directed_distance(
    query: &HistogramSet,
    target: &HistogramSet,
    metric: &MetricSpec,
) -> Result<f64, DistanceError> {
    Ok(min_match(query, target, metric)?.directed)
}

/// Average of the two directed distances.
pub fn symmetric_distance(
    p1: &HistogramSet,
    p2: &HistogramSet,
    metric: &MetricSpec,
) -> Result<f64, DistanceError> {
    let forward = directed_distance(p1, p2, metric)?;
    let backward = directed_distance(p2, p1, metric)?;
    Ok((forward + backward) / 2.0)
}

/// Symmetric program distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metric: Option<MetricSpec>,
}

/// Tolerance used when validating matrices read from outside.
pub const MATRIX_TOLERANCE: f64 = 1e-12;

impl DistanceMatrix {
    /// Builds a matrix from raw values, checking shape, symmetry and the diagonal.
    pub fn new(labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<DistanceMatrix, DistanceError> {
        let m = DistanceMatrix {
            labels,
            values,
            metric: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), DistanceError> {
        let n = self.labels.len();
        let mut seen = HashSet::new();
        for l in &self.labels {
            if !seen.insert(l.as_str()) {
                return Err(DistanceError::DuplicateId(l.clone()));
            }
        }
        if self.values.len() != n || self.values.iter().any(|row| row.len() != n) {
            return Err(DistanceError::InvalidMatrix(format!("expected {n}x{n} values")));
        }
        for i in 0..n {
            if self.values[i][i].abs() > MATRIX_TOLERANCE {
                return Err(DistanceError::InvalidMatrix(format!(
                    "diagonal entry for `{}` is {}",
                    self.labels[i], self.values[i][i]
                )));
            }
            for j in 0..n {
                let v = self.values[i][j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(DistanceError::InvalidMatrix(format!(
                        "entry ({}, {}) is {v}",
                        self.labels[i], self.labels[j]
                    )));
                }
                if (v - self.values[j][i]).abs() > MATRIX_TOLERANCE {
                    return Err(DistanceError::InvalidMatrix(format!(
                        "asymmetric entries for ({}, {})",
                        self.labels[i], self.labels[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == id)
    }

    pub fn metric(&self) -> Option<&MetricSpec> {
        self.metric.as_ref()
    }

    /// Unordered off-diagonal pairs `(i, j, value)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j, self.values[i][j])))
    }

    /// CSV with a header row and column of ids and three decimals per value.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("").chain(self.labels.iter().map(String::as_str));
        w.write_record(header).expect("in-memory write");
        for (label, row) in self.labels.iter().zip(&self.values) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| format!("{v:.3}")));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// Reads the [`to_csv`](Self::to_csv) layout. Values keep whatever precision the file has.
    pub fn from_csv(text: &str) -> Result<DistanceMatrix, DistanceError> {
        let bad = |e: String| DistanceError::InvalidMatrix(e);
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut values = Vec::with_capacity(labels.len());
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.get(0) != labels.get(i).map(String::as_str) {
                return Err(bad(format!("row {} label does not match the header", i + 1)));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|v| v.trim().parse::<f64>().map_err(|e| bad(format!("`{v}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            values.push(row);
        }
        DistanceMatrix::new(labels, values)
    }

    /// Full-precision JSON.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("matrix serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<DistanceMatrix, DistanceError> {
        let m: DistanceMatrix = serde_json::from_str(text)
            .map_err(|e| DistanceError::InvalidMatrix(e.to_string()))?;
        if let Some(metric) = &m.metric {
            metric.validate()?;
        }
        m.validate()?;
        Ok(m)
    }

    /// Plain-text table; `mark` decides which off-diagonal cells get a `*`.
    pub fn render(&self, mark: impl Fn(f64) -> bool) -> String {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(6);
        let mut out = String::new();
        let _ = write!(out, "{:width$}", "");
        for l in &self.labels {
            let _ = write!(out, " {l:>width$}");
        }
        out.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            let _ = write!(out, "{l:width$}");
            for j in 0..self.len() {
                let v = self.values[i][j];
                let flag = if i != j && mark(v) { "*" } else { " " };
                let cell = format!("{v:.3}{flag}");
                let _ = write!(out, " {cell:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

/// All pairwise symmetric distances. Pairs are evaluated in parallel; each
/// value depends only on its own pair, so the result is order-independent.
pub fn distance_matrix(
    programs: &[HistogramSet],
    metric: &MetricSpec,
) -> Result<DistanceMatrix, DistanceError> {
    if programs.len() < 2 {
        return Err(DistanceError::TooFewPrograms(programs.len()));
    }
    let mut seen = HashSet::new();
    for p in programs {
        if !seen.insert(p.program()) {
            return Err(DistanceError::DuplicateId(p.program().to_string()));
        }
        check_set(p)?;
    }
    let n = programs.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let computed = pairs
        .par_iter()
        .map(|&(i, j)| symmetric_distance(&programs[i], &programs[j], metric))
        .collect::<Result<Vec<_>, _>>()?;

    let mut values = vec![vec![0.0; n]; n];
    for (&(i, j), d) in pairs.iter().zip(computed) {
        values[i][j] = d;
        values[j][i] = d;
    }
    Ok(DistanceMatrix {
        labels: programs.iter().map(|p| p.program().to_string()).collect(),
        values,
        metric: Some(metric.clone()),
    })
}
