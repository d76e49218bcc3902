//! Per-subroutine opcode frequency histograms.
//!
//! Bins are keyed by mnemonic and stored sparsely: a missing bin is a zero
//! count. A Minkowski-form distance only ever compares parallel bins, so the
//! union of two histograms' keys gives the same result as a vector spanning
//! the whole instruction set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::asm::{Mnemonic, Program, Subroutine};

/// Tolerance on the total mass of a normalized histogram.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistogramError {
    #[error("subroutine `{0}` has no instructions")]
    EmptySubroutine(String),
    #[error("histogram for `{0}` has zero total mass")]
    ZeroMass(String),
    #[error("histogram for `{0}` is already normalized")]
    AlreadyNormalized(String),
    #[error("program `{0}` has no non-empty subroutines")]
    NoFeatures(String),
    #[error("invalid normalized histogram for `{subroutine}`: {reason}")]
    InvalidNormalized { subroutine: String, reason: String },
    #[error("histogram set for `{0}` mixes raw and normalized histograms")]
    MixedKinds(String),
    #[error("cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistogramKind {
    Raw,
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HistogramSource {
    pub program: String,
    pub subroutine: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Bins {
    Raw(BTreeMap<Mnemonic, u64>),
    Normalized(BTreeMap<Mnemonic, f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpcodeHistogram {
    source: HistogramSource,
    bins: Bins,
}

impl OpcodeHistogram {
    /// Raw counts; zero entries are dropped.
    pub fn from_counts(
        source: HistogramSource,
        counts: impl IntoIterator<Item = (Mnemonic, u64)>,
    ) -> OpcodeHistogram {
        let mut bins = BTreeMap::new();
        for (m, c) in counts {
            if c > 0 {
                *bins.entry(m).or_insert(0) += c;
            }
        }
        OpcodeHistogram {
            source,
            bins: Bins::Raw(bins),
        }
    }

    /// Frequencies that already sum to one, e.g. loaded from a cache file.
    pub fn from_frequencies(
        source: HistogramSource,
        bins: BTreeMap<Mnemonic, f64>,
    ) -> Result<OpcodeHistogram, HistogramError> {
        let invalid = |reason: String| HistogramError::InvalidNormalized {
            subroutine: source.subroutine.clone(),
            reason,
        };
        if bins.is_empty() {
            return Err(invalid("no bins".into()));
        }
        for (m, &v) in &bins {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(format!("bin `{m}` = {v} is outside (0, 1]")));
            }
        }
        let mass: f64 = bins.values().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid(format!("total mass {mass}")));
        }
        Ok(OpcodeHistogram {
            source,
            bins: Bins::Normalized(bins),
        })
    }

    pub fn source(&self) -> &HistogramSource {
        &self.source
    }

    pub fn kind(&self) -> HistogramKind {
        match self.bins {
            Bins::Raw(_) => HistogramKind::Raw,
            Bins::Normalized(_) => HistogramKind::Normalized,
        }
    }

    pub fn len(&self) -> usize {
        match &self.bins {
            Bins::Raw(b) => b.len(),
            Bins::Normalized(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bin value as a real (count for raw, frequency for normalized); zero if absent.
    pub fn get(&self, mnemonic: &str) -> f64 {
        self.iter()
            .find(|(m, _)| m.as_str() == mnemonic)
            .map_or(0.0, |(_, v)| v)
    }

    /// Raw count of a bin; `None` for normalized histograms.
    pub fn count(&self, mnemonic: &str) -> Option<u64> {
        match &self.bins {
            Bins::Raw(b) => Some(
                b.iter()
                    .find(|(m, _)| m.as_str() == mnemonic)
                    .map_or(0, |(_, c)| *c),
            ),
            Bins::Normalized(_) => None,
        }
    }

    /// Bins in ascending mnemonic order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (&Mnemonic, f64)> + '_> {
        match &self.bins {
            Bins::Raw(b) => Box::new(b.iter().map(|(m, c)| (m, *c as f64))),
            Bins::Normalized(b) => Box::new(b.iter().map(|(m, v)| (m, *v))),
        }
    }

    pub fn total(&self) -> f64 {
        match &self.bins {
            Bins::Raw(b) => b.values().sum::<u64>() as f64,
            Bins::Normalized(b) => b.values().sum(),
        }
    }

    pub(crate) fn frequencies(&self) -> Option<&BTreeMap<Mnemonic, f64>> {
        match &self.bins {
            Bins::Normalized(b) => Some(b),
            Bins::Raw(_) => None,
        }
    }
}

/// Counts mnemonic occurrences in a subroutine body. Labels contribute nothing.
pub fn build_histogram(program: &str, sub: &Subroutine) -> Result<OpcodeHistogram, HistogramError> {
    if sub.is_empty() {
        return Err(HistogramError::EmptySubroutine(sub.name().to_string()));
    }
    let mut counts: BTreeMap<Mnemonic, u64> = BTreeMap::new();
    for instr in sub.body() {
        *counts.entry(instr.mnemonic().clone()).or_insert(0) += 1;
    }
    Ok(OpcodeHistogram {
        source: HistogramSource {
            program: program.to_string(),
            subroutine: sub.name().to_string(),
        },
        bins: Bins::Raw(counts),
    })
}

/// Divides every bin by the histogram's total count.
pub fn normalize(h: &OpcodeHistogram) -> Result<OpcodeHistogram, HistogramError> {
    let Bins::Raw(counts) = &h.bins else {
        return Err(HistogramError::AlreadyNormalized(h.source.subroutine.clone()));
    };
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(HistogramError::ZeroMass(h.source.subroutine.clone()));
    }
    let total = total as f64;
    let bins = counts
        .iter()
        .map(|(m, &c)| (m.clone(), c as f64 / total))
        .collect();
    Ok(OpcodeHistogram {
        source: h.source.clone(),
        bins: Bins::Normalized(bins),
    })
}

/// The histograms of one program, in subroutine order.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSet {
    program: String,
    histograms: Vec<OpcodeHistogram>,
    skipped: Vec<String>,
}

impl HistogramSet {
    pub fn new(
        program: impl Into<String>,
        histograms: Vec<OpcodeHistogram>,
    ) -> Result<HistogramSet, HistogramError> {
        let program = program.into();
        if let Some(first) = histograms.first() {
            if histograms.iter().any(|h| h.kind() != first.kind()) {
                return Err(HistogramError::MixedKinds(program));
            }
        }
        Ok(HistogramSet {
            program,
            histograms,
            skipped: Vec::new(),
        })
    }

    pub fn program(&self) -> &str {
        &self.program
    }

    pub fn histograms(&self) -> &[OpcodeHistogram] {
        &self.histograms
    }

    pub fn len(&self) -> usize {
        self.histograms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histograms.is_empty()
    }

    /// Empty subroutines left out of the set.
    pub fn skipped(&self) -> &[String] {
        &self.skipped
    }

    pub fn kind(&self) -> Option<HistogramKind> {
        self.histograms.first().map(OpcodeHistogram::kind)
    }

    pub fn with_program(mut self, program: impl Into<String>) -> HistogramSet {
        let program = program.into();
        for h in &mut self.histograms {
            h.source.program = program.clone();
        }
        self.program = program;
        self
    }
}

/// One normalized histogram per non-empty subroutine, in source order.
pub fn extract_features(p: &Program) -> Result<HistogramSet, HistogramError> {
    let mut histograms = Vec::new();
    let mut skipped = Vec::new();
    for sub in p.subroutines() {
        if sub.is_empty() {
            skipped.push(sub.name().to_string());
            continue;
        }
        histograms.push(normalize(&build_histogram(p.id(), sub)?)?);
    }
    if histograms.is_empty() {
        return Err(HistogramError::NoFeatures(p.id().to_string()));
    }
    Ok(HistogramSet {
        program: p.id().to_string(),
        histograms,
        skipped,
    })
}

/// `sha256:<hex>` of a listing's bytes.
pub fn content_digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

pub const CACHE_FORMAT: &str = "opfreq-hist/1";

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    subroutine: String,
    bins: BTreeMap<Mnemonic, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheDocument {
    format: String,
    id: String,
    digest: String,
    histograms: Vec<CacheRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    skipped: Vec<String>,
}

/// Contents of a `.hist.json` file.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramCache {
    pub digest: String,
    pub features: HistogramSet,
}

impl HistogramCache {
    /// Extracts features from listing text and records its digest.
    pub fn build(program: &Program, listing: &[u8]) -> Result<HistogramCache, HistogramError> {
        Ok(HistogramCache {
            digest: content_digest(listing),
            features: extract_features(program)?,
        })
    }

    pub fn is_fresh_for(&self, listing: &[u8]) -> bool {
        self.digest == content_digest(listing)
    }

    pub fn to_json(&self) -> String {
        let doc = CacheDocument {
            format: CACHE_FORMAT.to_string(),
            id: self.features.program.clone(),
            digest: self.digest.clone(),
            histograms: self
                .features
                .histograms
                .iter()
                .map(|h| CacheRecord {
                    subroutine: h.source.subroutine.clone(),
                    bins: h.frequencies().cloned().unwrap_or_default(),
                })
                .collect(),
            skipped: self.features.skipped.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("cache document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<HistogramCache, HistogramError> {
        let doc: CacheDocument =
            serde_json::from_str(text).map_err(|e| HistogramError::Cache(e.to_string()))?;
        if doc.format != CACHE_FORMAT {
            return Err(HistogramError::Cache(format!(
                "unsupported format `{}`",
                doc.format
            )));
        }
        if doc.histograms.is_empty() {
            return Err(HistogramError::NoFeatures(doc.id));
        }
        let histograms = doc
            .histograms
            .into_iter()
            .map(|r| {
                OpcodeHistogram::from_frequencies(
                    HistogramSource {
                        program: doc.id.clone(),
                        subroutine: r.subroutine,
                    },
                    r.bins,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HistogramCache {
            digest: doc.digest,
            features: HistogramSet {
                program: doc.id,
                histograms,
                skipped: doc.skipped,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::parse_program;

    fn m(s: &str) -> Mnemonic {
        Mnemonic::new(s).unwrap()
    }

    fn src() -> HistogramSource {
        HistogramSource {
            program: "p".into(),
            subroutine: "f".into(),
        }
    }

    fn raw(pairs: &[(&str, u64)]) -> OpcodeHistogram {
        OpcodeHistogram::from_counts(src(), pairs.iter().map(|(k, v)| (m(k), *v)))
    }

    fn sub(text: &str) -> Subroutine {
        parse_program(text, "p").unwrap().subroutines()[0].clone()
    }

    #[test]
    fn counts_mnemonics() {
        let s = sub("proc f\n mov eax, 1\n mov ebx, 2\n push ecx\n add eax, ebx\nendp");
        let h = build_histogram("p", &s).unwrap();
        assert_eq!(h.kind(), HistogramKind::Raw);
        assert_eq!(h.count("mov"), Some(2));
        assert_eq!(h.count("push"), Some(1));
        assert_eq!(h.count("add"), Some(1));
        assert_eq!(h.len(), 3);
        assert_eq!(h.total(), 4.0);
    }

    #[test]
    fn labels_do_not_count() {
        let s = sub("proc f\ntop:\n dec ecx\n jne top\nend:\nendp");
        assert_eq!(build_histogram("p", &s).unwrap().total(), 2.0);
    }

    #[test]
    fn empty_subroutine_rejected() {
        let s = sub("proc g\nendp");
        assert_eq!(
            build_histogram("p", &s),
            Err(HistogramError::EmptySubroutine("g".into()))
        );
    }

    #[test]
    fn normalize_divides_by_total() {
        let n = normalize(&raw(&[("mov", 2), ("push", 1), ("add", 1)])).unwrap();
        assert_eq!(n.kind(), HistogramKind::Normalized);
        assert_eq!(n.get("mov"), 0.5);
        assert_eq!(n.get("push"), 0.25);
        assert_eq!(n.get("add"), 0.25);

        assert_eq!(normalize(&raw(&[("nop", 5)])).unwrap().get("nop"), 1.0);

        let n = normalize(&raw(&[("mov", 6), ("push", 2), ("pop", 1)])).unwrap();
        assert_eq!(n.get("mov"), 6.0 / 9.0);
        assert!((n.get("mov") - 2.0 / 3.0).abs() < 1e-15);
        assert!((n.get("push") - 2.0 / 9.0).abs() < 1e-15);
        assert!((n.get("pop") - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_errors() {
        assert_eq!(
            normalize(&raw(&[("mov", 0)])),
            Err(HistogramError::ZeroMass("f".into()))
        );
        let n = normalize(&raw(&[("mov", 1)])).unwrap();
        assert!(matches!(normalize(&n), Err(HistogramError::AlreadyNormalized(_))));
    }

    #[test]
    fn features_skip_empty_subroutines() {
        let p = parse_program("proc f\n mov eax, 1\nendp\nproc g\nendp\nproc h\n nop\n nop\nendp", "p").unwrap();
        let set = extract_features(&p).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.skipped(), &["g".to_string()]);
        assert_eq!(set.histograms()[0].source().subroutine, "f");
        assert_eq!(set.histograms()[1].source().subroutine, "h");
        assert_eq!(set.histograms()[1].get("nop"), 1.0);

        let p = parse_program("proc f\nendp", "p").unwrap();
        assert_eq!(extract_features(&p), Err(HistogramError::NoFeatures("p".into())));
    }

    #[test]
    fn frequencies_validated() {
        let bins: BTreeMap<_, _> = [(m("mov"), 0.5), (m("add"), 0.4)].into_iter().collect();
        assert!(OpcodeHistogram::from_frequencies(src(), bins).is_err());
        let bins: BTreeMap<_, _> = [(m("mov"), 0.0), (m("add"), 1.0)].into_iter().collect();
        assert!(OpcodeHistogram::from_frequencies(src(), bins).is_err());
    }

    #[test]
    fn cache_round_trip_is_exact() {
        let text = "proc f\n mov eax, 1\n mov eax, 2\n xor ebx, ebx\nendp\nproc e\nendp\n";
        let p = parse_program(text, "prog").unwrap();
        let cache = HistogramCache::build(&p, text.as_bytes()).unwrap();
        let json = cache.to_json();
        let back = HistogramCache::from_json(&json).unwrap();
        assert_eq!(back, cache);
        assert!(back.is_fresh_for(text.as_bytes()));
        assert!(!back.is_fresh_for(b"proc f\nendp\n"));
        // bins sorted by mnemonic
        assert!(json.find("\"mov\"").unwrap() < json.find("\"xor\"").unwrap());
    }

    #[test]
    fn cache_rejects_bad_documents() {
        assert!(HistogramCache::from_json("{}").is_err());
        let bad = r#"{"format":"opfreq-hist/1","id":"p","digest":"x","histograms":[{"subroutine":"f","bins":{"mov":0.7}}]}"#;
        assert!(matches!(
            HistogramCache::from_json(bad),
            Err(HistogramError::InvalidNormalized { .. })
        ));
    }
}
