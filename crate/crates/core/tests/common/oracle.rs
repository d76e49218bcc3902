//! Brute-force reference for the feature and distance pipeline.
//!
//! Works from plain mnemonic lists on dense vectors over the union vocabulary,
//! sharing no code with the library.

use std::collections::BTreeSet;

/// One program: for each subroutine, its mnemonics in order.
pub type Listing = Vec<Vec<String>>;

fn vocabulary(a: &Listing, b: &Listing) -> Vec<String> {
    let set: BTreeSet<String> = a.iter().chain(b).flatten().map(|m| m.to_lowercase()).collect();
    set.into_iter().collect()
}

/// Normalized dense histograms of the non-empty subroutines.
pub fn dense(p: &Listing, vocab: &[String]) -> Vec<Vec<f64>> {
    p.iter()
        .filter(|s| !s.is_empty())
        .map(|s| {
            let mut v = vec![0.0; vocab.len()];
            for m in s {
                let k = vocab.iter().position(|w| *w == m.to_lowercase()).unwrap();
                v[k] += 1.0;
            }
            let n = s.len() as f64;
            v.iter().map(|c| c / n).collect()
        })
        .collect()
}

pub fn minkowski(x: &[f64], y: &[f64], r: f64, weights: &[f64], root: bool) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        s += weights[i] * (x[i] - y[i]).abs().powf(r);
    }
    if root {
        s.powf(1.0 / r)
    } else {
        s
    }
}

fn directed(a: &[Vec<f64>], b: &[Vec<f64>], r: f64, w: &[f64], root: bool) -> f64 {
    let mut total = 0.0;
    for x in a {
        let mut best = f64::INFINITY;
        for y in b {
            best = best.min(minkowski(x, y, r, w, root));
        }
        total += best;
    }
    total / a.len() as f64
}

/// Symmetric distance with per-mnemonic weights (missing weights count as 1).
pub fn weighted_distance(a: &Listing, b: &Listing, r: f64, root: bool, weight: impl Fn(&str) -> f64) -> f64 {
    let vocab = vocabulary(a, b);
    let w: Vec<f64> = vocab.iter().map(|m| weight(m)).collect();
    let (da, db) = (dense(a, &vocab), dense(b, &vocab));
    (directed(&da, &db, r, &w, root) + directed(&db, &da, r, &w, root)) / 2.0
}

pub fn distance(a: &Listing, b: &Listing, r: f64, root: bool) -> f64 {
    weighted_distance(a, b, r, root, |_| 1.0)
}

pub fn directed_distance(a: &Listing, b: &Listing, r: f64) -> f64 {
    let vocab = vocabulary(a, b);
    let w = vec![1.0; vocab.len()];
    directed(&dense(a, &vocab), &dense(b, &vocab), r, &w, false)
}
