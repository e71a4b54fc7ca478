//! Set and rank similarity between recommended view lists.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::views::{RankedViewList, ViewSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("rbo persistence {0} is outside (0, 1)")]
    PersistenceOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Jaccard,
    Rbo { p: f64 },
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Jaccard => f.write_str("jaccard"),
            Metric::Rbo { p } => write!(f, "rbo(p={p})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityScore {
    pub value: f64,
    pub metric: Metric,
}

pub const DEFAULT_RBO_P: f64 = 0.9;

/// `|a ∩ b| / |a ∪ b|` over specs; two empty lists are identical.
pub fn jaccard(a: &RankedViewList, b: &RankedViewList) -> SimilarityScore {
    let sa: HashSet<&ViewSpec> = a.specs().collect();
    let sb: HashSet<&ViewSpec> = b.specs().collect();
    let union = sa.union(&sb).count();
    let value = if union == 0 {
        1.0
    } else {
        sa.intersection(&sb).count() as f64 / union as f64
    };
    SimilarityScore {
        value,
        metric: Metric::Jaccard,
    }
}

/// Extrapolated rank-biased overlap of the two lists truncated to their
/// common depth `k`:
///
/// `RBO_ext = (X_k / k) p^k + (1 - p) / p * sum_{d=1..k} (X_d / d) p^d`
///
/// where `X_d` is the overlap of the two depth-`d` prefixes.
pub fn rbo(a: &RankedViewList, b: &RankedViewList, p: f64) -> Result<SimilarityScore, MetricError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(MetricError::PersistenceOutOfRange(p));
    }
    let left: Vec<&ViewSpec> = a.specs().collect();
    let right: Vec<&ViewSpec> = b.specs().collect();
    let value = rbo_ext(&left, &right, p);
    Ok(SimilarityScore {
        value,
        metric: Metric::Rbo { p },
    })
}

fn rbo_ext<T: Eq + std::hash::Hash>(a: &[T], b: &[T], p: f64) -> f64 {
    let depth = a.len().min(b.len());
    if depth == 0 {
        return if a.len() == b.len() { 1.0 } else { 0.0 };
    }
    if a[..depth] == b[..depth] {
        return 1.0;
    }
    let mut seen_a = HashSet::with_capacity(depth);
    let mut seen_b = HashSet::with_capacity(depth);
    let mut overlap = 0usize;
    let mut weighted = 0.0;
    let mut p_pow = 1.0;
    for d in 1..=depth {
        let (x, y) = (&a[d - 1], &b[d - 1]);
        if x == y {
            overlap += 1;
        } else {
            if seen_b.contains(x) {
                overlap += 1;
            }
            if seen_a.contains(y) {
                overlap += 1;
            }
        }
        seen_a.insert(x);
        seen_b.insert(y);
        p_pow *= p;
        weighted += overlap as f64 / d as f64 * p_pow;
    }
    let tail = overlap as f64 / depth as f64 * p_pow;
    (tail + (1.0 - p) / p * weighted).clamp(0.0, 1.0)
}
