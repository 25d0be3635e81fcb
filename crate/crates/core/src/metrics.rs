//! Torus error metrics: matching distance, minimum separation and the
//! per-source resolution criterion.

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest source count accepted by the brute-force permutation search.
pub const MAX_MATCHING_SOURCES: usize = 10;

/// Distance on the unit torus, min over integer shifts of |a − b − k|.
pub fn torus_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Pairwise-distinct points on the torus, stored in [0, 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencySet {
    values: Vec<f64>,
}

impl FrequencySet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let values: Vec<f64> = values.into_iter().map(crate::signal::wrap_torus).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite frequency".into()));
        }
        for (i, j) in (0..values.len()).tuple_combinations() {
            if torus_distance(values[i], values[j]) == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "frequencies {i} and {j} coincide on the torus"
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Optimal assignment found by [`matching_distance`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matching {
    pub distance: f64,
    /// `permutation[j]` is the estimate index paired with truth index `j`.
    pub permutation: Vec<usize>,
    /// Torus error of each truth index under the pairing.
    pub errors: Vec<f64>,
}

fn check_cardinality(truth: &[f64], est: &[f64]) -> Result<()> {
    if truth.len() != est.len() {
        return Err(Error::CardinalityMismatch {
            left: truth.len(),
            right: est.len(),
        });
    }
    if truth.len() > MAX_MATCHING_SOURCES {
        return Err(Error::InvalidArgument(format!(
            "matching distance supports at most {MAX_MATCHING_SOURCES} sources, got {}",
            truth.len()
        )));
    }
    Ok(())
}

/// min over permutations Π of max_j |ω̂_{Π(j)} − ω_j| on the torus.
///
/// Ties between permutations resolve to the lexicographically first one.
pub fn matching_distance(truth: &[f64], est: &[f64]) -> Result<Matching> {
    check_cardinality(truth, est)?;
    let s = truth.len();
    let mut best = Matching {
        distance: f64::INFINITY,
        permutation: (0..s).collect(),
        errors: vec![0.0; s],
    };
    if s == 0 {
        best.distance = 0.0;
        return Ok(best);
    }
    for perm in (0..s).permutations(s) {
        let worst = perm
            .iter()
            .enumerate()
            .map(|(j, &k)| torus_distance(est[k], truth[j]))
            .fold(0.0, f64::max);
        if worst < best.distance {
            best.errors = perm
                .iter()
                .enumerate()
                .map(|(j, &k)| torus_distance(est[k], truth[j]))
                .collect();
            best.distance = worst;
            best.permutation = perm;
        }
    }
    Ok(best)
}

/// Convenience wrapper over [`FrequencySet`] operands.
pub fn matching_distance_sets(truth: &FrequencySet, est: &FrequencySet) -> Result<Matching> {
    matching_distance(truth.values(), est.values())
}

/// Smallest pairwise torus distance; needs at least two points.
pub fn min_separation(omegas: &[f64]) -> Result<f64> {
    if omegas.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "minimum separation needs at least 2 frequencies, got {}",
            omegas.len()
        )));
    }
    Ok(omegas
        .iter()
        .tuple_combinations()
        .map(|(&a, &b)| torus_distance(a, b))
        .fold(f64::INFINITY, f64::min))
}

/// Every per-source error under the optimal pairing is at most `delta / 10`.
pub fn resolution_success(truth: &[f64], est: &[f64], delta: f64) -> Result<bool> {
    let m = matching_distance(truth, est)?;
    let tol = delta / 10.0;
    Ok(m.errors.iter().all(|&e| e <= tol))
}
