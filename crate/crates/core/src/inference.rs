//! Leave-one-in permutation test of one new diagram against a reference set.
//!
//! The statistic is the total pairwise distance within the reference group.
//! Its null distribution has `m0 + 1` values: one for each way of setting a
//! single diagram aside as "group 2". Reference pairs are computed once;
//! each test only needs the `m0` distances from the new diagram.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    bottleneck_points, wasserstein_points, DistanceKind, DurationVector,
};
use crate::persistence::PersistenceDiagram;

/// A diagram reduced to what the chosen distance needs.
#[derive(Debug, Clone)]
enum Prepared {
    Durations(DurationVector),
    Points(Vec<(f64, f64)>),
}

impl Prepared {
    fn new(d: &PersistenceDiagram, dim: usize, kind: DistanceKind) -> Self {
        match kind {
            DistanceKind::Duration => Prepared::Durations(DurationVector::from_diagram(d, dim)),
            _ => Prepared::Points(d.points(dim)),
        }
    }

    fn distance(&self, other: &Prepared, kind: DistanceKind) -> f64 {
        match (self, other, kind) {
            (Prepared::Durations(a), Prepared::Durations(b), _) => a.distance(b),
            (Prepared::Points(a), Prepared::Points(b), DistanceKind::Bottleneck) => bottleneck_points(a, b),
            (Prepared::Points(a), Prepared::Points(b), DistanceKind::Wasserstein { p, ground }) => {
                wasserstein_points(a, b, p, ground)
            }
            _ => unreachable!("prepared diagrams always match their distance kind"),
        }
    }
}

/// Phase I reference diagrams with their cached pairwise distances for one
/// homology dimension.
#[derive(Debug, Clone)]
pub struct ReferenceSet {
    dim: usize,
    distance: DistanceKind,
    prepared: Vec<Prepared>,
    intra: Vec<f64>,
    row_sums: Vec<f64>,
    intra_total: f64,
}

impl ReferenceSet {
    pub fn m0(&self) -> usize {
        self.prepared.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn distance_kind(&self) -> DistanceKind {
        self.distance
    }

    /// Cached distance between reference diagrams `i` and `j`.
    pub fn intra(&self, i: usize, j: usize) -> f64 {
        self.intra[i * self.m0() + j]
    }

    /// Sum over all reference pairs `i < j`: the observed statistic.
    pub fn intra_total(&self) -> f64 {
        self.intra_total
    }

    /// Distances from `y` to every reference diagram, in reference order.
    pub fn cross_distances(&self, y: &PersistenceDiagram) -> Vec<f64> {
        let py = Prepared::new(y, self.dim, self.distance);
        self.prepared.iter().map(|x| x.distance(&py, self.distance)).collect()
    }
}

pub fn build_reference(diagrams: &[PersistenceDiagram], dim: usize, distance: DistanceKind) -> Result<ReferenceSet> {
    let m0 = diagrams.len();
    if m0 < 2 {
        return Err(Error::validation(format!(
            "a reference set needs at least 2 diagrams, got {m0}"
        )));
    }
    let prepared: Vec<Prepared> = diagrams.iter().map(|d| Prepared::new(d, dim, distance)).collect();
    let mut intra = vec![0.0; m0 * m0];
    for i in 0..m0 {
        for j in (i + 1)..m0 {
            let d = prepared[i].distance(&prepared[j], distance);
            intra[i * m0 + j] = d;
            intra[j * m0 + i] = d;
        }
    }
    let row_sums: Vec<f64> = (0..m0).map(|i| intra[i * m0..(i + 1) * m0].iter().sum()).collect();
    let mut intra_total = 0.0;
    for i in 0..m0 {
        for j in (i + 1)..m0 {
            intra_total += intra[i * m0 + j];
        }
    }
    Ok(ReferenceSet {
        dim,
        distance,
        prepared,
        intra,
        row_sums,
        intra_total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTestResult {
    /// Statistic under the original allocation (the new part in group 2).
    pub observed_stat: f64,
    /// `m0 + 1` null values: entry `k < m0` sets reference `k` aside, the
    /// last entry sets the new part aside and equals `observed_stat`.
    pub null_stats: Vec<f64>,
    pub p_value: f64,
}

impl PermutationTestResult {
    /// The `floor(alpha (m0 + 1))`-th smallest null value, or `None` when
    /// alpha is below the test's resolution `1 / (m0 + 1)`. The observed
    /// statistic is at or below this limit exactly when `p_value <= alpha`
    /// (absent ties).
    pub fn alpha_limit(&self, alpha: f64) -> Option<f64> {
        let k = rejection_rank(alpha, self.null_stats.len() - 1);
        if k == 0 {
            return None;
        }
        let mut sorted = self.null_stats.clone();
        sorted.sort_by(f64::total_cmp);
        Some(sorted[k - 1])
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

/// `floor(alpha (m0 + 1))`: how many of the `m0 + 1` ranks reject at level alpha.
pub fn rejection_rank(alpha: f64, m0: usize) -> usize {
    let k = (alpha * (m0 + 1) as f64 + 1e-9).floor();
    (k.max(0.0) as usize).min(m0 + 1)
}

/// Tests whether `y` comes from the same population as the reference.
///
/// The null hypothesis is rejected when the observed within-reference total
/// is unusually small; the p-value is the fraction of null values at or
/// below it, counting itself, so it is never below `1 / (m0 + 1)`.
pub fn permutation_test(reference: &ReferenceSet, y: &PersistenceDiagram) -> PermutationTestResult {
    let cross = reference.cross_distances(y);
    permutation_test_from_cross(reference, &cross)
}

/// Same as [`permutation_test`] with the cross distances already computed.
pub fn permutation_test_from_cross(reference: &ReferenceSet, cross: &[f64]) -> PermutationTestResult {
    let m0 = reference.m0();
    assert_eq!(cross.len(), m0, "need one cross distance per reference diagram");
    let observed = reference.intra_total;
    let total = observed + cross.iter().sum::<f64>();
    let mut null_stats: Vec<f64> = (0..m0)
        .map(|k| total - cross[k] - reference.row_sums[k])
        .collect();
    null_stats.push(observed);
    let at_or_below = null_stats.iter().filter(|&&s| s <= observed).count();
    PermutationTestResult {
        observed_stat: observed,
        p_value: at_or_below as f64 / (m0 + 1) as f64,
        null_stats,
    }
}
