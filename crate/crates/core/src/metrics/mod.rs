//! Distances between persistence diagrams, one homology dimension at a time.
//!
//! Only finite features take part; essential classes are ignored.

mod assignment;
mod matching;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

pub use assignment::solve_assignment;
pub use matching::max_matching;

/// Lifetimes of one dimension's finite features, sorted ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DurationVector {
    durations: Vec<f64>,
}

impl DurationVector {
    pub fn new(mut durations: Vec<f64>) -> Self {
        durations.sort_by(f64::total_cmp);
        DurationVector { durations }
    }

    pub fn from_diagram(d: &PersistenceDiagram, dim: usize) -> Self {
        Self::new(d.durations(dim))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.durations
    }

    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }

    /// L1 distance between the order statistics after padding the shorter
    /// vector with zeros. Durations are non-negative, so the padding zeros
    /// sort to the front.
    pub fn distance(&self, other: &DurationVector) -> f64 {
        let (short, long) = if self.len() <= other.len() {
            (&self.durations, &other.durations)
        } else {
            (&other.durations, &self.durations)
        };
        let pad = long.len() - short.len();
        let head: f64 = long[..pad].iter().map(|x| x.abs()).sum();
        let tail: f64 = short
            .iter()
            .zip(&long[pad..])
            .map(|(a, b)| (a - b).abs())
            .sum();
        head + tail
    }
}

pub fn duration_distance(x: &PersistenceDiagram, y: &PersistenceDiagram, dim: usize) -> f64 {
    DurationVector::from_diagram(x, dim).distance(&DurationVector::from_diagram(y, dim))
}

/// Norm on the (birth, death) plane used by the Wasserstein distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundMetric {
    /// max(|db|, |dd|); a point's distance to the diagonal is (d - b) / 2.
    #[default]
    Linf,
    /// The same `p` as the outer sum; distance to the diagonal is
    /// 2^(1/p) (d - b) / 2.
    Lp,
}

impl FromStr for GroundMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linf" => Ok(GroundMetric::Linf),
            "lp" => Ok(GroundMetric::Lp),
            other => Err(Error::validation(format!("unknown ground metric '{other}'"))),
        }
    }
}

type Point = (f64, f64);

fn linf(a: Point, b: Point) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn half_life(a: Point) -> f64 {
    (a.1 - a.0) / 2.0
}

/// Exact bottleneck distance between the dimension-`dim` finite features.
///
/// The optimum is one of the candidate values (pairwise L-infinity
/// distances and half-lifetimes); binary search picks the smallest candidate
/// at which a perfect matching of the diagonal-augmented graph exists.
pub fn bottleneck_distance(x: &PersistenceDiagram, y: &PersistenceDiagram, dim: usize) -> f64 {
    bottleneck_points(&x.points(dim), &y.points(dim))
}

pub(crate) fn bottleneck_points(xs: &[Point], ys: &[Point]) -> f64 {
    let (m, n) = (xs.len(), ys.len());
    if m == 0 && n == 0 {
        return 0.0;
    }
    let mut candidates: Vec<f64> = Vec::with_capacity(m * n + m + n + 1);
    candidates.push(0.0);
    for &a in xs {
        candidates.push(half_life(a));
        for &b in ys {
            candidates.push(linf(a, b));
        }
    }
    candidates.extend(ys.iter().map(|&b| half_life(b)));
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let feasible = |eps: f64| -> bool {
        // Left: xs then diagonal copies of ys. Right: ys then diagonal copies of xs.
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n];
        for (i, &a) in xs.iter().enumerate() {
            for (j, &b) in ys.iter().enumerate() {
                if linf(a, b) <= eps {
                    adj[i].push(j);
                }
            }
            if half_life(a) <= eps {
                adj[i].push(n + i);
            }
        }
        for (j, &b) in ys.iter().enumerate() {
            if half_life(b) <= eps {
                adj[m + j].push(j);
            }
            adj[m + j].extend((0..m).map(|i| n + i));
        }
        max_matching(m + n, n + m, &adj) == m + n
    };

    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// p-Wasserstein distance between the dimension-`dim` finite features,
/// solved as a square assignment problem with diagonal ghost points.
pub fn wasserstein_distance(
    x: &PersistenceDiagram,
    y: &PersistenceDiagram,
    p: f64,
    dim: usize,
    ground: GroundMetric,
) -> f64 {
    wasserstein_points(&x.points(dim), &y.points(dim), p, ground)
}

pub(crate) fn ground_distance(a: Point, b: Point, p: f64, ground: GroundMetric) -> f64 {
    match ground {
        GroundMetric::Linf => linf(a, b),
        GroundMetric::Lp => ((a.0 - b.0).abs().powf(p) + (a.1 - b.1).abs().powf(p)).powf(1.0 / p),
    }
}

pub(crate) fn diagonal_distance(a: Point, p: f64, ground: GroundMetric) -> f64 {
    match ground {
        GroundMetric::Linf => half_life(a),
        GroundMetric::Lp => half_life(a) * 2f64.powf(1.0 / p),
    }
}

pub(crate) fn wasserstein_points(xs: &[Point], ys: &[Point], p: f64, ground: GroundMetric) -> f64 {
    assert!(p >= 1.0, "Wasserstein order must be >= 1");
    let (m, n) = (xs.len(), ys.len());
    let size = m + n;
    if size == 0 {
        return 0.0;
    }
    // Rows: xs, then diagonal slots for ys. Columns: ys, then diagonal slots for xs.
    let mut cost = vec![0.0; size * size];
    for (i, &a) in xs.iter().enumerate() {
        let row = &mut cost[i * size..(i + 1) * size];
        for (j, &b) in ys.iter().enumerate() {
            row[j] = ground_distance(a, b, p, ground).powf(p);
        }
        let diag = diagonal_distance(a, p, ground).powf(p);
        row[n..].iter_mut().for_each(|c| *c = diag);
    }
    for (j, &b) in ys.iter().enumerate() {
        let diag = diagonal_distance(b, p, ground).powf(p);
        for k in 0..n {
            // Only slot j is meaningful, but any slot costs the same.
            cost[(m + k) * size + j] = diag;
        }
    }
    let (total, _) = solve_assignment(size, &cost);
    total.max(0.0).powf(1.0 / p)
}

/// Which diagram distance a test or chart uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistanceKind {
    #[default]
    Duration,
    Bottleneck,
    Wasserstein {
        p: f64,
        #[serde(default)]
        ground: GroundMetric,
    },
}

impl DistanceKind {
    pub fn between(&self, x: &PersistenceDiagram, y: &PersistenceDiagram, dim: usize) -> f64 {
        match *self {
            DistanceKind::Duration => duration_distance(x, y, dim),
            DistanceKind::Bottleneck => bottleneck_distance(x, y, dim),
            DistanceKind::Wasserstein { p, ground } => wasserstein_distance(x, y, p, dim, ground),
        }
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    /// Accepts `duration`, `bottleneck`, `wasserstein` (p = 2) or `wasserstein:<p>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "duration" => Ok(DistanceKind::Duration),
            "bottleneck" => Ok(DistanceKind::Bottleneck),
            "wasserstein" => Ok(DistanceKind::Wasserstein {
                p: 2.0,
                ground: GroundMetric::Linf,
            }),
            other => match other.strip_prefix("wasserstein:") {
                Some(p) => {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| Error::validation(format!("bad Wasserstein order '{p}'")))?;
                    if !(p >= 1.0) {
                        return Err(Error::validation("Wasserstein order must be >= 1"));
                    }
                    Ok(DistanceKind::Wasserstein {
                        p,
                        ground: GroundMetric::Linf,
                    })
                }
                None => Err(Error::validation(format!("unknown distance '{other}'"))),
            },
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKind::Duration => f.write_str("duration"),
            DistanceKind::Bottleneck => f.write_str("bottleneck"),
            DistanceKind::Wasserstein { p, .. } => write!(f, "wasserstein:{p}"),
        }
    }
}
