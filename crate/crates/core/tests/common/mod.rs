//! Brute-force oracles shared by the property suites and the acceptance run.
#![allow(dead_code)]

use topospc::geometry::DistanceMatrix;
use topospc::metrics::{DistanceKind, GroundMetric};
use topospc::persistence::{Feature, PersistenceDiagram};

pub type Pt = (f64, f64);

/// Dimension-1 diagram from (birth, lifetime) pairs.
pub fn diagram(points: &[Pt]) -> PersistenceDiagram {
    PersistenceDiagram::new(points.iter().map(|&(b, l)| Feature::finite(1, b, b + l)).collect())
}

/// Best value of `fold` over every partial matching between `xs` and `ys`;
/// unmatched points go to the diagonal.
pub fn brute_force(
    xs: &[Pt],
    ys: &[Pt],
    pair: &dyn Fn(Pt, Pt) -> f64,
    diag: &dyn Fn(Pt) -> f64,
    fold: &dyn Fn(&[f64]) -> f64,
) -> f64 {
    struct Search<'a> {
        xs: &'a [Pt],
        ys: &'a [Pt],
        pair: &'a dyn Fn(Pt, Pt) -> f64,
        diag: &'a dyn Fn(Pt) -> f64,
        fold: &'a dyn Fn(&[f64]) -> f64,
        used: Vec<bool>,
        costs: Vec<f64>,
        best: f64,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize) {
            if i == self.xs.len() {
                let before = self.costs.len();
                for (j, &y) in self.ys.iter().enumerate() {
                    if !self.used[j] {
                        self.costs.push((self.diag)(y));
                    }
                }
                self.best = self.best.min((self.fold)(&self.costs));
                self.costs.truncate(before);
                return;
            }
            self.costs.push((self.diag)(self.xs[i]));
            self.go(i + 1);
            self.costs.pop();
            for j in 0..self.ys.len() {
                if !self.used[j] {
                    self.used[j] = true;
                    self.costs.push((self.pair)(self.xs[i], self.ys[j]));
                    self.go(i + 1);
                    self.costs.pop();
                    self.used[j] = false;
                }
            }
        }
    }
    let mut s = Search {
        xs,
        ys,
        pair,
        diag,
        fold,
        used: vec![false; ys.len()],
        costs: Vec::new(),
        best: f64::INFINITY,
    };
    s.go(0);
    s.best
}

pub fn linf(a: Pt, b: Pt) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

pub fn half(a: Pt) -> f64 {
    (a.1 - a.0) / 2.0
}

pub fn bottleneck_oracle(x: &PersistenceDiagram, y: &PersistenceDiagram) -> f64 {
    let fold = |c: &[f64]| c.iter().copied().fold(0.0, f64::max);
    brute_force(&x.points(1), &y.points(1), &linf, &half, &fold)
}

pub fn wasserstein_oracle(x: &PersistenceDiagram, y: &PersistenceDiagram, p: f64, ground: GroundMetric) -> f64 {
    let pair = move |a: Pt, b: Pt| match ground {
        GroundMetric::Linf => linf(a, b),
        GroundMetric::Lp => ((a.0 - b.0).abs().powf(p) + (a.1 - b.1).abs().powf(p)).powf(1.0 / p),
    };
    let diag = move |a: Pt| match ground {
        GroundMetric::Linf => half(a),
        GroundMetric::Lp => half(a) * 2f64.powf(1.0 / p),
    };
    let fold = move |c: &[f64]| c.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p);
    brute_force(&x.points(1), &y.points(1), &pair, &diag, &fold)
}

/// Connected components of the graph with the edges of length <= t.
pub fn components_at(dm: &DistanceMatrix, t: f64) -> usize {
    let n = dm.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v] && dm.get(u, v) <= t {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}

/// Every pairwise distance, plus values just either side of it.
pub fn thresholds(dm: &DistanceMatrix) -> Vec<f64> {
    let n = dm.len();
    let mut ts = vec![0.0];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dm.get(i, j);
            ts.extend([d, d * 0.999, d * 1.001]);
        }
    }
    ts
}

/// Within-group pair totals, recomputed from scratch for every choice of
/// the one diagram set aside. `all` holds the reference followed by the new
/// diagram.
pub fn direct_null_stats(all: &[PersistenceDiagram], kind: DistanceKind, dim: usize) -> Vec<f64> {
    let m = all.len();
    (0..m)
        .map(|out| {
            let mut s = 0.0;
            for i in 0..m {
                for j in (i + 1)..m {
                    if i != out && j != out {
                        s += kind.between(&all[i], &all[j], dim);
                    }
                }
            }
            s
        })
        .collect()
}

pub fn same_features(a: &PersistenceDiagram, b: &PersistenceDiagram) -> bool {
    a.len() == b.len()
        && a.features().iter().zip(b.features()).all(|(f, g)| {
            f.dimension == g.dimension
                && (f.birth - g.birth).abs() < 1e-12
                && (f.death == g.death || (f.death - g.death).abs() < 1e-12)
        })
}

/// Alternating sum of the Betti numbers.
pub fn alternating(betti: &[usize]) -> i64 {
    betti
        .iter()
        .enumerate()
        .map(|(k, &b)| if k % 2 == 0 { b as i64 } else { -(b as i64) })
        .sum()
}
