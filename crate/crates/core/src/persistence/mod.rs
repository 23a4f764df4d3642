//! Persistence diagrams of Rips filtrations.
//!
//! Dimension-0 features come from a union-find sweep over edges in filtration
//! order. Higher dimensions come from a twist-reduced boundary matrix over
//! the two-element field. Pairs with zero persistence are dropped, and
//! classes still alive at the filtration cap are kept as essential features
//! with an infinite death.

mod cohomology;
mod reduction;
mod union_find;

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtration::{
    build_rips, full_cap, Filtration, RipsOptions, DEFAULT_SIMPLEX_BUDGET, FULL_FILTRATION_MAX_POINTS,
};
use crate::geometry::{pairwise_distances, DistanceMatrix, PointCloud};

pub use union_find::UnionFind;

/// One topological feature: a class born at `birth` that dies at `death`.
/// Essential classes carry `death == f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub dimension: usize,
    pub birth: f64,
    pub death: f64,
}

impl Feature {
    pub fn finite(dimension: usize, birth: f64, death: f64) -> Self {
        Feature {
            dimension,
            birth,
            death,
        }
    }

    pub fn essential(dimension: usize, birth: f64) -> Self {
        Feature {
            dimension,
            birth,
            death: f64::INFINITY,
        }
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    /// Lifetime `death - birth`; infinite for essential classes.
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    features: Vec<Feature>,
    source_label: Option<String>,
}

impl PersistenceDiagram {
    pub fn new(features: Vec<Feature>) -> Self {
        PersistenceDiagram {
            features,
            source_label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.source_label = Some(label.into());
        self
    }

    pub fn source_label(&self) -> Option<&str> {
        self.source_label.as_deref()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Finite features of one dimension.
    pub fn finite(&self, dim: usize) -> impl Iterator<Item = &Feature> + '_ {
        self.features
            .iter()
            .filter(move |f| f.dimension == dim && !f.is_essential())
    }

    pub fn essential_count(&self, dim: usize) -> usize {
        self.features
            .iter()
            .filter(|f| f.dimension == dim && f.is_essential())
            .count()
    }

    /// Finite (birth, death) points of one dimension.
    pub fn points(&self, dim: usize) -> Vec<(f64, f64)> {
        self.finite(dim).map(|f| (f.birth, f.death)).collect()
    }

    /// Lifetimes of the finite features of one dimension, in diagram order.
    pub fn durations(&self, dim: usize) -> Vec<f64> {
        self.finite(dim).map(Feature::persistence).collect()
    }

    /// Copy with essential classes removed.
    pub fn without_essential(&self) -> Self {
        PersistenceDiagram {
            features: self.features.iter().copied().filter(|f| !f.is_essential()).collect(),
            source_label: self.source_label.clone(),
        }
    }

    /// Copy holding only features of dimension `dim`.
    pub fn restrict(&self, dim: usize) -> Self {
        PersistenceDiagram {
            features: self.features.iter().copied().filter(|f| f.dimension == dim).collect(),
            source_label: self.source_label.clone(),
        }
    }

    pub fn max_dimension(&self) -> Option<usize> {
        self.features.iter().map(|f| f.dimension).max()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dimension", "birth", "death"])?;
        for f in self.sorted_features() {
            w.write_record([f.dimension.to_string(), fmt_real(f.birth), fmt_real(f.death)])?;
        }
        w.flush().map_err(|e| Error::io("<diagram csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let mut features = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Parse {
                path: "<diagram csv>".into(),
                line: row + 2,
                message: format!("bad {what}"),
            };
            if rec.len() != 3 {
                return Err(bad("column count"));
            }
            let dimension: usize = rec[0].parse().map_err(|_| bad("dimension"))?;
            let birth: f64 = rec[1].parse().map_err(|_| bad("birth"))?;
            let death: f64 = rec[2].parse().map_err(|_| bad("death"))?;
            if !birth.is_finite() || death.is_nan() || death < birth {
                return Err(bad("birth/death pair"));
            }
            features.push(Feature {
                dimension,
                birth,
                death,
            });
        }
        Ok(PersistenceDiagram::new(features))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut d = Self::read_csv(std::io::BufReader::new(file))?;
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            d.source_label = Some(stem.to_string());
        }
        Ok(d)
    }

    fn sorted_features(&self) -> Vec<Feature> {
        let mut v = self.features.clone();
        v.sort_by(|a, b| {
            a.dimension
                .cmp(&b.dimension)
                .then(a.birth.total_cmp(&b.birth))
                .then(a.death.total_cmp(&b.death))
        });
        v
    }
}

fn fmt_real(x: f64) -> String {
    if x.is_infinite() {
        "inf".to_string()
    } else {
        format!("{x:?}")
    }
}

/// Dimension-0 diagram of the full filtration on `dm`, by single linkage.
pub fn persistence_h0(dm: &DistanceMatrix) -> PersistenceDiagram {
    h0_capped(dm, f64::INFINITY)
}

fn h0_capped(dm: &DistanceMatrix, cap: f64) -> PersistenceDiagram {
    let n = dm.len();
    let mut edges: Vec<(f64, u32, u32)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        let row = dm.row(i);
        for j in (i + 1)..n {
            if row[j] <= cap {
                edges.push((row[j], i as u32, j as u32));
            }
        }
    }
    edges.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut uf = UnionFind::new(n);
    let mut features = Vec::with_capacity(n);
    for &(d, i, j) in &edges {
        if uf.union(i, j) {
            if d > 0.0 {
                features.push(Feature::finite(0, 0.0, d));
            }
            if uf.components() == 1 {
                break;
            }
        }
    }
    for _ in 0..uf.components() {
        features.push(Feature::essential(0, 0.0));
    }
    PersistenceDiagram::new(features)
}

/// Persistence diagram of a filtration in dimensions `0..max_dimension`.
pub fn persistence(f: &Filtration) -> PersistenceDiagram {
    let mut features = Vec::new();
    let negative_edges = h0_from_filtration(f, &mut features);
    let n_edges = (0..f.len()).filter(|&i| f.dimension(i) == 1).count();
    let positive_edges = n_edges - negative_edges.iter().filter(|&&b| b).count();

    if f.max_dimension() >= 2 {
        let out = reduction::reduce_twist(f, positive_edges);
        for p in &out.pairs {
            let (b, d) = (p.birth as usize, p.death as usize);
            let (vb, vd) = (f.value(b), f.value(d));
            if vd > vb {
                features.push(Feature::finite(f.dimension(b), vb, vd));
            }
        }
        for i in 0..f.len() {
            let k = f.dimension(i);
            if k == 0 || k >= f.max_dimension() || out.paired_birth[i] {
                continue;
            }
            let positive = if k == 1 { !negative_edges[i] } else { out.positive[i] };
            if positive {
                features.push(Feature::essential(k, f.value(i)));
            }
        }
    }
    sort_features(&mut features);
    PersistenceDiagram::new(features)
}

/// How a point cloud is turned into a diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhSettings {
    /// Highest homology dimension to report.
    pub max_homology_dim: usize,
    /// Rips diameter cap; `None` means the full filtration, which is only
    /// allowed for small clouds.
    pub max_diameter: Option<f64>,
    pub simplex_budget: usize,
}

impl PhSettings {
    pub fn new(max_homology_dim: usize, max_diameter: Option<f64>) -> Self {
        PhSettings {
            max_homology_dim,
            max_diameter,
            simplex_budget: DEFAULT_SIMPLEX_BUDGET,
        }
    }
}

/// Diagram of a cloud in dimensions `0..=max_homology_dim`.
///
/// Dimension 0 alone skips the filtration and uses single linkage on the
/// full distance matrix.
pub fn cloud_persistence(cloud: &PointCloud, settings: &PhSettings) -> Result<PersistenceDiagram> {
    let dm = pairwise_distances(cloud);
    let cap = match settings.max_diameter {
        Some(c) => c,
        None if settings.max_homology_dim == 0 => f64::INFINITY,
        None if cloud.len() <= FULL_FILTRATION_MAX_POINTS => full_cap(&dm),
        None => {
            return Err(Error::validation(format!(
                "clouds above {FULL_FILTRATION_MAX_POINTS} points need an explicit diameter cap ({} points given)",
                cloud.len()
            )))
        }
    };
    let diagram = if settings.max_homology_dim == 0 {
        h0_capped(&dm, cap)
    } else if settings.max_homology_dim == 1 {
        cohomology::rips_h0_h1(&dm, cap, settings.simplex_budget)?
    } else {
        let opts = RipsOptions::new(settings.max_homology_dim + 1, cap).with_budget(settings.simplex_budget);
        persistence(&build_rips(&dm, opts)?)
    };
    Ok(match cloud.label() {
        Some(l) => diagram.with_label(l),
        None => diagram,
    })
}

/// Reference implementation: reduces every column of the boundary matrix
/// left to right with no clearing and no union-find shortcut.
pub fn persistence_naive(f: &Filtration) -> PersistenceDiagram {
    let (pairs, unpaired) = reduction::reduce_naive(f);
    let top = f.max_dimension();
    let mut features = Vec::new();
    for p in pairs {
        let (b, d) = (p.birth as usize, p.death as usize);
        let k = f.dimension(b);
        if k < top && f.value(d) > f.value(b) {
            features.push(Feature::finite(k, f.value(b), f.value(d)));
        }
    }
    for j in unpaired {
        let k = f.dimension(j as usize);
        if k < top.max(1) {
            features.push(Feature::essential(k, f.value(j as usize)));
        }
    }
    sort_features(&mut features);
    PersistenceDiagram::new(features)
}

/// Sweeps edges in filtration order, emitting H0 features; returns
/// per-simplex flags marking the edges that merge two components.
fn h0_from_filtration(f: &Filtration, features: &mut Vec<Feature>) -> Vec<bool> {
    let mut uf = UnionFind::new(f.n_vertices());
    let mut negative = vec![false; f.len()];
    for i in 0..f.len() {
        if f.dimension(i) != 1 {
            continue;
        }
        let v = f.vertices(i);
        if uf.union(v[0], v[1]) {
            negative[i] = true;
            let d = f.value(i);
            if d > 0.0 {
                features.push(Feature::finite(0, 0.0, d));
            }
        }
    }
    for _ in 0..uf.components() {
        features.push(Feature::essential(0, 0.0));
    }
    negative
}

pub(crate) fn sort_features(features: &mut [Feature]) {
    features.sort_by(|a, b| {
        a.dimension
            .cmp(&b.dimension)
            .then(a.birth.total_cmp(&b.birth))
            .then(a.death.total_cmp(&b.death))
    });
}

/// Betti numbers at filtration value `t`, for dimensions `0..=max feature dimension`.
pub fn betti_numbers(d: &PersistenceDiagram, t: f64) -> Vec<usize> {
    let top = match d.max_dimension() {
        Some(k) => k,
        None => return Vec::new(),
    };
    let mut betti = vec![0usize; top + 1];
    for f in d.features() {
        if f.birth <= t && t < f.death {
            betti[f.dimension] += 1;
        }
    }
    betti
}

/// One bar of a barcode; `end` is infinite for essential classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub dimension: usize,
    pub start: f64,
    pub end: f64,
}

impl fmt::Display for Bar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.end.is_infinite() {
            write!(f, "H{} [{}, inf)", self.dimension, self.start)
        } else {
            write!(f, "H{} [{}, {})", self.dimension, self.start, self.end)
        }
    }
}

pub fn barcode(d: &PersistenceDiagram) -> Vec<Bar> {
    d.sorted_features()
        .into_iter()
        .map(|f| Bar {
            dimension: f.dimension,
            start: f.birth,
            end: f.death,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{build_rips, full_cap, RipsOptions};
    use crate::geometry::{pairwise_distances, PointCloud};

    fn cube_dm() -> DistanceMatrix {
        let mut pts = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    pts.push([x as f64, y as f64, z as f64]);
                }
            }
        }
        pairwise_distances(&PointCloud::new(pts).unwrap())
    }

    fn cube_diagram(max_dim: usize) -> PersistenceDiagram {
        let dm = cube_dm();
        persistence(&build_rips(&dm, RipsOptions::new(max_dim, full_cap(&dm))).unwrap())
    }

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn cube_h0_union_find() {
        let d = persistence_h0(&cube_dm());
        let finite: Vec<_> = d.finite(0).collect();
        assert_eq!(finite.len(), 7);
        assert!(finite.iter().all(|f| f.birth == 0.0 && approx(f.death, 1.0)));
        assert_eq!(d.essential_count(0), 1);
    }

    #[test]
    fn single_point_h0() {
        let d = persistence_h0(&pairwise_distances(&PointCloud::new(vec![[0.0; 3]]).unwrap()));
        assert_eq!(d.finite(0).count(), 0);
        assert_eq!(d.essential_count(0), 1);
    }

    #[test]
    fn collinear_merge_distances() {
        let pts = vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [5.0, 0.0, 0.0]];
        let d = persistence_h0(&pairwise_distances(&PointCloud::new(pts.clone()).unwrap()));
        let mut deaths: Vec<f64> = d.finite(0).map(|f| f.death).collect();
        deaths.sort_by(f64::total_cmp);
        assert_eq!(deaths, vec![2.0, 3.0]);

        let dm = pairwise_distances(&PointCloud::new(pts).unwrap());
        let full = persistence(&build_rips(&dm, RipsOptions::new(2, full_cap(&dm))).unwrap());
        assert_eq!(full.finite(1).count(), 0);
        assert_eq!(full.essential_count(1), 0);
    }

    #[test]
    fn cube_h1_five_loops() {
        let d = cube_diagram(2);
        let h1: Vec<_> = d.finite(1).collect();
        assert_eq!(h1.len(), 5);
        assert!(h1.iter().all(|f| approx(f.birth, 1.0) && approx(f.death, 2f64.sqrt())));
    }

    #[test]
    fn cube_h3_void() {
        let d = cube_diagram(4);
        assert_eq!(d.finite(0).count(), 7);
        assert_eq!(d.finite(1).count(), 5);
        assert_eq!(d.finite(2).count(), 0);
        let h3: Vec<_> = d.finite(3).collect();
        assert_eq!(h3.len(), 1);
        assert!(approx(h3[0].birth, 2f64.sqrt()) && approx(h3[0].death, 3f64.sqrt()));
        assert_eq!(d.features().iter().filter(|f| f.is_essential()).count(), 1);
        assert_eq!(persistence_naive(&build_rips(&cube_dm(), RipsOptions::new(4, 2.0)).unwrap()), d);
    }

    #[test]
    fn cube_betti_numbers() {
        let d = cube_diagram(4);
        let b = betti_numbers(&d, 1.2);
        assert_eq!((b[0], b[1]), (1, 5));
        let b = betti_numbers(&d, 1.5);
        assert_eq!((b[1], b[3]), (0, 1));
        assert_eq!(betti_numbers(&d, 0.5)[0], 8);
    }

    #[test]
    fn cube_barcode() {
        let bars = barcode(&cube_diagram(4).without_essential());
        assert_eq!(bars.len(), 13);
        assert!(bars[..7].iter().all(|b| b.dimension == 0 && approx(b.end, 1.0)));
        assert!(bars[7..12].iter().all(|b| b.dimension == 1 && approx(b.start, 1.0)));
        assert_eq!(bars[12].dimension, 3);
        assert!(barcode(&PersistenceDiagram::default()).is_empty());
        let ess = barcode(&PersistenceDiagram::new(vec![Feature::essential(0, 0.0)]));
        assert!(ess[0].end.is_infinite());
        assert_eq!(ess[0].to_string(), "H0 [0, inf)");
    }

    #[test]
    fn essential_h1_when_cap_too_small() {
        // Square of side 1: the loop is born at 1 and dies at sqrt(2).
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        let dm = pairwise_distances(&PointCloud::new(pts).unwrap());
        let capped = persistence(&build_rips(&dm, RipsOptions::new(2, 1.2)).unwrap());
        assert_eq!(capped.essential_count(1), 1);
        let full = persistence(&build_rips(&dm, RipsOptions::new(2, 2.0)).unwrap());
        assert_eq!(full.essential_count(1), 0);
        assert_eq!(full.finite(1).count(), 1);
    }

    #[test]
    fn csv_round_trip_with_inf() {
        let d = cube_diagram(2);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dimension,birth,death\n"));
        assert!(text.contains("0,0.0,inf"));
        let back = PersistenceDiagram::read_csv(&buf[..]).unwrap();
        assert_eq!(back.features(), d.features());
    }

    #[test]
    fn csv_rejects_bad_rows() {
        assert!(PersistenceDiagram::read_csv("dimension,birth,death\n0,2,1\n".as_bytes()).is_err());
        assert!(PersistenceDiagram::read_csv("dimension,birth,death\nx,0,1\n".as_bytes()).is_err());
    }
}
