//! Synthetic lattice parts.
//!
//! A part is a [`Wireframe`]: nodes joined by straight struts. Point clouds
//! are produced by placing points at uniform arc length along every strut,
//! after which defects and isotropic Gaussian noise can be applied.

mod defect;
mod noise;

use std::collections::HashSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean, Point3, PointCloud};

pub use defect::{apply_defect, Axis, DefectKind, DefectSpec};
pub use noise::{add_noise, derive_seed, NoiseSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wireframe {
    pub nodes: Vec<Point3>,
    pub struts: Vec<[usize; 2]>,
    /// Target arc length between consecutive sampled points.
    pub spacing: f64,
    /// Layer index per node, for parts built layer by layer.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layers: Vec<usize>,
    /// Interior points per strut, overriding the spacing rule. Defects set
    /// this so moved struts keep their nominal sample count.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<usize>,
}

impl Wireframe {
    pub fn new(nodes: Vec<Point3>, struts: Vec<[usize; 2]>, spacing: f64) -> Result<Self> {
        let w = Wireframe {
            nodes,
            struts,
            spacing,
            layers: Vec::new(),
            samples: Vec::new(),
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0) {
            return Err(Error::validation("strut spacing must be positive"));
        }
        if self.nodes.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::validation("wireframe node has non-finite coordinate"));
        }
        let mut seen = HashSet::new();
        for (s, &[a, b]) in self.struts.iter().enumerate() {
            if a >= self.nodes.len() || b >= self.nodes.len() || a == b {
                return Err(Error::validation(format!("strut {s} has invalid endpoints ({a},{b})")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::validation(format!("strut {s} duplicates an earlier strut")));
            }
        }
        if !self.layers.is_empty() && self.layers.len() != self.nodes.len() {
            return Err(Error::validation("layer table length differs from node count"));
        }
        if !self.samples.is_empty() && self.samples.len() != self.struts.len() {
            return Err(Error::validation("sample count table length differs from strut count"));
        }
        Ok(())
    }

    pub fn strut_length(&self, s: usize) -> f64 {
        let [a, b] = self.struts[s];
        euclidean(&self.nodes[a], &self.nodes[b])
    }

    /// Number of sampled points strictly inside strut `s`.
    pub fn interior_points(&self, s: usize) -> usize {
        if let Some(&k) = self.samples.get(s) {
            return k;
        }
        segments(self.strut_length(s), self.spacing) - 1
    }

    /// Size of the cloud [`sample_cloud`] produces.
    pub fn sampled_len(&self) -> usize {
        self.nodes.len() + (0..self.struts.len()).map(|s| self.interior_points(s)).sum::<usize>()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.iter().max().map_or(0, |m| m + 1)
    }

    /// Connected components of the strut graph.
    pub fn components(&self) -> usize {
        let mut uf = crate::persistence::UnionFind::new(self.nodes.len());
        for &[a, b] in &self.struts {
            uf.union(a as u32, b as u32);
        }
        uf.components()
    }

    /// Independent cycles of the strut graph: struts - nodes + components.
    pub fn cycle_rank(&self) -> usize {
        self.struts.len() + self.components() - self.nodes.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("wireframe serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let w: Wireframe = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        w.validate()?;
        Ok(w)
    }

    fn push_strut(&mut self, a: usize, b: usize) {
        self.struts.push([a, b]);
    }
}

fn segments(length: f64, spacing: f64) -> usize {
    // A tiny relative slack keeps exact multiples (1.0 / 0.25) from rounding up.
    ((length / spacing) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Nodes first (in index order), then each strut's interior points in
/// strut order and increasing arc position.
pub fn sample_cloud(w: &Wireframe) -> PointCloud {
    let mut points = Vec::with_capacity(w.sampled_len());
    points.extend_from_slice(&w.nodes);
    for (s, &[a, b]) in w.struts.iter().enumerate() {
        let (pa, pb) = (w.nodes[a], w.nodes[b]);
        let m = w.interior_points(s) + 1;
        for step in 1..m {
            let t = step as f64 / m as f64;
            points.push([
                pa[0] + t * (pb[0] - pa[0]),
                pa[1] + t * (pb[1] - pa[1]),
                pa[2] + t * (pb[2] - pa[2]),
            ]);
        }
    }
    PointCloud::new(points).expect("wireframe nodes are finite and non-empty")
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} must be positive, got {x}")))
    }
}

/// Wireframe unit cell: 8 corners, 12 edges. Corner `4x + 2y + z` sits at
/// `(x, y, z) * edge`.
pub fn gen_cube(edge: f64, spacing: f64) -> Result<Wireframe> {
    check_positive("edge", edge)?;
    check_positive("spacing", spacing)?;
    let nodes: Vec<Point3> = (0..8)
        .map(|c| {
            [
                ((c >> 2) & 1) as f64 * edge,
                ((c >> 1) & 1) as f64 * edge,
                (c & 1) as f64 * edge,
            ]
        })
        .collect();
    let mut struts = Vec::with_capacity(12);
    for c in 0..8usize {
        for bit in [4usize, 2, 1] {
            if c & bit == 0 {
                struts.push([c, c | bit]);
            }
        }
    }
    Wireframe::new(nodes, struts, spacing)
}

/// Open square tube built from `layers` horizontal rings joined at the
/// corners; total height equals `edge`.
pub fn gen_layered_tube(edge: f64, layers: usize, spacing: f64) -> Result<Wireframe> {
    check_positive("edge", edge)?;
    check_positive("spacing", spacing)?;
    if layers < 2 {
        return Err(Error::validation("a layered tube needs at least 2 layers"));
    }
    let corners = [[0.0, 0.0], [edge, 0.0], [edge, edge], [0.0, edge]];
    let mut w = Wireframe {
        nodes: Vec::with_capacity(4 * layers),
        struts: Vec::new(),
        spacing,
        samples: Vec::new(),
        layers: Vec::with_capacity(4 * layers),
    };
    for l in 0..layers {
        let z = edge * l as f64 / (layers - 1) as f64;
        for [x, y] in corners {
            w.nodes.push([x, y, z]);
            w.layers.push(l);
        }
    }
    for l in 0..layers {
        let base = 4 * l;
        for c in 0..4 {
            w.push_strut(base + c, base + (c + 1) % 4);
        }
        if l + 1 < layers {
            for c in 0..4 {
                w.push_strut(base + c, base + 4 + c);
            }
        }
    }
    w.validate()?;
    Ok(w)
}

/// `nx * ny * nz` grid of cube cells sharing faces; node `(i, j, k)` has
/// index `(i * (ny + 1) + j) * (nz + 1) + k`.
pub fn gen_cube_lattice(nx: usize, ny: usize, nz: usize, cell_edge: f64, spacing: f64) -> Result<Wireframe> {
    check_positive("cell_edge", cell_edge)?;
    check_positive("spacing", spacing)?;
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::validation("lattice cell counts must be at least 1"));
    }
    let idx = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * (nz + 1) + k;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for i in 0..=nx {
        for j in 0..=ny {
            for k in 0..=nz {
                nodes.push([i as f64 * cell_edge, j as f64 * cell_edge, k as f64 * cell_edge]);
            }
        }
    }
    let mut struts = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            for k in 0..=nz {
                if i < nx {
                    struts.push([idx(i, j, k), idx(i + 1, j, k)]);
                }
                if j < ny {
                    struts.push([idx(i, j, k), idx(i, j + 1, k)]);
                }
                if k < nz {
                    struts.push([idx(i, j, k), idx(i, j, k + 1)]);
                }
            }
        }
    }
    let mut w = Wireframe::new(nodes, struts, spacing)?;
    // Horizontal node planes double as layers.
    w.layers = (0..w.nodes.len()).map(|n| n % (nz + 1)).collect();
    Ok(w)
}

/// Egg-shaped strut lattice standing in for a skeletonized CAD lattice.
///
/// `rings` horizontal polygons of `struts_per_ring` nodes follow an egg
/// profile between z = 0 and z = `height`; consecutive rings are joined by
/// vertical struts and one diagonal per quad, and both end rings are closed
/// by a hub node.
pub fn gen_egg_like_lattice(
    rings: usize,
    struts_per_ring: usize,
    height: f64,
    radius: f64,
    spacing: f64,
) -> Result<Wireframe> {
    check_positive("height", height)?;
    check_positive("radius", radius)?;
    check_positive("spacing", spacing)?;
    if rings < 2 {
        return Err(Error::validation("egg lattice needs at least 2 rings"));
    }
    if struts_per_ring < 3 {
        return Err(Error::validation("egg lattice rings need at least 3 struts"));
    }
    let s = struts_per_ring;
    let mut nodes = Vec::with_capacity(rings * s + 2);
    for i in 0..rings {
        // Ring heights avoid the poles, which the hubs occupy.
        let t = (i as f64 + 0.5) / rings as f64;
        let z = height * t;
        // Wider below the middle, narrower above: an egg rather than a sphere.
        let r = radius * (PI * t).sin().powf(0.75) * (1.08 - 0.16 * t);
        let twist = if i % 2 == 1 { PI / s as f64 } else { 0.0 };
        for j in 0..s {
            let theta = 2.0 * PI * j as f64 / s as f64 + twist;
            nodes.push([r * theta.cos(), r * theta.sin(), z]);
        }
    }
    let bottom = nodes.len();
    nodes.push([0.0, 0.0, 0.0]);
    let top = nodes.len();
    nodes.push([0.0, 0.0, height]);

    let at = |i: usize, j: usize| i * s + (j % s);
    let mut struts = Vec::new();
    for i in 0..rings {
        for j in 0..s {
            struts.push([at(i, j), at(i, j + 1)]);
        }
        if i + 1 < rings {
            for j in 0..s {
                struts.push([at(i, j), at(i + 1, j)]);
                // Odd rings are rotated half a step, so the diagonal follows the twist.
                let k = if i % 2 == 0 { j + s - 1 } else { j + 1 };
                struts.push([at(i, j), at(i + 1, k)]);
            }
        }
    }
    for j in (0..s).step_by(2) {
        struts.push([bottom, at(0, j)]);
        struts.push([top, at(rings - 1, j)]);
    }
    let mut w = Wireframe::new(nodes, struts, spacing)?;
    let mut layers: Vec<usize> = (0..rings * s).map(|n| n / s + 1).collect();
    layers.push(0);
    layers.push(rings + 1);
    w.layers = layers;
    Ok(w)
}
