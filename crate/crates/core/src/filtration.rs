//! Vietoris-Rips filtrations.
//!
//! The filtration value of a simplex is its diameter, the largest pairwise
//! distance among its vertices. Simplices are ordered by value, then by
//! dimension, then lexicographically by vertex list, so that every face
//! precedes its cofaces and the order is fully deterministic.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;

/// Default cap on the total number of simplices a filtration may hold.
pub const DEFAULT_SIMPLEX_BUDGET: usize = 50_000_000;

/// Clouds up to this size get a full (uncapped) filtration when no cap is given.
pub const FULL_FILTRATION_MAX_POINTS: usize = 64;

/// An owned simplex: sorted vertex indices plus its filtration value.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<u32>,
    pub value: f64,
}

impl Simplex {
    pub fn dimension(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Borrowed view of one simplex inside a [`Filtration`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexRef<'a> {
    pub vertices: &'a [u32],
    pub value: f64,
}

impl SimplexRef<'_> {
    pub fn dimension(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn to_owned(&self) -> Simplex {
        Simplex {
            vertices: self.vertices.to_vec(),
            value: self.value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipsOptions {
    pub max_dimension: usize,
    pub max_diameter: f64,
    pub simplex_budget: usize,
}

impl RipsOptions {
    pub fn new(max_dimension: usize, max_diameter: f64) -> Self {
        RipsOptions {
            max_dimension,
            max_diameter,
            simplex_budget: DEFAULT_SIMPLEX_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.simplex_budget = budget;
        self
    }
}

/// Simplices of a Rips complex in filtration order.
///
/// Storage is flat: simplex `i` has dimension `dims[i]`, value `values[i]`
/// and vertices `vertex_data[offsets[i]..offsets[i] + dims[i] + 1]`.
#[derive(Debug, Clone)]
pub struct Filtration {
    n_vertices: usize,
    max_dimension: usize,
    max_diameter: f64,
    dims: Vec<u8>,
    values: Vec<f64>,
    offsets: Vec<u32>,
    vertex_data: Vec<u32>,
}

impl Filtration {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn max_dimension(&self) -> usize {
        self.max_dimension
    }

    pub fn max_diameter(&self) -> f64 {
        self.max_diameter
    }

    #[inline]
    pub fn dimension(&self, i: usize) -> usize {
        self.dims[i] as usize
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    #[inline]
    pub fn vertices(&self, i: usize) -> &[u32] {
        let start = self.offsets[i] as usize;
        &self.vertex_data[start..start + self.dims[i] as usize + 1]
    }

    pub fn get(&self, i: usize) -> SimplexRef<'_> {
        SimplexRef {
            vertices: self.vertices(i),
            value: self.values[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = SimplexRef<'_>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// Number of simplices of each dimension `0..=max_dimension` with value at most `t`.
    pub fn simplex_counts_at(&self, t: f64) -> Vec<usize> {
        let mut counts = vec![0usize; self.max_dimension + 1];
        // Sorted by value, so stop at the first simplex past t.
        for i in 0..self.len() {
            if self.values[i] > t {
                break;
            }
            counts[self.dims[i] as usize] += 1;
        }
        counts
    }

    pub fn euler_characteristic_at(&self, t: f64) -> i64 {
        self.simplex_counts_at(t)
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c as i64 } else { -(c as i64) })
            .sum()
    }
}

/// Full-filtration cap for a distance matrix: its diameter plus a small margin.
pub fn full_cap(dm: &DistanceMatrix) -> f64 {
    let d = dm.max_distance();
    d + 1e-9 * d.max(1.0)
}

/// Builds the Rips filtration of `dm` up to `opts.max_dimension`, keeping
/// simplices with diameter at most `opts.max_diameter`.
pub fn build_rips(dm: &DistanceMatrix, opts: RipsOptions) -> Result<Filtration> {
    if !(opts.max_diameter > 0.0) {
        return Err(Error::validation("max_diameter must be positive"));
    }
    if opts.max_dimension > u8::MAX as usize - 1 {
        return Err(Error::validation("max_dimension too large"));
    }
    let n = dm.len();
    let cap = opts.max_diameter;
    let budget = opts.simplex_budget;

    // layers[k] holds k-simplices as flat vertex tuples plus their values.
    let mut layer_vertices: Vec<Vec<u32>> = Vec::with_capacity(opts.max_dimension + 1);
    let mut layer_values: Vec<Vec<f64>> = Vec::with_capacity(opts.max_dimension + 1);
    let mut total = n;
    if total > budget {
        return Err(Error::Budget {
            dimension: 0,
            budget,
        });
    }
    layer_vertices.push((0..n as u32).collect());
    layer_values.push(vec![0.0; n]);

    // Forward neighbours within the cap, sorted ascending.
    let neighbours: Vec<Vec<u32>> = (0..n)
        .map(|u| {
            ((u + 1)..n)
                .filter(|&v| dm.get(u, v) <= cap)
                .map(|v| v as u32)
                .collect()
        })
        .collect();

    for k in 1..=opts.max_dimension {
        let prev_vertices = &layer_vertices[k - 1];
        let prev_values = &layer_values[k - 1];
        let mut verts = Vec::new();
        let mut vals = Vec::new();
        for (s, face) in prev_vertices.chunks_exact(k).enumerate() {
            let last = *face.last().unwrap() as usize;
            'cand: for &w in &neighbours[last] {
                let mut value = prev_values[s];
                for &u in &face[..k - 1] {
                    let d = dm.get(u as usize, w as usize);
                    if d > cap {
                        continue 'cand;
                    }
                    value = value.max(d);
                }
                value = value.max(dm.get(last, w as usize));
                total += 1;
                if total > budget {
                    return Err(Error::Budget { dimension: k, budget });
                }
                verts.extend_from_slice(face);
                verts.push(w);
                vals.push(value);
            }
        }
        let empty = vals.is_empty();
        layer_vertices.push(verts);
        layer_values.push(vals);
        if empty {
            // Nothing to extend; higher layers stay empty.
            for _ in (k + 1)..=opts.max_dimension {
                layer_vertices.push(Vec::new());
                layer_values.push(Vec::new());
            }
            break;
        }
    }

    let mut order: Vec<(u8, u32)> = Vec::with_capacity(total);
    for (k, vals) in layer_values.iter().enumerate() {
        order.extend((0..vals.len() as u32).map(|i| (k as u8, i)));
    }
    let tuple = |k: u8, i: u32| -> &[u32] {
        let w = k as usize + 1;
        &layer_vertices[k as usize][i as usize * w..(i as usize + 1) * w]
    };
    order.sort_unstable_by(|&(ka, ia), &(kb, ib)| {
        let va = layer_values[ka as usize][ia as usize];
        let vb = layer_values[kb as usize][ib as usize];
        va.partial_cmp(&vb)
            .unwrap_or(Ordering::Equal)
            .then(ka.cmp(&kb))
            .then_with(|| tuple(ka, ia).cmp(tuple(kb, ib)))
    });

    let mut dims = Vec::with_capacity(total);
    let mut values = Vec::with_capacity(total);
    let mut offsets = Vec::with_capacity(total);
    let mut vertex_data = Vec::new();
    for &(k, i) in &order {
        dims.push(k);
        values.push(layer_values[k as usize][i as usize]);
        offsets.push(vertex_data.len() as u32);
        vertex_data.extend_from_slice(tuple(k, i));
    }

    Ok(Filtration {
        n_vertices: n,
        max_dimension: opts.max_dimension,
        max_diameter: cap,
        dims,
        values,
        offsets,
        vertex_data,
    })
}
