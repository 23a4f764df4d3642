//! H0 and H1 of a Rips filtration without materialising the triangles.
//!
//! Edges are reduced as coboundary columns, latest first, with the triangle
//! cofaces enumerated on the fly. Edges that kill an H0 class are skipped
//! (their columns reduce to zero). The pairs equal those of the boundary
//! reduction.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use super::{sort_features, Feature, PersistenceDiagram, UnionFind};
use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;

/// A triangle as (diameter, lexicographic code).
type Key = (f64, u64);

fn triangle_code(mut v: [u64; 3], n: u64) -> u64 {
    v.sort_unstable();
    (v[0] * n + v[1]) * n + v[2]
}

/// Heap form of a key. Distances are non-negative, so their bit patterns
/// order like the values.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Entry(u64, u64);

impl Entry {
    fn new(k: Key) -> Self {
        Entry(k.0.to_bits(), k.1)
    }

    fn key(self) -> Key {
        (f64::from_bits(self.0), self.1)
    }
}

/// Pops the smallest entry that survives Z/2 cancellation.
fn pop_pivot(heap: &mut BinaryHeap<Reverse<Entry>>) -> Option<Key> {
    while let Some(Reverse(top)) = heap.pop() {
        match heap.peek() {
            Some(Reverse(next)) if *next == top => {
                heap.pop();
            }
            _ => return Some(top.key()),
        }
    }
    None
}

fn count_triangles(dm: &DistanceMatrix, cap: f64) -> usize {
    let n = dm.len();
    let mut count = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if dm.get(i, j) > cap {
                continue;
            }
            count += ((j + 1)..n).filter(|&k| dm.get(i, k) <= cap && dm.get(j, k) <= cap).count();
        }
    }
    count
}

/// H0 and H1 of the Rips filtration truncated at `cap`.
pub(crate) fn rips_h0_h1(dm: &DistanceMatrix, cap: f64, budget: usize) -> Result<PersistenceDiagram> {
    let n = dm.len();
    // Past the enclosing radius the complex is a cone, so later simplices
    // only add zero-persistence pairs.
    let enclosing = (0..n)
        .map(|i| dm.row(i).iter().copied().fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min);
    let cap = cap.min(enclosing);
    let mut edges: Vec<(f64, u32, u32)> = Vec::new();
    for i in 0..n {
        let row = dm.row(i);
        for j in (i + 1)..n {
            if row[j] <= cap {
                edges.push((row[j], i as u32, j as u32));
            }
        }
    }
    if n + edges.len() > budget {
        return Err(Error::Budget { dimension: 1, budget });
    }
    let triangle_bound = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
    if n + edges.len() + triangle_bound > budget && n + edges.len() + count_triangles(dm, cap) > budget {
        return Err(Error::Budget { dimension: 2, budget });
    }
    edges.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut features = Vec::new();
    let mut uf = UnionFind::new(n);
    let mut negative = vec![false; edges.len()];
    for (e, &(d, i, j)) in edges.iter().enumerate() {
        if uf.union(i, j) {
            negative[e] = true;
            if d > 0.0 {
                features.push(Feature::finite(0, 0.0, d));
            }
        }
    }
    for _ in 0..uf.components() {
        features.push(Feature::essential(0, 0.0));
    }

    let nn = n as u64;
    let coboundary = |e: usize, out: &mut Vec<Key>| {
        let (d, i, j) = edges[e];
        let (ri, rj) = (dm.row(i as usize), dm.row(j as usize));
        out.clear();
        for k in 0..n {
            if k == i as usize || k == j as usize {
                continue;
            }
            let diam = d.max(ri[k]).max(rj[k]);
            if diam <= cap {
                out.push((diam, triangle_code([i as u64, j as u64, k as u64], nn)));
            }
        }
    };
    // Triangle codes increase with the third vertex, so the first k reaching
    // the edge's own diameter gives the earliest coface.
    let earliest_coface = |e: usize| -> Option<Key> {
        let (d, i, j) = edges[e];
        let (ri, rj) = (dm.row(i as usize), dm.row(j as usize));
        let mut best: Option<(f64, usize)> = None;
        for k in 0..n {
            if k == i as usize || k == j as usize {
                continue;
            }
            let diam = d.max(ri[k]).max(rj[k]);
            if diam <= d {
                best = Some((d, k));
                break;
            }
            if diam <= cap && best.map_or(true, |(b, _)| diam < b) {
                best = Some((diam, k));
            }
        }
        best.map(|(diam, k)| (diam, triangle_code([i as u64, j as u64, k as u64], nn)))
    };
    // Pivot triangle -> column, stored as the extra edges whose coboundaries
    // were added to the column's own edge.
    let mut pivots: FxHashMap<u64, usize> = FxHashMap::default();
    let mut columns: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut heap: BinaryHeap<Reverse<Entry>> = BinaryHeap::new();
    let mut chain: Vec<usize> = Vec::new();
    let mut buf: Vec<Key> = Vec::with_capacity(n);
    for e in (0..edges.len()).rev() {
        if negative[e] {
            continue;
        }
        let d = edges[e].0;
        let Some(first) = earliest_coface(e) else {
            features.push(Feature::essential(1, d));
            continue;
        };
        if !pivots.contains_key(&first.1) {
            if first.0 > d {
                features.push(Feature::finite(1, d, first.0));
            }
            pivots.insert(first.1, columns.len());
            columns.push((e, Vec::new()));
            continue;
        }
        heap.clear();
        chain.clear();
        coboundary(e, &mut buf);
        heap.extend(buf.iter().map(|&k| Reverse(Entry::new(k))));
        let pivot = loop {
            let Some(p) = pop_pivot(&mut heap) else { break None };
            let Some(&c) = pivots.get(&p.1) else { break Some(p) };
            // p cancels against the added column's pivot.
            heap.push(Reverse(Entry::new(p)));
            let (ce, ref extra) = columns[c];
            for &x in std::iter::once(&ce).chain(extra) {
                chain.push(x);
                coboundary(x, &mut buf);
                heap.extend(buf.iter().map(|&k| Reverse(Entry::new(k))));
            }
        };
        match pivot {
            None => features.push(Feature::essential(1, d)),
            Some(p) => {
                if p.0 > d {
                    features.push(Feature::finite(1, d, p.0));
                }
                chain.sort_unstable();
                let mut extra = Vec::with_capacity(chain.len());
                let mut idx = 0;
                while idx < chain.len() {
                    let run = chain[idx..].iter().take_while(|&&x| x == chain[idx]).count();
                    if run % 2 == 1 {
                        extra.push(chain[idx]);
                    }
                    idx += run;
                }
                pivots.insert(p.1, columns.len());
                columns.push((e, extra));
            }
        }
    }
    sort_features(&mut features);
    Ok(PersistenceDiagram::new(features))
}
