//! Boundary-matrix reduction over the two-element field.

use std::collections::HashMap;

use crate::filtration::Filtration;

/// Maps a simplex (sorted vertex list) to its position in the filtration.
pub(crate) struct FaceIndex {
    n: usize,
    edges: Vec<u32>,
    // Combinatorial-number-system keys for dimensions >= 2.
    higher: Vec<HashMap<u64, u32>>,
    binom: Vec<Vec<u64>>,
}

const ABSENT: u32 = u32::MAX;

impl FaceIndex {
    /// Indexes every simplex of dimension 1..=`max_face_dim`.
    pub(crate) fn new(f: &Filtration, max_face_dim: usize) -> Self {
        let n = f.n_vertices();
        let mut edges = vec![ABSENT; if max_face_dim >= 1 { n * n } else { 0 }];
        let binom = binomial_table(n, max_face_dim + 1);
        let mut higher: Vec<HashMap<u64, u32>> = (0..=max_face_dim).map(|_| HashMap::new()).collect();
        for i in 0..f.len() {
            let k = f.dimension(i);
            if k == 0 || k > max_face_dim {
                continue;
            }
            let v = f.vertices(i);
            if k == 1 {
                edges[v[0] as usize * n + v[1] as usize] = i as u32;
            } else {
                higher[k].insert(encode(&binom, v), i as u32);
            }
        }
        FaceIndex {
            n,
            edges,
            higher,
            binom,
        }
    }

    #[inline]
    pub(crate) fn lookup(&self, vertices: &[u32]) -> u32 {
        match vertices.len() {
            1 => vertices[0],
            2 => self.edges[vertices[0] as usize * self.n + vertices[1] as usize],
            k => *self.higher[k - 1]
                .get(&encode(&self.binom, vertices))
                .expect("filtration is not closed under faces"),
        }
    }

    /// Filtration indices of the codimension-1 faces of simplex `i`, ascending.
    pub(crate) fn boundary(&self, f: &Filtration, i: usize, out: &mut Vec<u32>) {
        out.clear();
        let v = f.vertices(i);
        if v.len() < 2 {
            return;
        }
        let mut face: Vec<u32> = Vec::with_capacity(v.len() - 1);
        for skip in 0..v.len() {
            face.clear();
            face.extend(v.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &x)| x));
            out.push(self.lookup(&face));
        }
        out.sort_unstable();
    }
}

fn binomial_table(n: usize, kmax: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; kmax + 1]; n + 1];
    for row in 0..=n {
        t[row][0] = 1;
        for k in 1..=kmax.min(row) {
            t[row][k] = t[row - 1][k - 1].saturating_add(if k <= row - 1 { t[row - 1][k] } else { 0 });
        }
    }
    t
}

#[inline]
fn encode(binom: &[Vec<u64>], vertices: &[u32]) -> u64 {
    vertices
        .iter()
        .enumerate()
        .map(|(i, &v)| binom[v as usize][i + 1])
        .sum()
}

/// Symmetric difference of two ascending index lists, written into `out`.
#[inline]
pub(crate) fn add_columns(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// A persistence pair as filtration indices: `birth` is killed by `death`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct IndexPair {
    pub birth: u32,
    pub death: u32,
}

/// Result of the optimized reduction.
pub(crate) struct TwistOutcome {
    pub pairs: Vec<IndexPair>,
    /// Simplices of dimension >= 2 known to be positive (create a class).
    pub positive: Vec<bool>,
    /// Simplices that appear as the birth of some pair.
    pub paired_birth: Vec<bool>,
}

/// Reduces the boundary columns of dimensions `max_dimension` down to 2,
/// clearing columns whose simplex already appeared as a pivot.
///
/// `positive_edges` is the number of edges that do not merge components
/// (known from union-find). Once that many edges have been paired as births,
/// every remaining triangle column must reduce to zero and is skipped.
pub(crate) fn reduce_twist(f: &Filtration, positive_edges: usize) -> TwistOutcome {
    let len = f.len();
    let top = f.max_dimension();
    let mut pairs = Vec::new();
    let mut positive = vec![false; len];
    let mut paired_birth = vec![false; len];
    if top < 2 {
        return TwistOutcome {
            pairs,
            positive,
            paired_birth,
        };
    }
    let index = FaceIndex::new(f, top - 1);

    let mut by_dim: Vec<Vec<u32>> = vec![Vec::new(); top + 1];
    for i in 0..len {
        let k = f.dimension(i);
        if k >= 2 {
            by_dim[k].push(i as u32);
        }
    }

    // pivot_owner[row] = slot in `stored` of the reduced column with that pivot.
    let mut pivot_owner: Vec<u32> = vec![ABSENT; len];
    let mut stored: Vec<Vec<u32>> = Vec::new();
    let mut cleared = vec![false; len];
    let mut col = Vec::new();
    let mut scratch = Vec::new();

    for k in (2..=top).rev() {
        let mut edge_pairs = 0usize;
        for (pos, &j) in by_dim[k].iter().enumerate() {
            let j = j as usize;
            if k == 2 && edge_pairs == positive_edges {
                for &rest in &by_dim[k][pos..] {
                    positive[rest as usize] = true;
                }
                break;
            }
            if cleared[j] {
                positive[j] = true;
                continue;
            }
            index.boundary(f, j, &mut col);
            while let Some(&low) = col.last() {
                let owner = pivot_owner[low as usize];
                if owner == ABSENT {
                    break;
                }
                add_columns(&col, &stored[owner as usize], &mut scratch);
                std::mem::swap(&mut col, &mut scratch);
            }
            match col.last() {
                Some(&low) => {
                    pivot_owner[low as usize] = stored.len() as u32;
                    stored.push(col.clone());
                    pairs.push(IndexPair {
                        birth: low,
                        death: j as u32,
                    });
                    paired_birth[low as usize] = true;
                    cleared[low as usize] = true;
                    if k == 2 {
                        edge_pairs += 1;
                    }
                }
                None => positive[j] = true,
            }
        }
    }
    TwistOutcome {
        pairs,
        positive,
        paired_birth,
    }
}

/// Plain left-to-right reduction of the full boundary matrix, all dimensions,
/// no clearing and no shortcuts. Returns index pairs and the list of
/// unpaired positive simplices.
pub(crate) fn reduce_naive(f: &Filtration) -> (Vec<IndexPair>, Vec<u32>) {
    let len = f.len();
    let index = FaceIndex::new(f, f.max_dimension().saturating_sub(1));
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(len);
    let mut pivot_owner: Vec<u32> = vec![ABSENT; len];
    let mut pairs = Vec::new();
    let mut scratch = Vec::new();
    for j in 0..len {
        let mut col = Vec::new();
        index.boundary(f, j, &mut col);
        while let Some(&low) = col.last() {
            let owner = pivot_owner[low as usize];
            if owner == ABSENT {
                break;
            }
            add_columns(&col, &columns[owner as usize], &mut scratch);
            std::mem::swap(&mut col, &mut scratch);
        }
        if let Some(&low) = col.last() {
            pivot_owner[low as usize] = j as u32;
            pairs.push(IndexPair {
                birth: low,
                death: j as u32,
            });
        }
        columns.push(col);
    }
    let mut is_birth = vec![false; len];
    for p in &pairs {
        is_birth[p.birth as usize] = true;
    }
    let unpaired = (0..len)
        .filter(|&j| columns[j].is_empty() && !is_birth[j])
        .map(|j| j as u32)
        .collect();
    (pairs, unpaired)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_addition_is_symmetric_difference() {
        let mut out = Vec::new();
        add_columns(&[1, 3, 5, 7], &[3, 4, 7, 9], &mut out);
        assert_eq!(out, vec![1, 4, 5, 9]);
        add_columns(&[2, 4], &[2, 4], &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn binomial_keys_are_distinct() {
        let t = binomial_table(6, 3);
        let mut keys = std::collections::HashSet::new();
        for a in 0..6u32 {
            for b in (a + 1)..6 {
                for c in (b + 1)..6 {
                    assert!(keys.insert(encode(&t, &[a, b, c])));
                }
            }
        }
        assert_eq!(keys.len(), 20);
    }
}
