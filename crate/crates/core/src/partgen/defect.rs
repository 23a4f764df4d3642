use serde::{Deserialize, Serialize};

use super::Wireframe;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefectKind {
    /// Translate every node of one layer (0-based) along `axis`.
    ShiftLayer { layer: usize, axis: Axis },
    /// Drop one top node straight down.
    CollapseEdge { node: usize },
    /// Shrink the height and widen the footprint about the node centroid.
    CollapseScale,
    /// Remove one strut. Any positive severity removes it.
    MissingStrut { strut: usize },
}

/// A defect and its severity in part units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectSpec {
    #[serde(flatten)]
    pub kind: DefectKind,
    pub severity: f64,
}

impl DefectSpec {
    pub fn new(kind: DefectKind, severity: f64) -> Self {
        DefectSpec { kind, severity }
    }

    /// Checks the target against `w` without applying anything.
    pub fn check(&self, w: &Wireframe) -> Result<()> {
        if !(self.severity >= 0.0) || !self.severity.is_finite() {
            return Err(Error::validation("defect severity must be finite and >= 0"));
        }
        match self.kind {
            DefectKind::ShiftLayer { layer, .. } => {
                if w.layers.is_empty() {
                    return Err(Error::validation("shift_layer needs a part with layer information"));
                }
                if layer >= w.layer_count() {
                    return Err(Error::validation(format!(
                        "layer {layer} out of range (part has {})",
                        w.layer_count()
                    )));
                }
            }
            DefectKind::CollapseEdge { node } => {
                let top = w.nodes.iter().map(|p| p[2]).fold(f64::NEG_INFINITY, f64::max);
                match w.nodes.get(node) {
                    None => return Err(Error::validation(format!("node {node} out of range"))),
                    Some(p) if (p[2] - top).abs() > 1e-9 * top.abs().max(1.0) => {
                        return Err(Error::validation(format!("node {node} is not a top node")))
                    }
                    _ => {}
                }
            }
            DefectKind::CollapseScale => {
                let (h, wx, wy) = extents(w);
                if !(h > self.severity) || wx <= 0.0 || wy <= 0.0 {
                    return Err(Error::validation("collapse_scale needs a 3D part taller than the severity"));
                }
            }
            DefectKind::MissingStrut { strut } => {
                if strut >= w.struts.len() {
                    return Err(Error::validation(format!("strut {strut} out of range")));
                }
            }
        }
        Ok(())
    }
}

fn extents(w: &Wireframe) -> (f64, f64, f64) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &w.nodes {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (hi[2] - lo[2], hi[0] - lo[0], hi[1] - lo[1])
}

/// Returns a defective copy of `w`. Severity zero returns an exact copy.
///
/// Sampling happens after the defect, so points on struts touching a moved
/// node are re-interpolated between the moved node and the fixed far end.
/// Every strut keeps the number of sample points it had before the defect.
pub fn apply_defect(w: &Wireframe, d: &DefectSpec) -> Result<Wireframe> {
    d.check(w)?;
    let mut out = w.clone();
    if d.severity == 0.0 {
        return Ok(out);
    }
    let delta = d.severity;
    if out.samples.is_empty() {
        out.samples = (0..w.struts.len()).map(|s| w.interior_points(s)).collect();
    }
    match d.kind {
        DefectKind::ShiftLayer { layer, axis } => {
            for (p, &l) in out.nodes.iter_mut().zip(&w.layers) {
                if l == layer {
                    p[axis.index()] += delta;
                }
            }
        }
        DefectKind::CollapseEdge { node } => {
            out.nodes[node][2] -= delta;
        }
        DefectKind::CollapseScale => {
            let (h, wx, wy) = extents(w);
            let n = w.nodes.len() as f64;
            let mut c = [0.0; 3];
            for p in &w.nodes {
                for a in 0..3 {
                    c[a] += p[a] / n;
                }
            }
            let scale = [(wx + delta) / wx, (wy + delta) / wy, (h - delta) / h];
            for p in out.nodes.iter_mut() {
                for a in 0..3 {
                    p[a] = c[a] + (p[a] - c[a]) * scale[a];
                }
            }
        }
        DefectKind::MissingStrut { strut } => {
            out.struts.remove(strut);
            out.samples.remove(strut);
        }
    }
    Ok(out)
}
