use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::rejection_rank;

/// Run-length law of an in-control chart whose steps signal independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricReference {
    /// Attainable per-step false-alarm rate floor(alpha (m0 + 1)) / (m0 + 1).
    pub rate: f64,
    pub arl: f64,
    pub sdrl: f64,
    /// Values for a per-step rate of exactly alpha.
    pub nominal_arl: f64,
    pub nominal_sdrl: f64,
}

fn geometric_moments(rate: f64) -> (f64, f64) {
    (1.0 / rate, (1.0 - rate).sqrt() / rate)
}

pub fn geometric_reference(alpha: f64, m0: usize) -> Result<GeometricReference> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::validation(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if m0 < 1 {
        return Err(Error::validation("m0 must be at least 1"));
    }
    let k = rejection_rank(alpha, m0);
    if k == 0 {
        return Err(Error::validation(format!(
            "alpha = {alpha} is below the permutation test's resolution 1/(m0+1) = {:.6}; \
             no p-value can fall at or below it, so the chart never signals",
            1.0 / (m0 + 1) as f64
        )));
    }
    let rate = k as f64 / (m0 + 1) as f64;
    let (arl, sdrl) = geometric_moments(rate);
    let (nominal_arl, nominal_sdrl) = geometric_moments(alpha);
    Ok(GeometricReference {
        rate,
        arl,
        sdrl,
        nominal_arl,
        nominal_sdrl,
    })
}

/// Per-step rate of an OR-combination of independent charts with the given rates.
pub fn combined_rate(rates: &[f64]) -> f64 {
    1.0 - rates.iter().map(|r| 1.0 - r).product::<f64>()
}

/// ARL and SDRL of a geometric run length with per-step rate `rate`.
pub fn geometric_arl_sdrl(rate: f64) -> (f64, f64) {
    geometric_moments(rate)
}
