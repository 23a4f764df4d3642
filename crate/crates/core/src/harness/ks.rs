use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-sample Kolmogorov-Smirnov test against Uniform(0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// sup |ECDF(t) - t|.
    pub ks_statistic: f64,
    /// Asymptotic Kolmogorov p-value of `sqrt(n) * ks_statistic`.
    pub p_value: f64,
    pub n: usize,
    /// Sample value at which the largest ECDF-CDF gap occurs.
    pub argmax: f64,
}

pub fn ks_uniformity_test(values: &[f64]) -> Result<KsResult> {
    if values.is_empty() {
        return Err(Error::validation("KS test needs at least one value"));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::validation(format!("KS uniformity test value {v} is outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let nf = n as f64;
    let mut best = -1.0;
    let mut argmax = sorted[0];
    for (i, &x) in sorted.iter().enumerate() {
        // The ECDF jumps from i/n to (i+1)/n at x.
        let gap = ((i + 1) as f64 / nf - x).max(x - i as f64 / nf);
        if gap > best {
            best = gap;
            argmax = x;
        }
    }
    Ok(KsResult {
        ks_statistic: best,
        p_value: kolmogorov_survival(nf.sqrt() * best),
        n,
        argmax,
    })
}

/// P(K > lambda) for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
