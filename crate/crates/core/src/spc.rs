//! Phase II control chart built from sequential permutation tests.
//!
//! Every new part is tested against the same Phase I reference set. The
//! plotted statistic (the within-reference total) is therefore constant for
//! the whole run, while the control limit, a low percentile of each test's
//! null distribution, moves from part to part.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::inference::{build_reference, permutation_test, ReferenceSet};
use crate::metrics::DistanceKind;
use crate::persistence::{cloud_persistence, PersistenceDiagram, PhSettings};

/// Which homology dimensions a chart watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonitoredDims {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    Both,
}

impl MonitoredDims {
    pub fn dims(self) -> &'static [usize] {
        match self {
            MonitoredDims::Zero => &[0],
            MonitoredDims::One => &[1],
            MonitoredDims::Both => &[0, 1],
        }
    }

    pub fn max_dim(self) -> usize {
        *self.dims().last().unwrap()
    }
}

impl FromStr for MonitoredDims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(MonitoredDims::Zero),
            "1" => Ok(MonitoredDims::One),
            "both" | "0,1" => Ok(MonitoredDims::Both),
            other => Err(Error::validation(format!("dims must be 0, 1 or both, got '{other}'"))),
        }
    }
}

impl fmt::Display for MonitoredDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MonitoredDims::Zero => "0",
            MonitoredDims::One => "1",
            MonitoredDims::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartConfig {
    pub alpha: f64,
    pub m0: usize,
    pub dims: MonitoredDims,
    pub distance: DistanceKind,
    pub max_steps: usize,
}

impl Default for ChartConfig {
    fn default() -> Self {
        ChartConfig {
            alpha: 0.05,
            m0: 200,
            dims: MonitoredDims::Both,
            distance: DistanceKind::Duration,
            max_steps: 1000,
        }
    }
}

impl ChartConfig {
    /// alpha = 1 is accepted as a boundary case that signals on every part.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::validation(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.m0 < 2 {
            return Err(Error::validation(format!("m0 must be at least 2, got {}", self.m0)));
        }
        if self.max_steps < 1 {
            return Err(Error::validation("max_steps must be at least 1"));
        }
        if let DistanceKind::Wasserstein { p, .. } = self.distance {
            if !(p >= 1.0) {
                return Err(Error::validation("Wasserstein order must be >= 1"));
            }
        }
        Ok(())
    }
}

/// Per-dimension reference sets sharing one Phase I sample.
#[derive(Debug, Clone)]
pub struct ChartReferences {
    sets: Vec<ReferenceSet>,
    ph: PhSettings,
}

impl ChartReferences {
    /// Builds one reference per monitored dimension from Phase I diagrams.
    pub fn from_diagrams(diagrams: &[PersistenceDiagram], cfg: &ChartConfig, ph: PhSettings) -> Result<Self> {
        cfg.validate()?;
        if diagrams.len() != cfg.m0 {
            return Err(Error::validation(format!(
                "expected m0 = {} Phase I diagrams, got {}",
                cfg.m0,
                diagrams.len()
            )));
        }
        let sets = cfg
            .dims
            .dims()
            .iter()
            .map(|&d| build_reference(diagrams, d, cfg.distance))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChartReferences { sets, ph })
    }

    pub fn from_clouds(clouds: &[PointCloud], cfg: &ChartConfig, ph: PhSettings) -> Result<Self> {
        let diagrams = clouds
            .iter()
            .map(|c| cloud_persistence(c, &ph))
            .collect::<Result<Vec<_>>>()?;
        Self::from_diagrams(&diagrams, cfg, ph)
    }

    pub fn sets(&self) -> &[ReferenceSet] {
        &self.sets
    }

    pub fn ph_settings(&self) -> &PhSettings {
        &self.ph
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimStep {
    pub dim: usize,
    pub p_value: f64,
    pub observed_stat: f64,
    /// `None` when alpha is finer than the test's 1 / (m0 + 1) resolution.
    pub alpha_limit: Option<f64>,
    pub signal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartStep {
    /// 1-based index of the part within Phase II.
    pub part_index: usize,
    pub dims: Vec<DimStep>,
    pub signal: bool,
}

impl ChartStep {
    pub fn dim(&self, d: usize) -> Option<&DimStep> {
        self.dims.iter().find(|s| s.dim == d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLengthSample {
    /// Index of the first signalling part; `max_steps` when censored.
    pub run_length: usize,
    /// True when no signal occurred within `max_steps`.
    pub censored: bool,
}

/// Tests one new diagram against every monitored reference.
pub fn chart_step_diagram(
    refs: &ChartReferences,
    y: &PersistenceDiagram,
    cfg: &ChartConfig,
    part_index: usize,
) -> ChartStep {
    let dims: Vec<DimStep> = refs
        .sets
        .iter()
        .map(|r| {
            let t = permutation_test(r, y);
            DimStep {
                dim: r.dim(),
                p_value: t.p_value,
                observed_stat: t.observed_stat,
                alpha_limit: t.alpha_limit(cfg.alpha),
                signal: t.rejects(cfg.alpha),
            }
        })
        .collect();
    let signal = dims.iter().any(|s| s.signal);
    ChartStep {
        part_index,
        dims,
        signal,
    }
}

pub fn chart_step(refs: &ChartReferences, y_cloud: &PointCloud, cfg: &ChartConfig, part_index: usize) -> Result<ChartStep> {
    let y = cloud_persistence(y_cloud, &refs.ph)?;
    Ok(chart_step_diagram(refs, &y, cfg, part_index))
}

/// Monitors parts from `next_part(index)` (1-based) until the first signal
/// on any monitored dimension or until `max_steps` parts.
pub fn monitor_stream<F>(refs: &ChartReferences, mut next_part: F, cfg: &ChartConfig) -> Result<(RunLengthSample, Vec<ChartStep>)>
where
    F: FnMut(usize) -> Result<PointCloud>,
{
    cfg.validate()?;
    let mut steps = Vec::new();
    for t in 1..=cfg.max_steps {
        let step = chart_step(refs, &next_part(t)?, cfg, t)?;
        let signal = step.signal;
        steps.push(step);
        if signal {
            return Ok((
                RunLengthSample {
                    run_length: t,
                    censored: false,
                },
                steps,
            ));
        }
    }
    Ok((
        RunLengthSample {
            run_length: cfg.max_steps,
            censored: true,
        },
        steps,
    ))
}

/// Run lengths of the individual charts and of the combined OR chart,
/// all observed on the same part stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiRunLength {
    pub combined: RunLengthSample,
    /// `(dim, run length)` for every monitored dimension.
    pub per_dim: Vec<(usize, RunLengthSample)>,
}

/// Like [`monitor_stream`], but keeps going until every monitored dimension
/// has signalled at least once (or `max_steps`), so each single-dimension
/// chart gets its own run length from the same parts. The combined run
/// length is the earliest of them.
pub fn monitor_per_dim<F>(refs: &ChartReferences, mut next_diagram: F, cfg: &ChartConfig) -> Result<MultiRunLength>
where
    F: FnMut(usize) -> Result<PersistenceDiagram>,
{
    cfg.validate()?;
    let dims: Vec<usize> = refs.sets.iter().map(|r| r.dim()).collect();
    let mut first: Vec<Option<usize>> = vec![None; dims.len()];
    for t in 1..=cfg.max_steps {
        let y = next_diagram(t)?;
        for (slot, r) in first.iter_mut().zip(&refs.sets) {
            if slot.is_none() && permutation_test(r, &y).rejects(cfg.alpha) {
                *slot = Some(t);
            }
        }
        if first.iter().all(Option::is_some) {
            break;
        }
    }
    let sample = |f: Option<usize>| match f {
        Some(t) => RunLengthSample {
            run_length: t,
            censored: false,
        },
        None => RunLengthSample {
            run_length: cfg.max_steps,
            censored: true,
        },
    };
    let per_dim: Vec<(usize, RunLengthSample)> = dims.iter().zip(&first).map(|(&d, &f)| (d, sample(f))).collect();
    let combined = sample(first.iter().flatten().min().copied());
    Ok(MultiRunLength { combined, per_dim })
}

/// Writes `part_index,dim,observed_stat,alpha_limit,p_value,signal` rows.
pub fn write_trace_csv<W: Write>(steps: &[ChartStep], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["part_index", "dim", "observed_stat", "alpha_limit", "p_value", "signal"])?;
    for s in steps {
        for d in &s.dims {
            w.write_record([
                s.part_index.to_string(),
                d.dim.to_string(),
                format!("{:?}", d.observed_stat),
                d.alpha_limit.map_or_else(|| "nan".to_string(), |l| format!("{l:?}")),
                format!("{:?}", d.p_value),
                (d.signal as u8).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<trace csv>", e))?;
    Ok(())
}
