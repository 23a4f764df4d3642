use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DefectConfig, ExperimentConfig, PhaseOnePolicy};
use super::geometric::{combined_rate, geometric_arl_sdrl, geometric_reference};
use super::ks::{ks_uniformity_test, KsResult};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::inference::permutation_test;
use crate::partgen::{add_noise, derive_seed, sample_cloud, DefectSpec, NoiseSpec};
use crate::persistence::{cloud_persistence, PersistenceDiagram};
use crate::spc::{monitor_per_dim, ChartReferences, RunLengthSample};

/// Seed path tag for a Phase I sample shared by all replications.
const SHARED_PHASE_ONE: u64 = u64::MAX;
const PHASE_ONE: u64 = 0;
const PHASE_TWO: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    /// First part on which any monitored dimension signalled.
    pub combined: RunLengthSample,
    pub per_dim: Vec<(usize, RunLengthSample)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartSummary {
    pub arl: f64,
    /// Sample standard deviation (n - 1 denominator; 0 for one replication).
    pub sdrl: f64,
    pub n_censored: usize,
    /// Geometric ARL and SDRL at the attainable per-step false-alarm rate,
    /// treating the monitored dimensions as independent.
    pub reference_arl: f64,
    pub reference_sdrl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLengthSummary {
    pub n_replications: usize,
    pub combined: ChartSummary,
    /// One entry per monitored dimension.
    pub per_dim: Vec<(usize, ChartSummary)>,
}

impl RunLengthSummary {
    pub fn arl(&self) -> f64 {
        self.combined.arl
    }

    pub fn sdrl(&self) -> f64 {
        self.combined.sdrl
    }

    pub fn n_censored(&self) -> usize {
        self.combined.n_censored
    }

    pub fn dim(&self, d: usize) -> Option<&ChartSummary> {
        self.per_dim.iter().find(|(k, _)| *k == d).map(|(_, s)| s)
    }

    /// Aggregates per-replication records. Censored runs count at their
    /// truncation point.
    pub fn from_records(records: &[ReplicationRecord], alpha: f64, m0: usize) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::validation("no replication records to summarise"));
        }
        let rate = geometric_reference(alpha, m0)?.rate;
        let dims: Vec<usize> = records[0].per_dim.iter().map(|(d, _)| *d).collect();
        let summarise = |samples: Vec<RunLengthSample>, chart_rate: f64| {
            let (arl, sdrl) = mean_sd(samples.iter().map(|s| s.run_length as f64));
            let (reference_arl, reference_sdrl) = geometric_arl_sdrl(chart_rate);
            ChartSummary {
                arl,
                sdrl,
                n_censored: samples.iter().filter(|s| s.censored).count(),
                reference_arl,
                reference_sdrl,
            }
        };
        let combined = summarise(
            records.iter().map(|r| r.combined).collect(),
            combined_rate(&vec![rate; dims.len()]),
        );
        let per_dim = dims
            .iter()
            .enumerate()
            .map(|(k, &d)| (d, summarise(records.iter().map(|r| r.per_dim[k].1).collect(), rate)))
            .collect();
        Ok(RunLengthSummary {
            n_replications: records.len(),
            combined,
            per_dim,
        })
    }
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLengthReport {
    pub summary: RunLengthSummary,
    pub records: Vec<ReplicationRecord>,
}

/// Nominal and defective sample clouds plus everything needed to draw parts.
struct Sampler<'a> {
    cfg: &'a ExperimentConfig,
    nominal: PointCloud,
    defective: Option<PointCloud>,
}

impl<'a> Sampler<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let (nominal, defective) = cfg.validate()?;
        Ok(Sampler {
            cfg,
            nominal: sample_cloud(&nominal),
            defective: defective.as_ref().map(sample_cloud),
        })
    }

    fn diagram(&self, cloud: &PointCloud, seed: u64) -> Result<PersistenceDiagram> {
        let noisy = add_noise(cloud, &NoiseSpec::new(self.cfg.noise.sigma, seed));
        cloud_persistence(&noisy, &self.cfg.ph_settings())
    }

    fn phase_one(&self, replication: u64) -> Result<Vec<PersistenceDiagram>> {
        (0..self.cfg.chart.m0 as u64)
            .map(|j| self.diagram(&self.nominal, derive_seed(self.cfg.base_seed, &[replication, PHASE_ONE, j])))
            .collect()
    }

    fn references(&self, replication: u64, shared: Option<&ChartReferences>) -> Result<ChartReferences> {
        match shared {
            Some(r) => Ok(r.clone()),
            None => ChartReferences::from_diagrams(&self.phase_one(replication)?, &self.cfg.chart, self.cfg.ph_settings()),
        }
    }

    fn shared_references(&self) -> Result<Option<ChartReferences>> {
        match self.cfg.phase_one {
            PhaseOnePolicy::Fresh => Ok(None),
            PhaseOnePolicy::Shared => self.references(SHARED_PHASE_ONE, None).map(Some),
        }
    }

    /// Phase II part `t` (1-based) of a replication.
    fn phase_two(&self, replication: u64, t: usize) -> Result<PersistenceDiagram> {
        let cloud = match (&self.defective, &self.cfg.defect) {
            (Some(c), Some(d)) if t >= d.onset => c,
            _ => &self.nominal,
        };
        self.diagram(cloud, derive_seed(self.cfg.base_seed, &[replication, PHASE_TWO, t as u64]))
    }
}

impl Sampler<'_> {
    fn replicate(&self, r: usize, refs: &ChartReferences) -> Result<ReplicationRecord> {
        let rl = monitor_per_dim(refs, |t| self.phase_two(r as u64, t), &self.cfg.chart)?;
        Ok(ReplicationRecord {
            replication: r,
            combined: rl.combined,
            per_dim: rl.per_dim,
        })
    }

    fn report(&self, records: Vec<ReplicationRecord>) -> Result<RunLengthReport> {
        let summary = RunLengthSummary::from_records(&records, self.cfg.chart.alpha, self.cfg.chart.m0)?;
        let report = RunLengthReport { summary, records };
        if let Some(dir) = &self.cfg.output {
            write_run_length_outputs(&report, self.cfg, dir)?;
        }
        Ok(report)
    }
}

/// Monte Carlo run-length study. Every replication draws its own Phase I
/// sample (unless the policy shares one) and monitors a Phase II stream
/// until each monitored dimension has signalled or `max_steps` is reached.
/// Writes result files when `cfg.output` is set.
pub fn run_length_experiment(cfg: &ExperimentConfig) -> Result<RunLengthReport> {
    let sampler = Sampler::new(cfg)?;
    let shared = sampler.shared_references()?;
    let records = (0..cfg.replications)
        .into_par_iter()
        .map(|r| sampler.replicate(r, &sampler.references(r as u64, shared.as_ref())?))
        .collect::<Result<Vec<_>>>()?;
    sampler.report(records)
}

/// Runs [`run_length_experiment`] once per defect severity. Each
/// replication's Phase I sample and Phase II noise are shared by all
/// severities, so the cells differ only in the defect. Severity 0 is the
/// in-control part. Cell `i` writes into `output/severity_<severities[i]>`.
pub fn severity_sweep(cfg: &ExperimentConfig, severities: &[f64]) -> Result<Vec<RunLengthReport>> {
    let Some(defect) = cfg.defect else {
        return Err(Error::validation("a severity sweep needs a defect"));
    };
    if severities.is_empty() {
        return Err(Error::validation("a severity sweep needs at least one severity"));
    }
    let cells: Vec<ExperimentConfig> = severities
        .iter()
        .map(|&severity| {
            let mut c = cfg.clone();
            c.defect = Some(DefectConfig {
                spec: DefectSpec { severity, ..defect.spec },
                ..defect
            });
            c.output = cfg.output.as_ref().map(|d| d.join(format!("severity_{severity}")));
            c
        })
        .collect();
    let samplers: Vec<Sampler> = cells.iter().map(Sampler::new).collect::<Result<_>>()?;
    let shared = samplers[0].shared_references()?;
    let per_replication = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let refs = samplers[0].references(r as u64, shared.as_ref())?;
            samplers.iter().map(|s| s.replicate(r, &refs)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    samplers
        .iter()
        .enumerate()
        .map(|(k, s)| s.report(per_replication.iter().map(|row| row[k].clone()).collect()))
        .collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// Writes `summary.csv`, `run_lengths.csv` and `config.toml` into `dir`.
pub fn write_run_length_outputs(report: &RunLengthReport, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let mut w = csv_writer(&dir.join("summary.csv"))?;
    w.write_record([
        "chart",
        "arl",
        "sdrl",
        "n_replications",
        "n_censored",
        "reference_arl",
        "reference_sdrl",
    ])?;
    let s = &report.summary;
    let mut rows = vec![("combined".to_string(), s.combined)];
    if s.per_dim.len() > 1 {
        rows.extend(s.per_dim.iter().map(|(d, c)| (format!("dim{d}"), *c)));
    } else if let Some((d, _)) = s.per_dim.first() {
        rows[0].0 = format!("dim{d}");
    }
    for (name, c) in rows {
        w.write_record([
            name,
            c.arl.to_string(),
            c.sdrl.to_string(),
            s.n_replications.to_string(),
            c.n_censored.to_string(),
            c.reference_arl.to_string(),
            c.reference_sdrl.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("summary.csv"), e))?;

    let path = dir.join("run_lengths.csv");
    let mut w = csv_writer(&path)?;
    let mut header = vec!["replication".to_string(), "run_length".into(), "censored".into()];
    if let Some(first) = report.records.first() {
        for (d, _) in &first.per_dim {
            header.push(format!("run_length_dim{d}"));
            header.push(format!("censored_dim{d}"));
        }
    }
    w.write_record(&header)?;
    for r in &report.records {
        let mut row = vec![
            r.replication.to_string(),
            r.combined.run_length.to_string(),
            (r.combined.censored as u8).to_string(),
        ];
        for (_, s) in &r.per_dim {
            row.push(s.run_length.to_string());
            row.push((s.censored as u8).to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path.clone(), e))?;

    write_file(&dir.join("config.toml"), &cfg.to_toml())
}

/// Reads a `run_lengths.csv` written by [`write_run_length_outputs`].
pub fn read_run_lengths(path: impl AsRef<Path>) -> Result<Vec<ReplicationRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers()?.clone();
    let dims: Vec<usize> = header
        .iter()
        .filter_map(|h| h.strip_prefix("run_length_dim"))
        .map(|d| d.parse().map_err(|_| Error::validation(format!("bad column run_length_dim{d}"))))
        .collect::<Result<_>>()?;
    let bad = |line: usize, message: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    };
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let num = |k: usize| -> Result<usize> {
            row.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(line, "expected a non-negative integer"))
        };
        let sample = |k: usize| -> Result<RunLengthSample> {
            Ok(RunLengthSample {
                run_length: num(k)?,
                censored: num(k + 1)? == 1,
            })
        };
        records.push(ReplicationRecord {
            replication: num(0)?,
            combined: sample(1)?,
            per_dim: dims
                .iter()
                .enumerate()
                .map(|(k, &d)| Ok((d, sample(3 + 2 * k)?)))
                .collect::<Result<_>>()?,
        });
    }
    Ok(records)
}

/// P-values of repeated single-part permutation tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStudy {
    /// `p_values[k][i]` is the p-value of test `i` in dimension `dims[k]`.
    pub dims: Vec<usize>,
    pub p_values: Vec<Vec<f64>>,
    pub ks: Vec<KsResult>,
}

/// Builds a reference and tests one new part, `n_tests` times, then checks
/// each dimension's p-values for uniformity. The test part is defective
/// whenever a defect is configured. Writes `pvalues.csv`, `ks.csv` and
/// `config.toml` when `cfg.output` is set.
pub fn pvalue_power_study(cfg: &ExperimentConfig, n_tests: usize) -> Result<PowerStudy> {
    if n_tests < 1 {
        return Err(Error::validation("n_tests must be at least 1"));
    }
    let sampler = Sampler::new(cfg)?;
    let shared = sampler.shared_references()?;
    let test_cloud = sampler.defective.as_ref().unwrap_or(&sampler.nominal);
    let per_test: Vec<Vec<f64>> = (0..n_tests)
        .into_par_iter()
        .map(|i| {
            let refs = sampler.references(i as u64, shared.as_ref())?;
            let y = sampler.diagram(test_cloud, derive_seed(cfg.base_seed, &[i as u64, PHASE_TWO, 1]))?;
            Ok(refs.sets().iter().map(|r| permutation_test(r, &y).p_value).collect())
        })
        .collect::<Result<_>>()?;
    let dims = cfg.chart.dims.dims().to_vec();
    let p_values: Vec<Vec<f64>> = (0..dims.len()).map(|k| per_test.iter().map(|t| t[k]).collect()).collect();
    let ks = p_values.iter().map(|p| ks_uniformity_test(p)).collect::<Result<_>>()?;
    let study = PowerStudy { dims, p_values, ks };
    if let Some(dir) = &cfg.output {
        write_power_outputs(&study, cfg, dir)?;
    }
    Ok(study)
}

pub fn write_power_outputs(study: &PowerStudy, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let path = dir.join("pvalues.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["test", "dim", "p_value"])?;
    for (k, &d) in study.dims.iter().enumerate() {
        for (i, p) in study.p_values[k].iter().enumerate() {
            w.write_record([i.to_string(), d.to_string(), p.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path.clone(), e))?;
    let path = dir.join("ks.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["dim", "n", "ks_statistic", "p_value", "argmax"])?;
    for (d, ks) in study.dims.iter().zip(&study.ks) {
        w.write_record([
            d.to_string(),
            ks.n.to_string(),
            ks.ks_statistic.to_string(),
            ks.p_value.to_string(),
            ks.argmax.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.clone(), e))?;
    write_file(&dir.join("config.toml"), &cfg.to_toml())
}
