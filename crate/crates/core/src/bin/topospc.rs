use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use topospc::geometry::{format_pointcloud, load_pointcloud, save_pointcloud, CloudFormat, PointCloud};
use topospc::harness::{
    pvalue_power_study, run_length_experiment, severity_sweep, ExperimentConfig, RunLengthReport,
};
use topospc::inference::{build_reference, permutation_test};
use topospc::metrics::{DistanceKind, GroundMetric};
use topospc::partgen::{
    add_noise, apply_defect, derive_seed, gen_cube, gen_cube_lattice, gen_egg_like_lattice, gen_layered_tube,
    sample_cloud, Axis, DefectKind, DefectSpec, NoiseSpec, Wireframe,
};
use topospc::persistence::{cloud_persistence, PersistenceDiagram, PhSettings};
use topospc::spc::{chart_step, write_trace_csv, ChartConfig, ChartReferences, MonitoredDims};
use topospc::{Error, Result};

#[derive(Parser)]
#[command(name = "topospc", version, about = "Topological process monitoring for lattice parts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate sampled (optionally defective, noisy) part clouds.
    Gen(GenArgs),
    /// Compute the persistence diagram of a point cloud.
    Ph(PhArgs),
    /// Distance between two persistence diagrams.
    Dist(DistArgs),
    /// Permutation test of one cloud against a directory of reference clouds.
    Permtest(PermtestArgs),
    /// Phase II monitoring.
    Spc {
        #[command(subcommand)]
        command: SpcCommand,
    },
    /// Monte Carlo studies driven by a TOML config.
    Simulate {
        #[command(subcommand)]
        command: SimulateCommand,
    },
}

#[derive(Subcommand)]
enum SpcCommand {
    /// Test every cloud of a stream directory in name order.
    Run(SpcRunArgs),
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Run-length study: ARL and SDRL.
    Rl(RlArgs),
    /// Repeated single-part tests and KS uniformity of the p-values.
    Power(PowerArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Cube,
    LayeredTube,
    CubeLattice,
    Egg,
}

#[derive(Clone, Copy, ValueEnum)]
enum DefectArg {
    ShiftLayer,
    CollapseEdge,
    CollapseScale,
    MissingStrut,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Xyz,
    Csv,
}

impl From<FormatArg> for CloudFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Xyz => CloudFormat::Xyz,
            FormatArg::Csv => CloudFormat::Csv,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "cube")]
    generator: Generator,
    /// Cube / tube edge length.
    #[arg(long, default_value_t = 1.0)]
    edge: f64,
    #[arg(long, default_value_t = 0.25)]
    spacing: f64,
    #[arg(long, default_value_t = 5)]
    layers: usize,
    #[arg(long, default_value_t = 1)]
    nx: usize,
    #[arg(long, default_value_t = 1)]
    ny: usize,
    #[arg(long, default_value_t = 4)]
    nz: usize,
    #[arg(long, default_value_t = 1.0)]
    cell_edge: f64,
    #[arg(long, default_value_t = 8)]
    rings: usize,
    #[arg(long, default_value_t = 10)]
    struts_per_ring: usize,
    #[arg(long, default_value_t = 1.0)]
    height: f64,
    #[arg(long, default_value_t = 0.45)]
    radius: f64,
    #[arg(long, value_enum)]
    defect: Option<DefectArg>,
    #[arg(long, default_value_t = 0.0)]
    severity: f64,
    /// Target layer for shift-layer.
    #[arg(long, default_value_t = 0)]
    layer: usize,
    #[arg(long, value_enum, default_value = "y")]
    axis: AxisArg,
    /// Target top node for collapse-edge.
    #[arg(long)]
    node: Option<usize>,
    /// Target strut for missing-strut.
    #[arg(long, default_value_t = 0)]
    strut: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of noisy copies. Above 1, `--out` names a directory.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, value_enum, default_value = "xyz")]
    format: FormatArg,
    /// Output file (or directory with --count > 1). Stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Also write the (defective) wireframe as JSON.
    #[arg(long)]
    wireframe: Option<PathBuf>,
}

#[derive(Args)]
struct PhOptions {
    /// Rips diameter cap. Required above 64 points.
    #[arg(long)]
    max_diameter: Option<f64>,
    #[arg(long, default_value_t = topospc::filtration::DEFAULT_SIMPLEX_BUDGET)]
    budget: usize,
}

impl PhOptions {
    fn settings(&self, max_homology_dim: usize) -> PhSettings {
        PhSettings {
            max_homology_dim,
            max_diameter: self.max_diameter,
            simplex_budget: self.budget,
        }
    }
}

#[derive(Args)]
struct DistanceOptions {
    /// duration, bottleneck, wasserstein or wasserstein:<p>.
    #[arg(long, default_value = "duration")]
    distance: DistanceKind,
    /// Ground metric for Wasserstein.
    #[arg(long, value_parser = parse_ground)]
    ground: Option<GroundMetric>,
}

fn parse_ground(s: &str) -> Result<GroundMetric> {
    s.parse()
}

impl DistanceOptions {
    fn kind(&self) -> Result<DistanceKind> {
        match (self.distance, self.ground) {
            (DistanceKind::Wasserstein { p, .. }, Some(ground)) => Ok(DistanceKind::Wasserstein { p, ground }),
            (_, Some(_)) => Err(Error::Validation("--ground only applies to wasserstein".into())),
            (k, None) => Ok(k),
        }
    }
}

#[derive(Args)]
struct PhArgs {
    cloud: PathBuf,
    #[arg(long, default_value_t = 1)]
    max_dim: usize,
    #[command(flatten)]
    ph: PhOptions,
    /// Output CSV. Stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[command(flatten)]
    distance: DistanceOptions,
}

#[derive(Args)]
struct PermtestArgs {
    /// Directory of in-control reference clouds (.xyz / .csv).
    #[arg(long)]
    reference: PathBuf,
    /// The cloud under test.
    #[arg(long)]
    cloud: PathBuf,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Use only the first m0 reference clouds in name order.
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    distance: DistanceOptions,
    #[command(flatten)]
    ph: PhOptions,
    /// Write the m0 + 1 null statistics here.
    #[arg(long)]
    null_out: Option<PathBuf>,
}

#[derive(Args)]
struct SpcRunArgs {
    #[arg(long)]
    reference: PathBuf,
    /// Directory of Phase II clouds, monitored in name order.
    #[arg(long)]
    stream: PathBuf,
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "both")]
    dims: MonitoredDims,
    #[command(flatten)]
    distance: DistanceOptions,
    #[command(flatten)]
    ph: PhOptions,
    /// Trace CSV. Stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Keep testing after the first signal.
    #[arg(long)]
    no_stop: bool,
}

#[derive(Args)]
struct ConfigOverrides {
    /// TOML experiment config.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long)]
    dims: Option<MonitoredDims>,
    #[arg(long)]
    distance: Option<DistanceKind>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl ConfigOverrides {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(a) = self.alpha {
            cfg.chart.alpha = a;
        }
        if let Some(m) = self.m0 {
            cfg.chart.m0 = m;
        }
        if let Some(d) = self.dims {
            cfg.chart.dims = d;
        }
        if let Some(d) = self.distance {
            cfg.chart.distance = d;
        }
        if let Some(r) = self.replications {
            cfg.replications = r;
        }
        if let Some(o) = &self.output {
            cfg.output = Some(o.clone());
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RlArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Comma-separated defect severities; runs one cell per severity with
    /// shared Phase I samples.
    #[arg(long, value_delimiter = ',')]
    severities: Vec<f64>,
}

#[derive(Args)]
struct PowerArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    #[arg(long, default_value_t = 1000)]
    tests: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Ph(a) => ph(a),
        Command::Dist(a) => dist(a),
        Command::Permtest(a) => permtest(a),
        Command::Spc {
            command: SpcCommand::Run(a),
        } => spc_run(a),
        Command::Simulate { command } => match command {
            SimulateCommand::Rl(a) => simulate_rl(a),
            SimulateCommand::Power(a) => simulate_power(a),
        },
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_error(p, e)),
        None => {
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| io_error("<stdout>", e))
        }
    }
}

fn io_error(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
    Error::Io {
        path: path.into(),
        source,
    }
}

fn build_part(a: &GenArgs) -> Result<Wireframe> {
    let w = match a.generator {
        Generator::Cube => gen_cube(a.edge, a.spacing)?,
        Generator::LayeredTube => gen_layered_tube(a.edge, a.layers, a.spacing)?,
        Generator::CubeLattice => gen_cube_lattice(a.nx, a.ny, a.nz, a.cell_edge, a.spacing)?,
        Generator::Egg => gen_egg_like_lattice(a.rings, a.struts_per_ring, a.height, a.radius, a.spacing)?,
    };
    let Some(defect) = a.defect else { return Ok(w) };
    let kind = match defect {
        DefectArg::ShiftLayer => DefectKind::ShiftLayer {
            layer: a.layer,
            axis: match a.axis {
                AxisArg::X => Axis::X,
                AxisArg::Y => Axis::Y,
                AxisArg::Z => Axis::Z,
            },
        },
        DefectArg::CollapseEdge => DefectKind::CollapseEdge {
            node: a
                .node
                .ok_or_else(|| Error::Validation("collapse-edge needs --node".into()))?,
        },
        DefectArg::CollapseScale => DefectKind::CollapseScale,
        DefectArg::MissingStrut => DefectKind::MissingStrut { strut: a.strut },
    };
    apply_defect(&w, &DefectSpec::new(kind, a.severity))
}

fn gen(a: GenArgs) -> Result<()> {
    if a.count < 1 {
        return Err(Error::Validation("--count must be at least 1".into()));
    }
    if !(a.sigma >= 0.0) {
        return Err(Error::Validation("--sigma must be >= 0".into()));
    }
    let w = build_part(&a)?;
    if let Some(p) = &a.wireframe {
        fs::write(p, w.to_json()).map_err(|e| io_error(p, e))?;
    }
    let base = sample_cloud(&w);
    let format = CloudFormat::from(a.format);
    let noisy = |i: usize| -> PointCloud {
        let seed = if a.count == 1 { a.seed } else { derive_seed(a.seed, &[i as u64]) };
        add_noise(&base, &NoiseSpec::new(a.sigma, seed))
    };
    if a.count == 1 {
        return write_output(a.out.as_deref(), &format_pointcloud(&noisy(0), format));
    }
    let dir = a
        .out
        .as_ref()
        .ok_or_else(|| Error::Validation("--count above 1 needs --out DIR".into()))?;
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let ext = match format {
        CloudFormat::Xyz => "xyz",
        CloudFormat::Csv => "csv",
    };
    let width = (a.count - 1).to_string().len().max(4);
    for i in 0..a.count {
        let path = dir.join(format!("part_{i:0width$}.{ext}"));
        save_pointcloud(&noisy(i).with_label(format!("part_{i:0width$}")), &path, format)?;
    }
    Ok(())
}

fn load_cloud(path: &Path) -> Result<PointCloud> {
    load_pointcloud(path, CloudFormat::from_path(path))
}

fn ph(a: PhArgs) -> Result<()> {
    let cloud = load_cloud(&a.cloud)?;
    let d = cloud_persistence(&cloud, &a.ph.settings(a.max_dim))?;
    let mut buf = Vec::new();
    d.write_csv(&mut buf)?;
    write_output(a.out.as_deref(), &String::from_utf8(buf).expect("csv output is utf-8"))
}

fn dist(a: DistArgs) -> Result<()> {
    let x = PersistenceDiagram::load_csv(&a.a)?;
    let y = PersistenceDiagram::load_csv(&a.b)?;
    println!("{}", a.distance.kind()?.between(&x, &y, a.dim));
    Ok(())
}

/// Cloud files of a directory in name order.
fn cloud_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| io_error(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if path.is_file() && (ext.eq_ignore_ascii_case("xyz") || ext.eq_ignore_ascii_case("csv")) {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Validation(format!("no .xyz or .csv clouds in {}", dir.display())));
    }
    Ok(files)
}

fn reference_diagrams(dir: &Path, m0: Option<usize>, ph: &PhSettings) -> Result<Vec<PersistenceDiagram>> {
    let mut files = cloud_files(dir)?;
    if let Some(m0) = m0 {
        if files.len() < m0 {
            return Err(Error::Validation(format!(
                "--m0 {m0} requested but {} holds {} clouds",
                dir.display(),
                files.len()
            )));
        }
        files.truncate(m0);
    }
    files
        .iter()
        .map(|f| cloud_persistence(&load_cloud(f)?, ph))
        .collect()
}

fn permtest(a: PermtestArgs) -> Result<()> {
    if !(a.alpha > 0.0 && a.alpha <= 1.0) {
        return Err(Error::Validation(format!("alpha must lie in (0, 1], got {}", a.alpha)));
    }
    let settings = a.ph.settings(a.dim);
    let refs = reference_diagrams(&a.reference, a.m0, &settings)?;
    let reference = build_reference(&refs, a.dim, a.distance.kind()?)?;
    let y = cloud_persistence(&load_cloud(&a.cloud)?, &settings)?;
    let t = permutation_test(&reference, &y);
    println!("m0,{}", reference.m0());
    println!("observed_stat,{}", t.observed_stat);
    match t.alpha_limit(a.alpha) {
        Some(l) => println!("alpha_limit,{l}"),
        None => println!("alpha_limit,nan"),
    }
    println!("p_value,{}", t.p_value);
    println!("signal,{}", t.rejects(a.alpha) as u8);
    if let Some(path) = &a.null_out {
        let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["left_out", "null_stat"])?;
        for (k, s) in t.null_stats.iter().enumerate() {
            let who = if k < reference.m0() { k.to_string() } else { "new".to_string() };
            w.write_record([who, s.to_string()])?;
        }
        w.flush().map_err(|e| io_error(path, e))?;
    }
    Ok(())
}

fn spc_run(a: SpcRunArgs) -> Result<()> {
    let settings = a.ph.settings(a.dims.max_dim());
    let refs = reference_diagrams(&a.reference, a.m0, &settings)?;
    let cfg = ChartConfig {
        alpha: a.alpha,
        m0: refs.len(),
        dims: a.dims,
        distance: a.distance.kind()?,
        max_steps: usize::MAX,
    };
    let refs = ChartReferences::from_diagrams(&refs, &cfg, settings)?;
    let mut steps = Vec::new();
    for (i, f) in cloud_files(&a.stream)?.iter().enumerate() {
        let step = chart_step(&refs, &load_cloud(f)?, &cfg, i + 1)?;
        let signal = step.signal;
        steps.push(step);
        if signal && !a.no_stop {
            break;
        }
    }
    match steps.iter().find(|s| s.signal) {
        Some(s) => eprintln!("signal at part {}", s.part_index),
        None => eprintln!("no signal in {} parts", steps.len()),
    }
    let mut buf = Vec::new();
    write_trace_csv(&steps, &mut buf)?;
    write_output(a.out.as_deref(), &String::from_utf8(buf).expect("csv output is utf-8"))
}

fn print_report(label: Option<f64>, r: &RunLengthReport) {
    let s = &r.summary;
    let prefix = label.map_or(String::new(), |k| format!("severity {k}: "));
    println!(
        "{prefix}ARL {:.4} SDRL {:.4} ({} replications, {} censored; geometric reference ARL {:.4} SDRL {:.4})",
        s.combined.arl, s.combined.sdrl, s.n_replications, s.combined.n_censored, s.combined.reference_arl, s.combined.reference_sdrl
    );
    if s.per_dim.len() > 1 {
        for (d, c) in &s.per_dim {
            println!("{prefix}  dim {d}: ARL {:.4} SDRL {:.4} ({} censored)", c.arl, c.sdrl, c.n_censored);
        }
    }
}

fn simulate_rl(a: RlArgs) -> Result<()> {
    let cfg = a.overrides.load()?;
    if a.severities.is_empty() {
        print_report(None, &run_length_experiment(&cfg)?);
    } else {
        for (k, r) in a.severities.iter().zip(severity_sweep(&cfg, &a.severities)?) {
            print_report(Some(*k), &r);
        }
    }
    Ok(())
}

fn simulate_power(a: PowerArgs) -> Result<()> {
    let cfg = a.overrides.load()?;
    let study = pvalue_power_study(&cfg, a.tests)?;
    for (d, ks) in study.dims.iter().zip(&study.ks) {
        println!(
            "dim {d}: n {} KS statistic {:.4} p-value {:.4} (largest gap at {:.4})",
            ks.n, ks.ks_statistic, ks.p_value, ks.argmax
        );
    }
    Ok(())
}
