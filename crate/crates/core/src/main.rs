use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::json;

use cointopo::cointegration::{all_residuals, johansen};
use cointopo::embedding::{delay_embed, PointCloud};
use cointopo::gp::{gp_residuals, GpConfig};
use cointopo::metrics::{diagram_distance_matrix, DiagramDistanceMatrix, EssentialMode};
use cointopo::pipeline::{self, Manifest, PipelineConfig, Window};
use cointopo::series::{drop_missing, load_csv, standardize, MultiSeries};
use cointopo::stationarity::{adf_test_with, schwert_lags, Deterministic, Significance};
use cointopo::synth;
use cointopo::vr::{maxmin_subsample, pairwise_distances, rips_persistence, PersistenceDiagram};
use cointopo::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(name = "cointopo", version, about = "Cointegration and persistent homology for multichannel time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Augmented Dickey-Fuller unit-root test on one channel.
    Adf(AdfArgs),
    /// Johansen cointegrating vectors and residual series.
    Cointegrate(CointegrateArgs),
    /// Gaussian-process fit of a target channel and its residuals.
    GpFit(GpFitArgs),
    /// Time-delay embedding of one channel.
    Embed(EmbedArgs),
    /// Vietoris-Rips persistence diagram of a point cloud.
    Persist(PersistArgs),
    /// Wasserstein distances between persistence diagrams.
    Distance(DistanceArgs),
    /// Synthetic data generators.
    Synth(SynthArgs),
    /// Six-series comparison of a target channel against GP and linear residuals.
    Pipeline(PipelineArgs),
    /// Channels versus all Johansen residuals.
    LinearResiduals(PipelineArgs),
    /// Re-run the workflow recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Write to this directory instead of the recorded one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AdfArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    channel: String,
    /// Lagged differences; Schwert's rule when omitted.
    #[arg(long)]
    lags: Option<usize>,
    /// Significance level for the verdict: 1, 5 or 10 (percent).
    #[arg(long, default_value = "5")]
    level: String,
    /// Drop the intercept from the test regression.
    #[arg(long)]
    no_constant: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CointegrateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated channel labels; all channels when omitted.
    #[arg(long, value_delimiter = ',')]
    channels: Vec<String>,
    #[arg(long, default_value_t = 1)]
    lag: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GpFitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long, value_delimiter = ',', required = true)]
    regressors: Vec<String>,
    #[arg(long)]
    train_window: Window,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    channel: String,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 75)]
    alpha: usize,
    /// Standardize the channel before embedding.
    #[arg(long)]
    standardize: bool,
    /// Output CSV file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PersistArgs {
    /// Point cloud CSV, one point per row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    max_dim: usize,
    /// Filtration cut-off; the enclosing radius when omitted.
    #[arg(long)]
    max_scale: Option<f64>,
    /// Maxmin-subsample clouds larger than this.
    #[arg(long, default_value_t = 400)]
    subsample: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for diagram.csv and diagram.svg; CSV to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistanceArgs {
    /// Diagram CSV files (at least two).
    #[arg(long = "input", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    dims: Vec<usize>,
    #[arg(long, default_value = "truncate")]
    essential: EssentialMode,
    /// Output directory for the matrices; combined matrix to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(subcommand)]
    kind: SynthKind,
    /// Output CSV file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SynthKind {
    /// sin(t) + sin(2t) + sin(3t) sampled at t = k dt.
    Sine {
        #[arg(long, default_value_t = 600)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
    },
    /// Gaussian white noise.
    Noise {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Gaussian random walk.
    Walk {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Channels sharing a random-walk trend with a known stationary combination.
    Cointegrated {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,-2")]
        beta: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Four-channel seasonal mimic with a nonlinear excursion on channel 2.
    Z24 {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file overriding the generator settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON configuration; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long, value_delimiter = ',')]
    regressors: Option<Vec<String>>,
    #[arg(long)]
    gp1_window: Option<Window>,
    #[arg(long)]
    gp2_window: Option<Window>,
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    max_dim: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long)]
    max_scale: Option<f64>,
    #[arg(long)]
    essential: Option<EssentialMode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl PipelineArgs {
    fn resolve(self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::from_json_file(p).map_err(|e| e.in_stage("config"))?,
            None => PipelineConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        take!(target, regressors, gp1_window, gp2_window, alpha, dim, max_dim, p, subsample, essential, seed);
        if self.input.is_some() {
            cfg.input = self.input;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        if self.max_scale.is_some() {
            cfg.max_scale = self.max_scale;
        }
        if cfg.out.is_none() {
            return Err(Error::Parameter("an output directory is required (--out)".into()));
        }
        Ok(cfg)
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

fn load_clean(path: &Path, needed: &[&str]) -> Result<MultiSeries> {
    let ms = load_csv(path, needed)?;
    if ms.has_missing() {
        drop_missing(&ms)
    } else {
        Ok(ms)
    }
}

fn adf(a: AdfArgs) -> Result<()> {
    let level = Significance::parse(&a.level)?;
    let ts = load_clean(&a.input, &[&a.channel])?.channel(&a.channel)?;
    let lags = a.lags.unwrap_or_else(|| schwert_lags(ts.len()));
    let det = if a.no_constant { Deterministic::None } else { Deterministic::Constant };
    let r = adf_test_with(&ts, lags, det).map_err(|e| e.in_stage("adf"))?;
    let verdict = if r.reject_unit_root(level) { "reject unit root" } else { "fail to reject unit root" };
    println!("channel: {}", a.channel);
    println!("t_p: {}", r.t_p);
    println!("lags: {}  observations: {}", r.lags, r.n_used);
    println!(
        "critical values: 1% {}  5% {}  10% {}",
        r.critical_values.one, r.critical_values.five, r.critical_values.ten
    );
    println!("at {level}: {verdict}");
    if let Some(dir) = a.out {
        out_dir(&dir)?;
        write_json(
            &dir.join("adf.json"),
            &json!({
                "channel": a.channel,
                "t_p": r.t_p,
                "lags": r.lags,
                "n_used": r.n_used,
                "critical_values": {"1%": r.critical_values.one, "5%": r.critical_values.five, "10%": r.critical_values.ten},
                "reject": {
                    "1%": r.reject_unit_root(Significance::OnePercent),
                    "5%": r.reject_unit_root(Significance::FivePercent),
                    "10%": r.reject_unit_root(Significance::TenPercent),
                },
            }),
        )?;
    }
    Ok(())
}

fn cointegrate(a: CointegrateArgs) -> Result<()> {
    let wanted: Vec<&str> = a.channels.iter().map(String::as_str).collect();
    let ms = load_clean(&a.input, &wanted)?;
    let ms = if wanted.is_empty() { ms } else { ms.select(&wanted)? };
    let jr = johansen(&ms, a.lag).map_err(|e| e.in_stage("cointegration"))?;
    out_dir(&a.out)?;
    let path = a.out.join("eigen.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let mut header = vec!["eigenvalue".to_string()];
    header.extend(jr.labels.iter().cloned());
    w.write_record(&header)?;
    for (l, v) in jr.eigenvalues.iter().zip(&jr.vectors) {
        let mut rec = vec![l.to_string()];
        rec.extend(v.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    let res = all_residuals(&ms, &jr)?;
    MultiSeries::from_series(&res)?.write_csv(create(&a.out.join("residuals.csv"))?)?;
    for (l, v) in jr.eigenvalues.iter().zip(&jr.vectors) {
        println!("{l}\t{v:?}");
    }
    Ok(())
}

fn gp_fit(a: GpFitArgs) -> Result<()> {
    let mut needed: Vec<&str> = vec![&a.target];
    needed.extend(a.regressors.iter().map(String::as_str));
    let ms = load_clean(&a.input, &needed)?;
    let regs: Vec<&str> = a.regressors.iter().map(String::as_str).collect();
    let cfg = GpConfig { seed: a.seed, ..GpConfig::default() };
    let (res, model) = gp_residuals(&ms, &a.target, &regs, a.train_window.range(), &cfg).map_err(|e| e.in_stage("gp"))?;
    out_dir(&a.out)?;
    MultiSeries::from_series(&[res.with_label("residual")])?.write_csv(create(&a.out.join("residuals.csv"))?)?;
    write_json(
        &a.out.join("gp.json"),
        &json!({
            "target": a.target,
            "regressors": a.regressors,
            "train_window": a.train_window.to_string(),
            "hyperparameters": model.hyperparameters(),
            "target_mean": model.target_mean(),
            "target_std": model.target_std(),
            "log_marginal_likelihood": model.log_marginal_likelihood(),
        }),
    )?;
    println!("{}", serde_json::to_string(model.hyperparameters())?);
    Ok(())
}

fn embed(a: EmbedArgs) -> Result<()> {
    let mut ts = load_clean(&a.input, &[&a.channel])?.channel(&a.channel)?;
    if a.standardize {
        ts = standardize(&ts)?;
    }
    let pc = delay_embed(&ts, a.dim, a.alpha).map_err(|e| e.in_stage("embed"))?;
    match a.out {
        Some(p) => pc.write_csv(create(&p)?),
        None => pc.write_csv(io::stdout().lock()),
    }
}

fn persist(a: PersistArgs) -> Result<()> {
    let file = fs::File::open(&a.input).map_err(|e| io_err(&a.input, e))?;
    let mut pc = PointCloud::read_csv(io::BufReader::new(file), &a.input.display().to_string())?;
    if pc.len() > a.subsample {
        pc = maxmin_subsample(&pc, a.subsample, a.seed)?;
    }
    let dm = pairwise_distances(&pc)?;
    let scale = a.max_scale.unwrap_or_else(|| {
        let r = dm.enclosing_radius();
        if r > 0.0 {
            r
        } else {
            1.0
        }
    });
    let pd = rips_persistence(&dm, a.max_dim, scale).map_err(|e| e.in_stage("persistence"))?;
    match a.out {
        Some(dir) => {
            out_dir(&dir)?;
            pd.write_csv(create(&dir.join("diagram.csv"))?)?;
            let svg = dir.join("diagram.svg");
            let mut w = create(&svg)?;
            w.write_all(pd.to_svg(&a.input.display().to_string()).as_bytes())
                .and_then(|_| w.flush())
                .map_err(|e| io_err(&svg, e))
        }
        None => pd.write_csv(io::stdout().lock()),
    }
}

/// File stems, with full paths when stems collide and a `#k` suffix when the
/// same path is given more than once.
fn diagram_labels(inputs: &[PathBuf]) -> Vec<String> {
    let stems: Vec<String> = inputs
        .iter()
        .map(|p| p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()))
        .collect();
    let mut sorted = stems.clone();
    sorted.sort();
    sorted.dedup();
    let base: Vec<String> = if sorted.len() == stems.len() {
        stems
    } else {
        inputs.iter().map(|p| p.display().to_string()).collect()
    };
    let mut seen: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    base.iter()
        .map(|b| {
            let k = seen.entry(b.as_str()).or_insert(0);
            *k += 1;
            if *k == 1 {
                b.clone()
            } else {
                format!("{b}#{k}")
            }
        })
        .collect()
}

fn distance(a: DistanceArgs) -> Result<()> {
    if a.inputs.len() < 2 {
        return Err(Error::Parameter("distance needs at least two --input diagrams".into()));
    }
    let labels = diagram_labels(&a.inputs);
    let mut diagrams = Vec::new();
    for (p, label) in a.inputs.iter().zip(labels) {
        let file = fs::File::open(p).map_err(|e| io_err(p, e))?;
        let pd = PersistenceDiagram::read_csv(io::BufReader::new(file), None)?;
        diagrams.push((label, pd));
    }
    let m = diagram_distance_matrix(&diagrams, a.p, &a.dims, a.essential).map_err(|e| e.in_stage("distances"))?;
    match a.out {
        Some(dir) => {
            out_dir(&dir)?;
            m.write_combined_csv(create(&dir.join("distances_combined.csv"))?)?;
            for (i, k) in m.dims.iter().enumerate() {
                DiagramDistanceMatrix::write_matrix_csv(
                    &m.labels,
                    &m.per_dimension[i],
                    create(&dir.join(format!("distances_h{k}.csv")))?,
                )?;
            }
        }
        None => {
            if m.labels.len() == 2 {
                println!("{}", m.combined[0][1]);
            } else {
                m.write_combined_csv(io::stdout().lock())?;
            }
        }
    }
    Ok(())
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let ms = match a.kind {
        SynthKind::Sine { n, dt } => MultiSeries::from_series(&[synth::gen_sine_mix(n, dt)?.with_label("y")])?,
        SynthKind::Noise { n, seed } => MultiSeries::from_series(&[synth::gen_white_noise(n, seed)?.with_label("y")])?,
        SynthKind::Walk { n, seed } => MultiSeries::from_series(&[synth::gen_random_walk(n, seed)?.with_label("y")])?,
        SynthKind::Cointegrated { n, beta, seed } => synth::gen_cointegrated_system(n, beta.len(), &beta, seed)?.0,
        SynthKind::Z24 { seed, config } => {
            let mut cfg = match config {
                Some(p) => {
                    let text = fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
                    serde_json::from_str(&text)?
                }
                None => synth::Z24MimicConfig::default(),
            };
            if seed != 0 || cfg.seed == 0 {
                cfg.seed = seed;
            }
            synth::gen_z24_mimic(&cfg)?
        }
    };
    match a.out {
        Some(p) => ms.write_csv(create(&p)?),
        None => ms.write_csv(io::stdout().lock()),
    }
}

fn report(out: &pipeline::PipelineOutput) -> Result<()> {
    out.matrix.write_combined_csv(io::stdout().lock())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Adf(a) => adf(a),
        Command::Cointegrate(a) => cointegrate(a),
        Command::GpFit(a) => gp_fit(a),
        Command::Embed(a) => embed(a),
        Command::Persist(a) => persist(a),
        Command::Distance(a) => distance(a),
        Command::Synth(a) => synth_cmd(a),
        Command::Pipeline(a) => report(&pipeline::run_six_series(&a.resolve()?)?),
        Command::LinearResiduals(a) => report(&pipeline::run_linear_residuals(&a.resolve()?)?),
        Command::Replay { manifest, out } => {
            let mut m = Manifest::read(&manifest)?;
            if out.is_some() {
                m.config.out = out;
            }
            report(&pipeline::replay(&m)?)
        }
    }
}

fn subcommand_name(cli: &Cli) -> &'static str {
    match cli.command {
        Command::Adf(_) => "adf",
        Command::Cointegrate(_) => "cointegrate",
        Command::GpFit(_) => "gp-fit",
        Command::Embed(_) => "embed",
        Command::Persist(_) => "persist",
        Command::Distance(_) => "distance",
        Command::Synth(_) => "synth",
        Command::Pipeline(_) => "pipeline",
        Command::LinearResiduals(_) => "linear-residuals",
        Command::Replay { .. } => "replay",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let name = subcommand_name(&cli);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Usage => {
                    if let Some(sub) = Cli::command().find_subcommand_mut(name) {
                        eprintln!("\n{}", sub.render_help());
                    }
                    ExitCode::from(2)
                }
                ErrorKind::Data => ExitCode::from(3),
                ErrorKind::Numerical => ExitCode::from(4),
            }
        }
    }
}
