//! End-to-end workflows: build the comparison series, embed each one,
//! compute persistence and compare diagrams.
//!
//! Two workflows are provided. [`six_series`] compares the raw target channel
//! against GP predictions and the linear and GP residuals; [`linear_residuals`]
//! compares every channel against every Johansen residual. Every series is
//! standardized immediately before embedding.

use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cointegration::{all_residuals, johansen, residual_series};
use crate::embedding::delay_embed;
use crate::error::{Error, Result, StageExt};
use crate::gp::{gp_residuals, GpConfig, Hyperparameters};
use crate::metrics::{diagram_distance_matrix, DiagramDistanceMatrix, EssentialMode};
use crate::series::{load_csv, standardize, MultiSeries, TimeSeries};
use crate::vr::{maxmin_subsample, pairwise_distances, rips_persistence, PersistenceDiagram};

/// Row order of the six-series comparison.
pub const SIX_SERIES_LABELS: [&str; 6] = ["RAW", "GP1", "GP2", "LIN_CO", "GP1_CO", "GP2_CO"];

/// Half-open index range written `start:end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Window {
    pub start: usize,
    pub end: usize,
}

impl Window {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("window must be start:end with start < end, got '{s}'"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let start: usize = a.trim().parse().map_err(|_| bad())?;
        let end: usize = b.trim().parse().map_err(|_| bad())?;
        if start >= end {
            return Err(bad());
        }
        Ok(Self { start, end })
    }
}

impl TryFrom<String> for Window {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Window> for String {
    fn from(w: Window) -> String {
        w.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub target: String,
    pub regressors: Vec<String>,
    pub gp1_window: Window,
    pub gp2_window: Window,
    pub alpha: usize,
    pub dim: usize,
    /// Highest simplex dimension; homology is reported for `0..max_dim`.
    pub max_dim: usize,
    pub p: f64,
    /// Embedded clouds larger than this are maxmin-subsampled.
    pub subsample: usize,
    /// Filtration cut-off; the enclosing radius of each cloud when absent.
    pub max_scale: Option<f64>,
    pub johansen_lag: usize,
    pub essential: EssentialMode,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub gp: GpConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: None,
            target: "w2".into(),
            regressors: vec!["w1".into(), "w3".into(), "w4".into()],
            gp1_window: Window::new(0, 1000),
            gp2_window: Window::new(1500, 2500),
            alpha: 75,
            dim: 3,
            max_dim: 3,
            p: 2.0,
            subsample: 400,
            max_scale: None,
            johansen_lag: 1,
            essential: EssentialMode::Truncate,
            out: None,
            seed: 0,
            gp: GpConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha < 1 {
            return Err(Error::Parameter("alpha must be >= 1".into()));
        }
        if self.dim < 2 {
            return Err(Error::Parameter("pipeline embedding dimension must be >= 2".into()));
        }
        if self.max_dim < 1 {
            return Err(Error::Parameter("max_dim must be >= 1".into()));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::Parameter(format!("p must be >= 1, got {}", self.p)));
        }
        if self.subsample < 1 {
            return Err(Error::Parameter("subsample cap must be >= 1".into()));
        }
        if let Some(s) = self.max_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Parameter(format!("max_scale must be positive, got {s}")));
            }
        }
        if self.johansen_lag < 1 {
            return Err(Error::Parameter("johansen_lag must be >= 1".into()));
        }
        Ok(())
    }

    fn check_windows(&self, n: usize) -> Result<()> {
        for (name, w) in [("gp1_window", self.gp1_window), ("gp2_window", self.gp2_window)] {
            if w.end > n {
                return Err(Error::Parameter(format!("{name} {w} exceeds the {n} available samples")));
            }
        }
        Ok(())
    }

    /// Homology dimensions compared, at most `0..=2`.
    pub fn homology_dims(&self) -> Vec<usize> {
        (0..self.max_dim.min(3)).collect()
    }

    fn load(&self) -> Result<MultiSeries> {
        let path = self
            .input
            .as_ref()
            .ok_or_else(|| Error::Parameter("no input file given".into()))?;
        load_csv(path, &[]).stage("load")
    }
}

/// Per-series record kept in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub label: String,
    pub embedded_points: usize,
    pub analysed_points: usize,
    pub max_scale: f64,
    pub intervals_per_dimension: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpSummary {
    pub label: String,
    pub window: Window,
    pub hyperparameters: Hyperparameters,
    pub log_marginal_likelihood: f64,
}

/// Everything needed to replay a run: `config` alone reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub workflow: String,
    pub config: PipelineConfig,
    pub input_rows: usize,
    pub johansen_eigenvalues: Vec<f64>,
    pub johansen_leading_vector: Vec<f64>,
    pub gp: Vec<GpSummary>,
    pub series: Vec<SeriesSummary>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub matrix: DiagramDistanceMatrix,
    /// Compared series in matrix order, before standardization.
    pub series: Vec<TimeSeries>,
    pub diagrams: Vec<PersistenceDiagram>,
    pub manifest: Manifest,
}

impl PipelineOutput {
    pub fn diagram(&self, label: &str) -> Option<&PersistenceDiagram> {
        self.matrix
            .labels
            .iter()
            .position(|l| l == label)
            .map(|i| &self.diagrams[i])
    }
}

/// Standardize, embed, subsample and compute persistence for one series.
pub fn series_diagram(ts: &TimeSeries, cfg: &PipelineConfig) -> Result<(PersistenceDiagram, SeriesSummary)> {
    let z = standardize(ts)?;
    let cloud = delay_embed(&z, cfg.dim, cfg.alpha)?;
    let embedded = cloud.len();
    let cloud = if embedded > cfg.subsample {
        maxmin_subsample(&cloud, cfg.subsample, cfg.seed)?
    } else {
        cloud
    };
    let dm = pairwise_distances(&cloud)?;
    let scale = match cfg.max_scale {
        Some(s) => s,
        None => {
            let r = dm.enclosing_radius();
            if r > 0.0 {
                r
            } else {
                1.0
            }
        }
    };
    let pd = rips_persistence(&dm, cfg.max_dim, scale)?;
    let summary = SeriesSummary {
        label: ts.label().to_string(),
        embedded_points: embedded,
        analysed_points: cloud.len(),
        max_scale: scale,
        intervals_per_dimension: (0..pd.homology_dims()).map(|k| pd.intervals(k).len()).collect(),
    };
    Ok((pd, summary))
}

fn compare(
    series: Vec<TimeSeries>,
    cfg: &PipelineConfig,
    mut manifest: Manifest,
) -> Result<PipelineOutput> {
    let results: Vec<(PersistenceDiagram, SeriesSummary)> = series
        .par_iter()
        .map(|ts| series_diagram(ts, cfg).stage(&format!("persistence[{}]", ts.label())))
        .collect::<Result<_>>()?;
    let (diagrams, summaries): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let labelled: Vec<(String, PersistenceDiagram)> = series
        .iter()
        .map(|s| s.label().to_string())
        .zip(diagrams.iter().cloned())
        .collect();
    let matrix = diagram_distance_matrix(&labelled, cfg.p, &cfg.homology_dims(), cfg.essential).stage("distances")?;
    manifest.series = summaries;
    Ok(PipelineOutput {
        matrix,
        series,
        diagrams,
        manifest,
    })
}

fn base_manifest(workflow: &str, cfg: &PipelineConfig, rows: usize) -> Manifest {
    Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        workflow: workflow.into(),
        config: cfg.clone(),
        input_rows: rows,
        johansen_eigenvalues: Vec::new(),
        johansen_leading_vector: Vec::new(),
        gp: Vec::new(),
        series: Vec::new(),
    }
}

/// RAW, GP1, GP2 (predictions), LIN_CO (leading Johansen residual) and
/// GP1_CO, GP2_CO (GP residuals), in that order.
pub fn six_series(ms: &MultiSeries, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    if ms.n_channels() < 2 {
        return Err(Error::Schema(format!("need at least 2 channels, found {}", ms.n_channels())));
    }
    cfg.check_windows(ms.len())?;
    let regs: Vec<&str> = cfg.regressors.iter().map(String::as_str).collect();
    let raw = ms.channel(&cfg.target).stage("load")?;

    let mut gp_cfg = cfg.gp.clone();
    gp_cfg.seed = cfg.seed;
    let fits: Vec<(TimeSeries, crate::gp::GpModel)> = [cfg.gp1_window, cfg.gp2_window]
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            gp_residuals(ms, &cfg.target, &regs, w.range(), &gp_cfg).stage(&format!("gp{}", i + 1))
        })
        .collect::<Result<_>>()?;

    let mut channels: Vec<&str> = vec![cfg.target.as_str()];
    channels.extend(regs.iter().copied());
    let sub = ms.select(&channels).stage("cointegration")?;
    let jr = johansen(&sub, cfg.johansen_lag).stage("cointegration")?;
    let lin = residual_series(&sub, jr.leading()).stage("cointegration")?;

    let mut series = vec![raw.clone().with_label(SIX_SERIES_LABELS[0])];
    for (i, (resid, _)) in fits.iter().enumerate() {
        let pred: Vec<f64> = raw.values().iter().zip(resid.values()).map(|(y, e)| y - e).collect();
        series.push(TimeSeries::new(SIX_SERIES_LABELS[1 + i], pred)?);
    }
    series.push(lin.with_label(SIX_SERIES_LABELS[3]));
    for (i, (resid, _)) in fits.iter().enumerate() {
        series.push(resid.clone().with_label(SIX_SERIES_LABELS[4 + i]));
    }

    let mut manifest = base_manifest("six-series", cfg, ms.len());
    manifest.johansen_eigenvalues = jr.eigenvalues.clone();
    manifest.johansen_leading_vector = jr.leading().to_vec();
    manifest.gp = fits
        .iter()
        .zip([cfg.gp1_window, cfg.gp2_window])
        .enumerate()
        .map(|(i, ((_, m), w))| GpSummary {
            label: format!("GP{}", i + 1),
            window: w,
            hyperparameters: m.hyperparameters().clone(),
            log_marginal_likelihood: m.log_marginal_likelihood(),
        })
        .collect();
    compare(series, cfg, manifest)
}

/// All channels followed by every Johansen residual `eps1..epsm`, ordered by
/// descending eigenvalue.
pub fn linear_residuals(ms: &MultiSeries, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    if ms.n_channels() < 2 {
        return Err(Error::Schema(format!("need at least 2 channels, found {}", ms.n_channels())));
    }
    let jr = johansen(ms, cfg.johansen_lag).stage("cointegration")?;
    let mut series = ms.channels().stage("load")?;
    series.extend(all_residuals(ms, &jr).stage("cointegration")?);
    let mut manifest = base_manifest("linear-residuals", cfg, ms.len());
    manifest.johansen_eigenvalues = jr.eigenvalues.clone();
    manifest.johansen_leading_vector = jr.leading().to_vec();
    compare(series, cfg, manifest)
}

/// Loads `cfg.input`, runs [`six_series`] and writes the outputs when
/// `cfg.out` is set.
pub fn run_six_series(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let ms = cfg.load()?;
    let out = six_series(&ms, cfg)?;
    if let Some(dir) = &cfg.out {
        write_outputs(&out, dir)?;
    }
    Ok(out)
}

pub fn run_linear_residuals(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let ms = cfg.load()?;
    let out = linear_residuals(&ms, cfg)?;
    if let Some(dir) = &cfg.out {
        write_outputs(&out, dir)?;
    }
    Ok(out)
}

/// Runs the workflow recorded in a manifest again.
pub fn replay(manifest: &Manifest) -> Result<PipelineOutput> {
    match manifest.workflow.as_str() {
        "six-series" => run_six_series(&manifest.config),
        "linear-residuals" => run_linear_residuals(&manifest.config),
        other => Err(Error::Parameter(format!("unknown workflow '{other}' in manifest"))),
    }
}

/// Names of the files [`write_outputs`] produces for `out`.
pub fn output_files(out: &PipelineOutput) -> Vec<String> {
    let mut files = vec!["distances_combined.csv".to_string()];
    files.extend(out.matrix.dims.iter().map(|k| format!("distances_h{k}.csv")));
    for l in &out.matrix.labels {
        files.push(format!("diagram_{l}.csv"));
        files.push(format!("diagram_{l}.svg"));
    }
    files.push("manifest.json".into());
    files
}

/// Writes matrices, diagrams and the manifest into `dir`. On failure every
/// file written by this call is removed again.
pub fn write_outputs(out: &PipelineOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = write_all(out, dir, &mut written);
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
    }
    result.stage("write")
}

fn write_all(out: &PipelineOutput, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let mut create = |name: &str| -> Result<BufWriter<fs::File>> {
        let path = dir.join(name);
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(BufWriter::new(f))
    };
    let m = &out.matrix;
    m.write_combined_csv(create("distances_combined.csv")?)?;
    for (i, k) in m.dims.iter().enumerate() {
        DiagramDistanceMatrix::write_matrix_csv(&m.labels, &m.per_dimension[i], create(&format!("distances_h{k}.csv"))?)?;
    }
    for (label, pd) in m.labels.iter().zip(&out.diagrams) {
        pd.write_csv(create(&format!("diagram_{label}.csv"))?)?;
        let svg_name = format!("diagram_{label}.svg");
        let mut w = create(&svg_name)?;
        std::io::Write::write_all(&mut w, pd.to_svg(label).as_bytes()).map_err(|e| Error::io(dir.join(&svg_name), e))?;
        std::io::Write::flush(&mut w).map_err(|e| Error::io(dir.join(&svg_name), e))?;
    }
    let mut w = create("manifest.json")?;
    serde_json::to_writer_pretty(&mut w, &out.manifest)?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| Error::io(dir.join("manifest.json"), e))?;
    std::io::Write::flush(&mut w).map_err(|e| Error::io(dir.join("manifest.json"), e))?;
    Ok(())
}
