//! Exact Gaussian-process regression with a squared-exponential kernel.
//!
//! Inputs and targets are standardized internally. Hyperparameters (one
//! lengthscale per input, signal variance, noise variance) live in that
//! standardized space and are searched in log space inside fixed boxes.
//! Predictions are returned on the original target scale.

use std::ops::Range;

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, Side};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{MultiSeries, TimeSeries};
use crate::synth::rng;

const LOG_2PI: f64 = 1.837_877_066_409_345_3;

/// Log-space boxes: lengthscale, signal variance, noise variance.
const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-3, 1e3);
const SIGNAL_BOUNDS: (f64, f64) = (1e-4, 1e4);
const NOISE_BOUNDS: (f64, f64) = (1e-8, 10.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    pub n_starts: usize,
    pub max_iter: usize,
    /// Stop when the projected log-space gradient's infinity norm drops below this.
    pub grad_tol: f64,
    pub seed: u64,
    /// Hyperparameters are searched on at most this many evenly spaced
    /// training points; the final model always conditions on all of them.
    pub max_opt_points: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            n_starts: 5,
            max_iter: 200,
            grad_tol: 1e-5,
            seed: 0,
            max_opt_points: 300,
        }
    }
}

/// Kernel hyperparameters in standardized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Hyperparameters {
    fn to_log(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_variance.ln());
        v.push(self.noise_variance.ln());
        v
    }

    fn from_log(theta: &[f64]) -> Self {
        let d = theta.len() - 2;
        Self {
            lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
            signal_variance: theta[d].exp(),
            noise_variance: theta[d + 1].exp(),
        }
    }
}

fn log_bounds(d_in: usize) -> Vec<(f64, f64)> {
    let mut b = vec![(LENGTHSCALE_BOUNDS.0.ln(), LENGTHSCALE_BOUNDS.1.ln()); d_in];
    b.push((SIGNAL_BOUNDS.0.ln(), SIGNAL_BOUNDS.1.ln()));
    b.push((NOISE_BOUNDS.0.ln(), NOISE_BOUNDS.1.ln()));
    b
}

#[derive(Debug, Clone)]
struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    fn fit(rows: &[Vec<f64>], d: usize) -> Self {
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        let mut std = vec![0.0; d];
        for k in 0..d {
            mean[k] = rows.iter().map(|r| r[k]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            std[k] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Self { mean, std }
    }

    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

fn sq_dist_scaled(a: &[f64], b: &[f64], ls: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(ls)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum()
}

/// Log marginal likelihood and its gradient with respect to the log
/// hyperparameters, on standardized data.
struct Objective<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    d_in: usize,
    /// Per input dimension, squared coordinate differences (row-major n x n).
    sq_diffs: Vec<Vec<f64>>,
}

impl<'a> Objective<'a> {
    fn new(x: &'a [Vec<f64>], y: &'a [f64], d_in: usize) -> Self {
        let n = x.len();
        let sq_diffs = (0..d_in)
            .map(|k| {
                let mut m = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        m[i * n + j] = (x[i][k] - x[j][k]).powi(2);
                    }
                }
                m
            })
            .collect();
        Self { x, y, d_in, sq_diffs }
    }

    fn signal_kernel(&self, h: &Hyperparameters) -> Vec<f64> {
        let n = self.x.len();
        let inv_l2: Vec<f64> = h.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        let mut kf = vec![0.0; n * n];
        for idx in 0..n * n {
            let r2: f64 = (0..self.d_in).map(|k| self.sq_diffs[k][idx] * inv_l2[k]).sum();
            kf[idx] = h.signal_variance * (-0.5 * r2).exp();
        }
        kf
    }

    /// `None` when the kernel matrix is not numerically positive definite.
    fn evaluate(&self, theta: &[f64], want_grad: bool) -> Option<(f64, Vec<f64>)> {
        let h = Hyperparameters::from_log(theta);
        let n = self.x.len();
        let kf = self.signal_kernel(&h);
        let k = Mat::from_fn(n, n, |i, j| kf[i * n + j] + if i == j { h.noise_variance } else { 0.0 });
        let llt = k.llt(Side::Lower).ok()?;
        let y = Mat::from_fn(n, 1, |i, _| self.y[i]);
        let alpha = llt.solve(&y);
        let l = llt.L();
        let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
        let fit: f64 = (0..n).map(|i| self.y[i] * alpha[(i, 0)]).sum();
        let lml = -0.5 * fit - 0.5 * log_det - 0.5 * n as f64 * LOG_2PI;
        if !lml.is_finite() {
            return None;
        }
        if !want_grad {
            return Some((lml, Vec::new()));
        }
        let kinv = llt.inverse();
        // W = alpha alpha^T - K^{-1}; dL/dtheta = 1/2 sum(W o dK)
        let mut grad = vec![0.0; self.d_in + 2];
        let inv_l2: Vec<f64> = h.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        for i in 0..n {
            for j in 0..n {
                let w = alpha[(i, 0)] * alpha[(j, 0)] - kinv[(i, j)];
                let idx = i * n + j;
                let wk = w * kf[idx];
                for kdim in 0..self.d_in {
                    grad[kdim] += wk * self.sq_diffs[kdim][idx] * inv_l2[kdim];
                }
                grad[self.d_in] += wk;
                if i == j {
                    grad[self.d_in + 1] += w * h.noise_variance;
                }
            }
        }
        for g in &mut grad {
            *g *= 0.5;
        }
        Some((lml, grad))
    }
}

/// Log marginal likelihood of standardized `(x, y)` and its gradient with
/// respect to `ln` of (lengthscales, signal variance, noise variance).
pub fn log_marginal_likelihood(x: &[Vec<f64>], y: &[f64], h: &Hyperparameters) -> Result<(f64, Vec<f64>)> {
    let d_in = h.lengthscales.len();
    if let Some(r) = x.iter().find(|r| r.len() != d_in) {
        return Err(Error::Shape {
            expected: d_in,
            got: r.len(),
        });
    }
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            got: y.len(),
        });
    }
    Objective::new(x, y, d_in)
        .evaluate(&h.to_log(), true)
        .ok_or_else(|| Error::OptimizationFailure("kernel matrix is not positive definite".into()))
}

fn project(theta: &mut [f64], bounds: &[(f64, f64)]) {
    for (t, &(lo, hi)) in theta.iter_mut().zip(bounds) {
        *t = t.clamp(lo, hi);
    }
}

/// Gradient of the minimized objective with components that push out of
/// an active bound zeroed.
fn projected(theta: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    theta
        .iter()
        .zip(g)
        .zip(bounds)
        .map(|((&t, &gi), &(lo, hi))| {
            if (t <= lo && gi > 0.0) || (t >= hi && gi < 0.0) {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

struct StartResult {
    theta: Vec<f64>,
    lml: f64,
}

/// Projected BFGS on `-lml` from `theta0`. `None` if the start itself is
/// infeasible.
fn optimize(obj: &Objective<'_>, theta0: &[f64], cfg: &GpConfig, bounds: &[(f64, f64)]) -> Option<StartResult> {
    let p = theta0.len();
    let mut theta = theta0.to_vec();
    project(&mut theta, bounds);
    let (lml, g) = obj.evaluate(&theta, true)?;
    let mut f = -lml;
    let mut grad: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut hinv = identity(p);
    for _ in 0..cfg.max_iter {
        let pg = projected(&theta, &grad, bounds);
        if pg.iter().fold(0.0f64, |m, v| m.max(v.abs())) < cfg.grad_tol {
            break;
        }
        let mut dir = mat_vec(&hinv, &pg).into_iter().map(|v| -v).collect::<Vec<_>>();
        for i in 0..p {
            if pg[i] == 0.0 {
                dir[i] = 0.0;
            }
        }
        if dot(&dir, &pg) >= 0.0 {
            hinv = identity(p);
            dir = pg.iter().map(|v| -v).collect();
        }
        // Armijo backtracking on the projected path
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            project(&mut cand, bounds);
            let s: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
            if let Some((lml_c, _)) = obj.evaluate(&cand, false) {
                if -lml_c <= f + 1e-4 * dot(&grad, &s) && -lml_c <= f {
                    accepted = Some((cand, s));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, s)) = accepted else { break };
        let Some((lml_c, g_c)) = obj.evaluate(&cand, true) else { break };
        let grad_c: Vec<f64> = g_c.iter().map(|v| -v).collect();
        let yv: Vec<f64> = grad_c.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            bfgs_update(&mut hinv, &s, &yv, sy);
        }
        let improvement = f - (-lml_c);
        theta = cand;
        f = -lml_c;
        grad = grad_c;
        if improvement.abs() < 1e-12 * f.abs().max(1.0) && s.iter().all(|v| v.abs() < 1e-10) {
            break;
        }
    }
    Some(StartResult { theta, lml: -f })
}

fn identity(p: usize) -> Vec<Vec<f64>> {
    (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let p = s.len();
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    for i in 0..p {
        for j in 0..p {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Fitted model, immutable after [`fit_gp`].
#[derive(Debug, Clone)]
pub struct GpModel {
    hyper: Hyperparameters,
    x_scale: Standardizer,
    y_mean: f64,
    y_std: f64,
    /// Standardized training inputs and targets.
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    chol: Mat<f64>,
    alpha: Vec<f64>,
    lml: f64,
    start_lml: Vec<f64>,
}

impl GpModel {
    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn input_dim(&self) -> usize {
        self.hyper.lengthscales.len()
    }

    /// Target standard deviation used for standardization (1 for a constant target).
    pub fn target_std(&self) -> f64 {
        self.y_std
    }

    pub fn target_mean(&self) -> f64 {
        self.y_mean
    }

    /// Optimized log marginal likelihood on the hyperparameter-search subset.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    /// Log marginal likelihood at each feasible multi-start initial point.
    pub fn start_log_marginal_likelihoods(&self) -> &[f64] {
        &self.start_lml
    }

    /// `|(K + s^2 I) alpha - y| / |y|` for the cached factorization.
    pub fn factorization_residual(&self) -> f64 {
        let n = self.x.len();
        let h = &self.hyper;
        let mut num = 0.0;
        for i in 0..n {
            let mut r = h.noise_variance * self.alpha[i] - self.y[i];
            for j in 0..n {
                r += h.signal_variance * (-0.5 * sq_dist_scaled(&self.x[i], &self.x[j], &h.lengthscales)).exp() * self.alpha[j];
            }
            num += r * r;
        }
        let den: f64 = self.y.iter().map(|v| v * v).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    fn prepare(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let d = self.input_dim();
        if let Some(r) = inputs.iter().find(|r| r.len() != d) {
            return Err(Error::Shape {
                expected: d,
                got: r.len(),
            });
        }
        Ok(inputs.iter().map(|r| self.x_scale.apply(r)).collect())
    }

    fn cross(&self, z: &[f64]) -> Vec<f64> {
        let h = &self.hyper;
        self.x
            .iter()
            .map(|xi| h.signal_variance * (-0.5 * sq_dist_scaled(z, xi, &h.lengthscales)).exp())
            .collect()
    }

    /// Posterior mean on the original target scale.
    pub fn predict_mean(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let z = self.prepare(inputs)?;
        Ok(z
            .iter()
            .map(|zi| self.y_mean + self.y_std * dot(&self.cross(zi), &self.alpha))
            .collect())
    }

    /// Posterior mean and latent-function variance, both on the original
    /// target scale (variance in squared target units).
    pub fn predict(&self, inputs: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
        let z = self.prepare(inputs)?;
        let n = self.x.len();
        let mut mean = Vec::with_capacity(z.len());
        let mut var = Vec::with_capacity(z.len());
        let mut v = vec![0.0; n];
        for zi in &z {
            let k = self.cross(zi);
            mean.push(self.y_mean + self.y_std * dot(&k, &self.alpha));
            // forward substitution L v = k
            for i in 0..n {
                let mut s = k[i];
                for j in 0..i {
                    s -= self.chol[(i, j)] * v[j];
                }
                v[i] = s / self.chol[(i, i)];
            }
            let latent = (self.hyper.signal_variance - dot(&v, &v)).max(0.0);
            var.push(latent * self.y_std * self.y_std);
        }
        Ok((mean, var))
    }
}

/// Fits hyperparameters by multi-start maximization of the log marginal
/// likelihood, then conditions on every training point.
pub fn fit_gp(inputs: &[Vec<f64>], targets: &[f64], cfg: &GpConfig) -> Result<GpModel> {
    let d_in = inputs.first().map_or(0, Vec::len);
    if d_in == 0 {
        return Err(Error::Parameter("GP inputs need at least one column".into()));
    }
    let n = inputs.len();
    if n != targets.len() {
        return Err(Error::Shape {
            expected: n,
            got: targets.len(),
        });
    }
    if let Some(r) = inputs.iter().find(|r| r.len() != d_in) {
        return Err(Error::Shape {
            expected: d_in,
            got: r.len(),
        });
    }
    if n < d_in + 2 {
        return Err(Error::InsufficientData { needed: d_in + 2, got: n });
    }
    if inputs.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::Parameter("GP training data must be finite".into()));
    }
    if cfg.n_starts == 0 {
        return Err(Error::Parameter("n_starts must be >= 1".into()));
    }

    let x_scale = Standardizer::fit(inputs, d_in);
    let x: Vec<Vec<f64>> = inputs.iter().map(|r| x_scale.apply(r)).collect();
    let y_mean = targets.iter().sum::<f64>() / n as f64;
    let y_var = targets.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let y_std = if y_var > 0.0 { y_var.sqrt() } else { 1.0 };
    let y: Vec<f64> = targets.iter().map(|v| (v - y_mean) / y_std).collect();

    let (sub_x, sub_y): (Vec<Vec<f64>>, Vec<f64>) = if n > cfg.max_opt_points.max(d_in + 2) {
        let m = cfg.max_opt_points.max(d_in + 2);
        (0..m)
            .map(|i| {
                let idx = i * (n - 1) / (m - 1);
                (x[idx].clone(), y[idx])
            })
            .unzip()
    } else {
        (x.clone(), y.clone())
    };
    let obj = Objective::new(&sub_x, &sub_y, d_in);
    let bounds = log_bounds(d_in);

    let mut r = rng(cfg.seed);
    let starts: Vec<Vec<f64>> = (0..cfg.n_starts)
        .map(|s| {
            if s == 0 {
                Hyperparameters {
                    lengthscales: vec![1.0; d_in],
                    signal_variance: 1.0,
                    noise_variance: 0.1,
                }
                .to_log()
            } else {
                let mut t: Vec<f64> = (0..d_in).map(|_| r.random_range(-2.3..2.3)).collect();
                t.push(r.random_range(-2.3..2.3));
                t.push(r.random_range(-9.2..0.0));
                t
            }
        })
        .collect();
    let results: Vec<(Option<f64>, Option<StartResult>)> = starts
        .par_iter()
        .map(|t0| {
            let start = obj.evaluate(t0, false).map(|(l, _)| l);
            (start, optimize(&obj, t0, cfg, &bounds))
        })
        .collect();
    let start_lml: Vec<f64> = results.iter().filter_map(|(s, _)| *s).collect();
    let best = results
        .into_iter()
        .filter_map(|(_, r)| r)
        .fold(None::<StartResult>, |acc, r| match acc {
            Some(a) if a.lml >= r.lml => Some(a),
            _ => Some(r),
        })
        .ok_or_else(|| Error::OptimizationFailure("log marginal likelihood is non-finite at every start".into()))?;
    let hyper = Hyperparameters::from_log(&best.theta);

    let kmat = Mat::from_fn(n, n, |i, j| {
        hyper.signal_variance * (-0.5 * sq_dist_scaled(&x[i], &x[j], &hyper.lengthscales)).exp()
            + if i == j { hyper.noise_variance } else { 0.0 }
    });
    let llt = kmat.llt(Side::Lower).map_err(|_| {
        Error::OptimizationFailure("kernel matrix on the full training set is not positive definite".into())
    })?;
    let alpha_m = llt.solve(&Mat::from_fn(n, 1, |i, _| y[i]));
    let alpha = (0..n).map(|i| alpha_m[(i, 0)]).collect();
    let chol = llt.L().to_owned();
    Ok(GpModel {
        hyper,
        x_scale,
        y_mean,
        y_std,
        x,
        y,
        chol,
        alpha,
        lml: best.lml,
        start_lml,
    })
}

/// Fits a GP of `target` on `regressors` over `train_window` and returns
/// `target - prediction` at every index.
pub fn gp_residuals(
    ms: &MultiSeries,
    target: &str,
    regressors: &[&str],
    train_window: Range<usize>,
    cfg: &GpConfig,
) -> Result<(TimeSeries, GpModel)> {
    if regressors.is_empty() {
        return Err(Error::Parameter("at least one regressor is required".into()));
    }
    if regressors.contains(&target) {
        return Err(Error::Parameter(format!("target '{target}' is also listed as a regressor")));
    }
    if train_window.start >= train_window.end || train_window.end > ms.len() {
        return Err(Error::Parameter(format!(
            "training window {}:{} outside 0:{}",
            train_window.start,
            train_window.end,
            ms.len()
        )));
    }
    let y = ms.channel(target)?;
    let cols: Vec<TimeSeries> = regressors.iter().map(|r| ms.channel(r)).collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = (0..ms.len())
        .map(|t| cols.iter().map(|c| c.values()[t]).collect())
        .collect();
    if train_window.len() < regressors.len() + 2 {
        return Err(Error::InsufficientData {
            needed: regressors.len() + 2,
            got: train_window.len(),
        });
    }
    let model = fit_gp(&rows[train_window.clone()], &y.values()[train_window], cfg)?;
    let pred = model.predict_mean(&rows)?;
    let resid: Vec<f64> = y.values().iter().zip(&pred).map(|(a, b)| a - b).collect();
    let label = format!("{target}-GP({})", regressors.join(","));
    Ok((TimeSeries::new(label, resid)?, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64]).collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = rng(7);
        let x: Vec<Vec<f64>> = (0..30).map(|_| vec![r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)]).collect();
        let y: Vec<f64> = x.iter().map(|p| (p[0] * 1.3).sin() + 0.3 * p[1] + r.random_range(-0.1..0.1)).collect();
        let obj = Objective::new(&x, &y, 2);
        for _ in 0..10 {
            let theta: Vec<f64> = vec![
                r.random_range(-1.0..1.5),
                r.random_range(-1.0..1.5),
                r.random_range(-1.0..1.0),
                r.random_range(-5.0..-1.0),
            ];
            let (_, g) = obj.evaluate(&theta, true).unwrap();
            for k in 0..4 {
                let h = 1e-5;
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[k] += h;
                tm[k] -= h;
                let fd = (obj.evaluate(&tp, false).unwrap().0 - obj.evaluate(&tm, false).unwrap().0) / (2.0 * h);
                let rel = (fd - g[k]).abs() / fd.abs().max(1e-3);
                assert!(rel < 1e-4, "param {k}: analytic {} fd {fd}", g[k]);
            }
        }
    }

    #[test]
    fn noiseless_linear_is_interpolated() {
        let x = grid(50, 0.0, 5.0);
        let y: Vec<f64> = x.iter().map(|p| 2.0 * p[0] - 1.0).collect();
        let m = fit_gp(&x, &y, &GpConfig::default()).unwrap();
        let pred = m.predict_mean(&x).unwrap();
        let worst = pred.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-3, "max error {worst}");
        assert!(m.hyperparameters().noise_variance < 1e-4, "{:?}", m.hyperparameters());
    }

    #[test]
    fn constant_target() {
        let x = grid(20, -1.0, 1.0);
        let y = vec![3.25; 20];
        let m = fit_gp(&x, &y, &GpConfig::default()).unwrap();
        for v in m.predict_mean(&[vec![0.3], vec![10.0], vec![-4.0]]).unwrap() {
            assert!((v - 3.25).abs() < 1e-6);
        }
    }

    #[test]
    fn precondition_and_shape_errors() {
        assert!(matches!(
            fit_gp(&[vec![1.0]], &[1.0], &GpConfig::default()),
            Err(Error::InsufficientData { .. })
        ));
        let x = grid(10, 0.0, 1.0);
        let y: Vec<f64> = x.iter().map(|p| p[0]).collect();
        let m = fit_gp(&x, &y, &GpConfig::default()).unwrap();
        assert!(matches!(m.predict(&[vec![0.0, 1.0]]), Err(Error::Shape { .. })));
    }

    #[test]
    fn sine_prediction_and_variance_properties() {
        let x = grid(100, 0.0, 2.0 * std::f64::consts::PI);
        let mut r = rng(3);
        let y: Vec<f64> = x.iter().map(|p| p[0].sin() + r.random_range(-0.02..0.02)).collect();
        let m = fit_gp(&x, &y, &GpConfig::default()).unwrap();
        assert!(m.factorization_residual() < 1e-8);
        let held: Vec<Vec<f64>> = (0..57).map(|i| vec![0.05 + i as f64 * 0.108]).collect();
        let (mean, var) = m.predict(&held).unwrap();
        let sd = m.target_std();
        let rmse = (held.iter().zip(&mean).map(|(p, mu)| (p[0].sin() - mu).powi(2)).sum::<f64>() / 57.0).sqrt() / sd;
        assert!(rmse < 0.05, "standardized rmse {rmse}");
        let h = m.hyperparameters();
        let cap = (h.signal_variance + h.noise_variance) * sd * sd;
        assert!(var.iter().all(|&v| v >= 0.0 && v <= cap));
        // training inputs: interpolation limit is approached as noise shrinks
        let far_in = vec![vec![1000.0]];
        let (far_mean, far_var) = m.predict(&far_in).unwrap();
        assert!((far_mean[0] - m.target_mean()).abs() < 1e-6);
        assert!((far_var[0] / (h.signal_variance * sd * sd) - 1.0).abs() < 0.01);
        assert!(m.start_log_marginal_likelihoods().iter().all(|&s| m.log_marginal_likelihood() >= s));
    }

    #[test]
    fn residuals_of_linear_combination() {
        let n = 200;
        let a: Vec<f64> = (0..n).map(|t| (t as f64 * 0.05).sin()).collect();
        let b: Vec<f64> = (0..n).map(|t| (t as f64 * 0.031).cos()).collect();
        let y: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.7 * p - 1.2 * q).collect();
        let ms = MultiSeries::new(vec!["y".into(), "a".into(), "b".into()], vec![y, a, b]).unwrap();
        let (res, _) = gp_residuals(&ms, "y", &["a", "b"], 0..n, &GpConfig::default()).unwrap();
        let worst = res.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-3, "max residual {worst}");
        assert!(gp_residuals(&ms, "y", &["y", "a"], 0..n, &GpConfig::default()).is_err());
        assert!(gp_residuals(&ms, "y", &["a"], 0..n + 1, &GpConfig::default()).is_err());
    }
}
