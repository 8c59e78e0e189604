//! Johansen reduced-rank regression and residual series `z_t = beta . y_t`.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, RANK_TOL};
use crate::series::{MultiSeries, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohansenResult {
    /// Descending, each in `[0, 1)`.
    pub eigenvalues: Vec<f64>,
    /// `vectors[i]` belongs to `eigenvalues[i]`; unit norm, first nonzero
    /// entry positive.
    pub vectors: Vec<Vec<f64>>,
    pub lag: usize,
    pub labels: Vec<String>,
}

impl JohansenResult {
    /// The most stationary combination.
    pub fn leading(&self) -> &[f64] {
        &self.vectors[0]
    }
}

/// Unit Euclidean norm with the first non-negligible entry made positive.
pub(crate) fn normalize_sign(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

fn check_moment(s: &Mat<f64>, name: &'static str) -> Result<()> {
    let ev = s
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::Collinear(name))?;
    let max = ev.iter().copied().fold(0.0_f64, f64::max);
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || !(min / max > RANK_TOL) {
        return Err(Error::Collinear(name));
    }
    Ok(())
}

/// Johansen procedure with an intercept in the auxiliary regressions.
///
/// `lag` is the VECM order: `lag - 1` lagged differences enter the auxiliary
/// regressions (`lag = 1` means the intercept only).
pub fn johansen(ms: &MultiSeries, lag: usize) -> Result<JohansenResult> {
    let m = ms.n_channels();
    if m < 2 {
        return Err(Error::Parameter(format!(
            "johansen needs at least 2 channels, got {m}"
        )));
    }
    if lag < 1 {
        return Err(Error::Parameter("johansen lag must be >= 1".into()));
    }
    let n = ms.len();
    let needed = (10 * m).max(lag + m + 2);
    if n < needed {
        return Err(Error::InsufficientData { needed, got: n });
    }
    let y = |t: usize, k: usize| ms.column(k)[t];
    let dy = |t: usize, k: usize| y(t, k) - y(t - 1, k);
    // rows t = lag ..= n-1 use dy_t, y_{t-1} and dy_{t-1..t-lag+1}
    let rows: Vec<usize> = (lag..n).collect();
    let nr = rows.len();
    let n_z = (lag - 1) * m + 1;
    let z = Mat::from_fn(nr, n_z, |r, c| {
        if c == n_z - 1 {
            1.0
        } else {
            let (j, k) = (c / m + 1, c % m);
            dy(rows[r] - j, k)
        }
    });
    let d0 = Mat::from_fn(nr, m, |r, k| dy(rows[r], k));
    let d1 = Mat::from_fn(nr, m, |r, k| y(rows[r] - 1, k));
    let r0 = least_squares(&z, &d0)
        .map_err(|_| Error::Collinear("auxiliary regression"))?
        .residuals;
    let r1 = least_squares(&z, &d1)
        .map_err(|_| Error::Collinear("auxiliary regression"))?
        .residuals;
    let scale = 1.0 / nr as f64;
    let s00 = (r0.transpose() * &r0) * faer::Scale(scale);
    let s11 = (r1.transpose() * &r1) * faer::Scale(scale);
    let s01 = (r0.transpose() * &r1) * faer::Scale(scale);
    check_moment(&s00, "S00")?;
    check_moment(&s11, "S11")?;

    // S11 = L L^T; eigen-decompose L^{-1} S10 S00^{-1} S01 L^{-T}
    let l = s11.llt(Side::Lower).map_err(|_| Error::Collinear("S11"))?;
    let l = l.L().to_owned();
    let s00_llt = s00.llt(Side::Lower).map_err(|_| Error::Collinear("S00"))?;
    use faer::linalg::solvers::Solve;
    let s00_inv_s01 = s00_llt.solve(&s01);
    let core = s01.transpose() * &s00_inv_s01;
    let linv = lower_inverse(&l);
    let mut sym = &linv * &core * linv.transpose();
    // symmetrise against round-off
    for i in 0..m {
        for j in 0..i {
            let a = 0.5 * (sym[(i, j)] + sym[(j, i)]);
            sym[(i, j)] = a;
            sym[(j, i)] = a;
        }
    }
    let eig = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::Collinear("eigenproblem"))?;
    let vals: Vec<f64> = eig.S().column_vector().iter().copied().collect();
    let vecs = eig.U();
    let beta_all = linv.transpose() * vecs;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut eigenvalues = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    for &i in &order {
        eigenvalues.push(vals[i].clamp(0.0, 1.0 - f64::EPSILON));
        let mut v: Vec<f64> = (0..m).map(|k| beta_all[(k, i)]).collect();
        normalize_sign(&mut v);
        vectors.push(v);
    }
    Ok(JohansenResult {
        eigenvalues,
        vectors,
        lag,
        labels: ms.labels().to_vec(),
    })
}

fn lower_inverse(l: &Mat<f64>) -> Mat<f64> {
    let m = l.nrows();
    let mut inv = Mat::<f64>::zeros(m, m);
    for col in 0..m {
        for i in col..m {
            let mut acc = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                acc -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = acc / l[(i, i)];
        }
    }
    inv
}

/// `z_t = sum_k beta_k y_{k,t}`.
pub fn residual_series(ms: &MultiSeries, beta: &[f64]) -> Result<TimeSeries> {
    if beta.len() != ms.n_channels() {
        return Err(Error::Shape {
            expected: ms.n_channels(),
            got: beta.len(),
        });
    }
    let values = (0..ms.len())
        .map(|t| ms.row(t).zip(beta).map(|(y, b)| y * b).sum())
        .collect();
    TimeSeries::new("z", values)
}

/// All residual series, ordered by descending eigenvalue and labelled
/// `eps1..epsm`.
pub fn all_residuals(ms: &MultiSeries, jr: &JohansenResult) -> Result<Vec<TimeSeries>> {
    jr.vectors
        .iter()
        .enumerate()
        .map(|(i, v)| Ok(residual_series(ms, v)?.with_label(format!("eps{}", i + 1))))
        .collect()
}
