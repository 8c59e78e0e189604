//! Error-correction regression and the Augmented Dickey-Fuller unit-root test.
//!
//! The test regression is
//!
//! ```text
//! dy_t = rho * y_{t-1} + sum_j b_j * dy_{t-j} + c + e_t
//! ```
//!
//! and the statistic `t = rho_hat / se(rho_hat)` is compared against
//! Dickey-Fuller critical values. The null hypothesis is a unit root
//! (`rho = 0`); rejection (a sufficiently negative statistic) means the series
//! is treated as stationary.

use std::fmt;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column, least_squares};
use crate::series::{difference, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Significance {
    #[serde(rename = "1%")]
    OnePercent,
    #[serde(rename = "5%")]
    FivePercent,
    #[serde(rename = "10%")]
    TenPercent,
}

impl Significance {
    pub const ALL: [Significance; 3] = [
        Significance::OnePercent,
        Significance::FivePercent,
        Significance::TenPercent,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().trim_end_matches('%') {
            "1" | "0.01" => Ok(Self::OnePercent),
            "5" | "0.05" => Ok(Self::FivePercent),
            "10" | "0.1" | "0.10" => Ok(Self::TenPercent),
            other => Err(Error::Parameter(format!(
                "unsupported significance level `{other}` (use 1, 5 or 10)"
            ))),
        }
    }
}

impl fmt::Display for Significance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::OnePercent => "1%",
            Self::FivePercent => "5%",
            Self::TenPercent => "10%",
        })
    }
}

/// Deterministic term of the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Deterministic {
    None,
    #[default]
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub one: f64,
    pub five: f64,
    pub ten: f64,
}

impl CriticalValues {
    pub fn at(&self, level: Significance) -> f64 {
        match level {
            Significance::OnePercent => self.one,
            Significance::FivePercent => self.five,
            Significance::TenPercent => self.ten,
        }
    }
}

/// Sample sizes of the tabulated Dickey-Fuller distribution; `None` is the
/// asymptotic row.
const TABLE_SIZES: [Option<usize>; 6] = [Some(25), Some(50), Some(100), Some(250), Some(500), None];

/// Dickey-Fuller critical values, regression with constant, no trend.
const TABLE_CONSTANT: [[f64; 3]; 6] = [
    [-3.75, -3.00, -2.63],
    [-3.58, -2.93, -2.60],
    [-3.51, -2.89, -2.58],
    [-3.46, -2.88, -2.57],
    [-3.44, -2.87, -2.57],
    [-3.43, -2.86, -2.57],
];

/// Dickey-Fuller critical values, regression without deterministic terms.
const TABLE_NONE: [[f64; 3]; 6] = [
    [-2.66, -1.95, -1.60],
    [-2.62, -1.95, -1.61],
    [-2.60, -1.95, -1.61],
    [-2.58, -1.95, -1.62],
    [-2.58, -1.95, -1.62],
    [-2.58, -1.95, -1.62],
];

fn table(det: Deterministic) -> &'static [[f64; 3]; 6] {
    match det {
        Deterministic::Constant => &TABLE_CONSTANT,
        Deterministic::None => &TABLE_NONE,
    }
}

/// Critical values for sample size `n`, linearly interpolated in `1/n`
/// between tabulated rows and clamped at the smallest tabulated size.
pub fn critical_values(n: usize, det: Deterministic) -> CriticalValues {
    let rows = table(det);
    let x = 1.0 / n.max(1) as f64;
    let xs: Vec<f64> = TABLE_SIZES
        .iter()
        .map(|s| s.map_or(0.0, |s| 1.0 / s as f64))
        .collect();
    let pick = |col: usize| -> f64 {
        if x >= xs[0] {
            return rows[0][col];
        }
        for i in 0..xs.len() - 1 {
            let (hi, lo) = (xs[i], xs[i + 1]);
            if x <= hi && x >= lo {
                let w = (x - lo) / (hi - lo);
                return rows[i + 1][col] + w * (rows[i][col] - rows[i + 1][col]);
            }
        }
        rows[rows.len() - 1][col]
    };
    CriticalValues {
        one: pick(0),
        five: pick(1),
        ten: pick(2),
    }
}

/// The embedded critical-value tables as CSV, for audit.
pub fn critical_value_table_csv() -> String {
    let mut out = String::from("deterministic,n,1%,5%,10%\n");
    for (name, det) in [("constant", Deterministic::Constant), ("none", Deterministic::None)] {
        for (size, row) in TABLE_SIZES.iter().zip(table(det)) {
            let n = size.map_or_else(|| "inf".to_string(), |s| s.to_string());
            out.push_str(&format!("{name},{n},{},{},{}\n", row[0], row[1], row[2]));
        }
    }
    out
}

/// Schwert's rule of thumb, `floor(12 (n/100)^(1/4))`.
pub fn schwert_lags(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

#[derive(Debug, Clone)]
pub struct EcmFit {
    pub rho_hat: f64,
    /// Coefficients on lagged differences, lag 1 first.
    pub b: Vec<f64>,
    pub intercept: Option<f64>,
    pub sigma_rho: f64,
    pub residuals: TimeSeries,
    pub n_used: usize,
    /// Design matrix rows, kept so callers can audit the fit.
    pub(crate) design: Mat<f64>,
}

impl EcmFit {
    /// Columns of the design matrix: lagged level, lagged differences,
    /// then the intercept if present.
    pub fn design_column(&self, j: usize) -> Vec<f64> {
        (0..self.design.nrows()).map(|i| self.design[(i, j)]).collect()
    }

    pub fn n_regressors(&self) -> usize {
        self.design.ncols()
    }
}

pub fn fit_ecm(ts: &TimeSeries, lags: usize) -> Result<EcmFit> {
    fit_ecm_with(ts, lags, Deterministic::Constant)
}

pub fn fit_ecm_with(ts: &TimeSeries, lags: usize, det: Deterministic) -> Result<EcmFit> {
    let y = ts.values();
    let n = y.len();
    let k = 1 + lags + usize::from(det == Deterministic::Constant);
    let needed = lags + 2 + k;
    if n < needed {
        return Err(Error::InsufficientData { needed, got: n });
    }
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    // dy[t-1] = y[t] - y[t-1]; regression rows t = lags+1 ..= n-1
    let rows: Vec<usize> = (lags + 1..n).collect();
    let n_used = rows.len();
    let x = Mat::from_fn(n_used, k, |r, c| {
        let t = rows[r];
        match c {
            0 => y[t - 1],
            c if c <= lags => dy[t - 1 - c],
            _ => 1.0,
        }
    });
    let target: Vec<f64> = rows.iter().map(|&t| dy[t - 1]).collect();
    let fit = least_squares(&x, &column(&target))?;
    let resid: Vec<f64> = (0..n_used).map(|i| fit.residuals[(i, 0)]).collect();
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    let dof = (n_used - k) as f64;
    let s2 = rss / dof;
    let sigma_rho = (s2 * fit.xtx_inv[(0, 0)]).sqrt();
    Ok(EcmFit {
        rho_hat: fit.coef[(0, 0)],
        b: (1..=lags).map(|j| fit.coef[(j, 0)]).collect(),
        intercept: (det == Deterministic::Constant).then(|| fit.coef[(k - 1, 0)]),
        sigma_rho,
        residuals: TimeSeries::new(format!("{}_ecm_resid", ts.label()), resid)?,
        n_used,
        design: x,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdfResult {
    pub t_p: f64,
    pub critical_values: CriticalValues,
    pub lags: usize,
    pub n_used: usize,
    reject: [bool; 3],
}

impl AdfResult {
    /// Left-tailed: the unit root is rejected when `t_p` is below the
    /// critical value.
    pub fn reject_unit_root(&self, level: Significance) -> bool {
        self.reject[level as usize]
    }
}

pub fn adf_test(ts: &TimeSeries, lags: usize) -> Result<AdfResult> {
    adf_test_with(ts, lags, Deterministic::Constant)
}

/// ADF test with Schwert's default lag count.
pub fn adf_test_default(ts: &TimeSeries) -> Result<AdfResult> {
    adf_test(ts, schwert_lags(ts.len()))
}

pub fn adf_test_with(ts: &TimeSeries, lags: usize, det: Deterministic) -> Result<AdfResult> {
    let fit = fit_ecm_with(ts, lags, det)?;
    let t_p = fit.rho_hat / fit.sigma_rho;
    let cv = critical_values(fit.n_used, det);
    let reject = Significance::ALL.map(|l| t_p < cv.at(l));
    Ok(AdfResult {
        t_p,
        critical_values: cv,
        lags,
        n_used: fit.n_used,
        reject,
    })
}

/// Smallest number of differences after which the ADF test rejects a unit
/// root at `level`. `lags = None` uses Schwert's rule on each differenced
/// series.
pub fn integration_order(
    ts: &TimeSeries,
    max_order: usize,
    lags: Option<usize>,
    level: Significance,
) -> Result<usize> {
    for k in 0..=max_order {
        let d = difference(ts, k)?;
        let l = lags.unwrap_or_else(|| schwert_lags(d.len()));
        if adf_test(&d, l)?.reject_unit_root(level) {
            return Ok(k);
        }
    }
    Err(Error::OrderUndetermined { max_order })
}
