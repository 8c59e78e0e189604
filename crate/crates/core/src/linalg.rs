//! Small dense least-squares helpers shared by the regression-based modules.

use faer::Mat;

use crate::error::{Error, Result};

/// Reciprocal condition number below which a design is treated as singular.
pub(crate) const RANK_TOL: f64 = 1e-10;

pub(crate) struct LeastSquares {
    /// One column of coefficients per right-hand side.
    pub coef: Mat<f64>,
    pub residuals: Mat<f64>,
    /// (X^T X)^{-1}
    pub xtx_inv: Mat<f64>,
}

/// Ordinary least squares of every column of `y` on the columns of `x`,
/// solved through a thin SVD so rank deficiency is detected reliably.
pub(crate) fn least_squares(x: &Mat<f64>, y: &Mat<f64>) -> Result<LeastSquares> {
    assert_eq!(x.nrows(), y.nrows());
    let p = x.ncols();
    let svd = x
        .thin_svd()
        .map_err(|_| Error::RankDeficient { condition: f64::INFINITY })?;
    let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let s_max = s.first().copied().unwrap_or(0.0);
    let s_min = s.last().copied().unwrap_or(0.0);
    if s_max == 0.0 || !(s_min / s_max > RANK_TOL) {
        return Err(Error::RankDeficient {
            condition: if s_min > 0.0 { s_max / s_min } else { f64::INFINITY },
        });
    }
    let u = svd.U();
    let v = svd.V();
    let mut uty = u.transpose() * y;
    for i in 0..p {
        for j in 0..uty.ncols() {
            uty[(i, j)] /= s[i];
        }
    }
    let coef = v * &uty;
    let residuals = y - x * &coef;
    let xtx_inv = Mat::from_fn(p, p, |i, j| {
        (0..p).map(|k| v[(i, k)] * v[(j, k)] / (s[k] * s[k])).sum()
    });
    Ok(LeastSquares {
        coef,
        residuals,
        xtx_inv,
    })
}

pub(crate) fn column(values: &[f64]) -> Mat<f64> {
    Mat::from_fn(values.len(), 1, |i, _| values[i])
}
