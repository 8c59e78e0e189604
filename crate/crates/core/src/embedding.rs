//! Time-delay embedding of a univariate series into a point cloud.

use std::io::Write;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
    dim: usize,
    pub source: String,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, source: impl Into<String>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::Parameter("point cloud needs at least one point of dimension >= 1".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::Parameter(format!("non-finite coordinate in point {i}")));
            }
        }
        Ok(Self {
            points,
            dim,
            source: source.into(),
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            dim: self.dim,
            source: self.source.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((0..self.dim).map(|k| format!("x{k}")))?;
        for p in &self.points {
            w.write_record(p.iter().map(|c| c.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R, source: &str) -> Result<Self> {
        let ms = crate::series::read_csv(reader, &[])?;
        if ms.has_missing() {
            return Err(Error::Parameter("point cloud CSV contains missing cells".into()));
        }
        let points = (0..ms.len()).map(|t| ms.row(t).collect()).collect();
        Self::new(points, source)
    }
}

/// Non-fatal warnings about a chosen delay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingAdvisory {
    /// Delays below 2 samples give nearly diagonal clouds.
    DelayTooSmall { alpha: usize },
    /// The embedding window spans more than half the series.
    WindowTooLong { window: usize, n: usize },
}

pub fn embedding_advisories(n: usize, d: usize, alpha: usize) -> Vec<EmbeddingAdvisory> {
    let mut out = Vec::new();
    if alpha < 2 {
        out.push(EmbeddingAdvisory::DelayTooSmall { alpha });
    }
    let window = d.saturating_sub(1) * alpha;
    if 2 * window > n {
        out.push(EmbeddingAdvisory::WindowTooLong { window, n });
    }
    out
}

/// Point `k` is `(y_k, y_{k+alpha}, ..., y_{k+(d-1) alpha})`.
pub fn delay_embed(ts: &TimeSeries, d: usize, alpha: usize) -> Result<PointCloud> {
    if d < 1 || alpha < 1 {
        return Err(Error::Parameter(format!(
            "embedding needs d >= 1 and alpha >= 1, got d={d}, alpha={alpha}"
        )));
    }
    let n = ts.len();
    let window = (d - 1) * alpha;
    if n <= window {
        return Err(Error::InsufficientData {
            needed: window + 1,
            got: n,
        });
    }
    for adv in embedding_advisories(n, d, alpha) {
        log::warn!("embedding `{}`: {adv:?}", ts.label());
    }
    let y = ts.values();
    let points = (0..n - window)
        .map(|k| (0..d).map(|j| y[k + j * alpha]).collect())
        .collect();
    PointCloud::new(points, format!("{} (d={d}, alpha={alpha})", ts.label()))
}
