//! Wasserstein distances between persistence diagrams.
//!
//! The distance is the optimal partial matching under the L-infinity ground
//! metric: a matched pair costs `max(|b1 - b2|, |d1 - d2|)^p`, an unmatched
//! interval costs the `p`-th power of its distance to the diagonal,
//! `((d - b) / 2)^p`. The result is the `p`-th root of the optimal total.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vr::{Interval, PersistenceDiagram};

/// Largest diagram size accepted by [`wasserstein_oracle`].
pub const ORACLE_MAX_INTERVALS: usize = 7;

/// How intervals that never die are compared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EssentialMode {
    /// Keep them with death at the diagram's maximum scale.
    #[default]
    Truncate,
    /// Remove them before matching.
    Drop,
}

impl std::str::FromStr for EssentialMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncate" => Ok(Self::Truncate),
            "drop" => Ok(Self::Drop),
            other => Err(Error::Parameter(format!(
                "essential mode must be 'truncate' or 'drop', got '{other}'"
            ))),
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("Wasserstein order p must be a finite value >= 1, got {p}")))
    }
}

fn pair_cost(a: &Interval, b: &Interval, p: f64) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs()).powf(p)
}

fn diagonal_cost(a: &Interval, p: f64) -> f64 {
    (a.persistence() / 2.0).max(0.0).powf(p)
}

/// Minimum-cost perfect assignment of a square matrix (row-major, size
/// `n * n`), by the shortest augmenting path method with potentials.
/// Returns `assignment[row] = column`.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    // 1-based potentials; column 0 is a virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// `W_p` between two interval multisets.
///
/// Both diagrams are sorted and put in a fixed order first, so the result is
/// bit-for-bit symmetric and independent of interval order.
pub fn wasserstein(a: &[Interval], b: &[Interval], p: f64) -> Result<f64> {
    check_p(p)?;
    let (a, b) = (sorted(a), sorted(b));
    let (a, b) = if compare_diagrams(&a, &b).is_gt() { (b, a) } else { (a, b) };
    let (n, m) = (a.len(), b.len());
    if n == 0 && m == 0 {
        return Ok(0.0);
    }
    // rows: a, then diagonal copies for b; columns: b, then diagonal copies for a
    let size = n + m;
    let mut cost = vec![0.0; size * size];
    for (i, x) in a.iter().enumerate() {
        let row = &mut cost[i * size..(i + 1) * size];
        for (j, y) in b.iter().enumerate() {
            row[j] = pair_cost(x, y, p);
        }
        row[m..].fill(diagonal_cost(x, p));
    }
    for i in 0..m {
        let row = &mut cost[(n + i) * size..(n + i + 1) * size];
        for (j, y) in b.iter().enumerate() {
            row[j] = diagonal_cost(y, p);
        }
    }
    let assignment = hungarian(&cost, size);
    let mut matched: Vec<f64> = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * size + j])
        .collect();
    matched.sort_by(f64::total_cmp);
    let total: f64 = matched.iter().sum();
    Ok(total.max(0.0).powf(1.0 / p))
}

fn cmp_interval(x: &Interval, y: &Interval) -> std::cmp::Ordering {
    x.birth.total_cmp(&y.birth).then(x.death.total_cmp(&y.death))
}

fn sorted(d: &[Interval]) -> Vec<Interval> {
    let mut v = d.to_vec();
    v.sort_by(cmp_interval);
    v
}

fn compare_diagrams(a: &[Interval], b: &[Interval]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(x, y)| cmp_interval(x, y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

/// Exhaustive `W_p` over every partial matching, for diagrams of at most
/// [`ORACLE_MAX_INTERVALS`] intervals each.
pub fn wasserstein_oracle(a: &[Interval], b: &[Interval], p: f64) -> Result<f64> {
    check_p(p)?;
    let size = a.len().max(b.len());
    if size > ORACLE_MAX_INTERVALS {
        return Err(Error::OracleSize {
            size,
            max: ORACLE_MAX_INTERVALS,
        });
    }
    fn go(i: usize, a: &[Interval], b: &[Interval], used: &mut [bool], p: f64) -> f64 {
        if i == a.len() {
            return b
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(y, _)| diagonal_cost(y, p))
                .sum();
        }
        let mut best = diagonal_cost(&a[i], p) + go(i + 1, a, b, used, p);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(pair_cost(&a[i], &b[j], p) + go(i + 1, a, b, used, p));
                used[j] = false;
            }
        }
        best
    }
    let mut used = vec![false; b.len()];
    Ok(go(0, a, b, &mut used, p).powf(1.0 / p))
}

fn prepared(d: &PersistenceDiagram, k: usize, mode: EssentialMode) -> Vec<Interval> {
    d.intervals(k)
        .iter()
        .filter(|i| mode == EssentialMode::Truncate || !i.essential)
        .copied()
        .collect()
}

/// `W_p` between the dimension-`k` parts of two diagrams.
pub fn diagram_distance(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    k: usize,
    p: f64,
    mode: EssentialMode,
) -> Result<f64> {
    wasserstein(&prepared(a, k, mode), &prepared(b, k, mode), p)
}

/// Pairwise distances between labelled diagrams, per homology dimension and
/// summed over dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramDistanceMatrix {
    pub labels: Vec<String>,
    /// Homology dimensions, parallel to `per_dimension`.
    pub dims: Vec<usize>,
    pub per_dimension: Vec<Vec<Vec<f64>>>,
    pub combined: Vec<Vec<f64>>,
}

impl DiagramDistanceMatrix {
    pub fn dimension(&self, k: usize) -> Option<&[Vec<f64>]> {
        self.dims
            .iter()
            .position(|&d| d == k)
            .map(|i| self.per_dimension[i].as_slice())
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.combined[i][j])
    }

    /// Square CSV with a header row of labels and the label in the first
    /// column of every row.
    pub fn write_matrix_csv<W: Write>(labels: &[String], m: &[Vec<f64>], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in labels.iter().zip(m) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_combined_csv<W: Write>(&self, writer: W) -> Result<()> {
        Self::write_matrix_csv(&self.labels, &self.combined, writer)
    }
}

/// Builds the distance matrices for `diagrams` over homology dimensions
/// `dims`. Labels must be unique.
pub fn diagram_distance_matrix(
    diagrams: &[(String, PersistenceDiagram)],
    p: f64,
    dims: &[usize],
    mode: EssentialMode,
) -> Result<DiagramDistanceMatrix> {
    check_p(p)?;
    let mut seen = HashSet::new();
    for (label, _) in diagrams {
        if !seen.insert(label.as_str()) {
            return Err(Error::Parameter(format!("duplicate diagram label '{label}'")));
        }
    }
    let n = diagrams.len();
    let pairs: Vec<(usize, usize, usize)> = (0..dims.len())
        .flat_map(|di| (0..n).flat_map(move |i| (i + 1..n).map(move |j| (di, i, j))))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(di, i, j)| diagram_distance(&diagrams[i].1, &diagrams[j].1, dims[di], p, mode))
        .collect::<Result<_>>()?;
    let mut per_dimension = vec![vec![vec![0.0; n]; n]; dims.len()];
    for (&(di, i, j), &v) in pairs.iter().zip(&values) {
        per_dimension[di][i][j] = v;
        per_dimension[di][j][i] = v;
    }
    let mut combined = vec![vec![0.0; n]; n];
    for m in &per_dimension {
        for i in 0..n {
            for j in 0..n {
                combined[i][j] += m[i][j];
            }
        }
    }
    Ok(DiagramDistanceMatrix {
        labels: diagrams.iter().map(|(l, _)| l.clone()).collect(),
        dims: dims.to_vec(),
        per_dimension,
        combined,
    })
}
