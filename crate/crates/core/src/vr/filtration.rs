use std::cmp::Ordering;

use super::DistanceMatrix;
use crate::error::{Error, Result};

/// Simplex-count guard for explicit filtrations.
pub const DEFAULT_SIMPLEX_CAP: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    /// Strictly increasing vertex ids.
    pub vertices: Vec<usize>,
    /// Diameter: the largest pairwise distance among the vertices.
    pub scale: f64,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

fn filtration_order(a: &Simplex, b: &Simplex) -> Ordering {
    a.scale
        .total_cmp(&b.scale)
        .then(a.vertices.len().cmp(&b.vertices.len()))
        .then_with(|| a.vertices.cmp(&b.vertices))
}

/// Simplices sorted by (scale, dimension, lexicographic vertices).
#[derive(Debug, Clone)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    max_dim: usize,
    max_scale: f64,
}

impl Filtration {
    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn max_scale(&self) -> f64 {
        self.max_scale
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn count_of_dim(&self, k: usize) -> usize {
        self.simplices.iter().filter(|s| s.dim() == k).count()
    }
}

pub fn vr_filtration(dm: &DistanceMatrix, max_dim: usize, max_scale: f64) -> Result<Filtration> {
    vr_filtration_with_cap(dm, max_dim, max_scale, DEFAULT_SIMPLEX_CAP)
}

/// All simplices of dimension `<= max_dim` whose diameter is `<= max_scale`.
pub fn vr_filtration_with_cap(
    dm: &DistanceMatrix,
    max_dim: usize,
    max_scale: f64,
    cap: usize,
) -> Result<Filtration> {
    if max_dim < 1 {
        return Err(Error::Parameter("max_dim must be >= 1".into()));
    }
    if !(max_scale > 0.0) {
        return Err(Error::Parameter(format!("max_scale must be positive, got {max_scale}")));
    }
    let n = dm.len();
    // higher neighbours within range
    let up: Vec<Vec<usize>> = (0..n)
        .map(|i| (i + 1..n).filter(|&j| dm.get(i, j) <= max_scale).collect())
        .collect();
    let mut simplices = Vec::new();
    let mut stack: Vec<(Vec<usize>, f64)> = (0..n).rev().map(|v| (vec![v], 0.0)).collect();
    while let Some((verts, scale)) = stack.pop() {
        if simplices.len() >= cap {
            return Err(Error::SizeLimit {
                count: simplices.len() + 1 + stack.len(),
                cap,
            });
        }
        if verts.len() <= max_dim {
            let last = *verts.last().unwrap();
            for &w in up[last].iter().rev() {
                let mut diam = scale;
                let mut ok = true;
                for &v in &verts {
                    let d = dm.get(v, w);
                    if d > max_scale {
                        ok = false;
                        break;
                    }
                    diam = diam.max(d);
                }
                if ok {
                    let mut next = verts.clone();
                    next.push(w);
                    stack.push((next, diam));
                }
            }
        }
        simplices.push(Simplex {
            vertices: verts,
            scale,
        });
    }
    simplices.sort_by(filtration_order);
    Ok(Filtration {
        simplices,
        max_dim,
        max_scale,
    })
}
