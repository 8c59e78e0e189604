//! Vietoris-Rips persistent homology.
//!
//! Scales are reported as simplex *diameters*: a simplex enters the filtration
//! at the largest pairwise distance among its vertices. Under the ball-radius
//! convention (vertices joined when their distance is at most `2 eps`) every
//! reported scale is `2 eps`.
//!
//! Two reduction engines produce the same [`PersistenceDiagram`]:
//!
//! * [`persistent_homology`] reduces the boundary matrix of an explicit
//!   [`Filtration`] (twist/clearing, coefficients in Z/2). Meant for small
//!   complexes and as a reference.
//! * [`rips_persistence`] works directly from a [`DistanceMatrix`] without
//!   materialising the filtration: zeroth homology by union-find, higher
//!   dimensions by cohomology reduction with clearing and emergent pairs.
//!   This is the engine used on embedded time series.

mod diagram;
mod filtration;
mod reduction;
mod rips;
mod union_find;

pub use diagram::{Interval, PersistenceDiagram};
pub use filtration::{vr_filtration, vr_filtration_with_cap, Filtration, Simplex, DEFAULT_SIMPLEX_CAP};
pub use reduction::persistent_homology;
pub use rips::rips_persistence;
pub use union_find::UnionFind;

use rand::Rng;

use crate::embedding::PointCloud;
use crate::error::{Error, Result};

/// Dense symmetric matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds from a full row-major `n x n` matrix, checking symmetry (1e-12),
    /// a zero diagonal and non-negativity.
    pub fn from_full(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Shape {
                expected: n * n,
                got: entries.len(),
            });
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::Parameter(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let (a, b) = (entries[i * n + j], entries[j * n + i]);
                if !(a >= 0.0) || !a.is_finite() || (a - b).abs() > 1e-12 {
                    return Err(Error::Parameter(format!(
                        "entries ({i},{j}) are not a symmetric non-negative pair"
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// `min_i max_j d(i, j)`. At this scale the Rips complex is a cone, so all
    /// homology except one component has died.
    pub fn enclosing_radius(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_distance(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Euclidean distances; each pair is computed once and mirrored.
pub fn pairwise_distances(pc: &PointCloud) -> Result<DistanceMatrix> {
    let n = pc.len();
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let pts = pc.points();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = euclidean(&pts[i], &pts[j]);
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, entries })
}

/// Greedy farthest-point subsample of `k` points. The first point is drawn
/// from `seed`; each further point maximises its distance to those already
/// chosen (ties go to the lowest index). Returns the chosen indices in
/// selection order.
pub fn maxmin_indices(pc: &PointCloud, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = pc.len();
    if k < 1 || k > n {
        return Err(Error::Parameter(format!(
            "subsample size {k} outside 1..={n}"
        )));
    }
    let pts = pc.points();
    let first = crate::synth::rng(seed).random_range(0..n);
    let mut chosen = Vec::with_capacity(k);
    chosen.push(first);
    let mut nearest: Vec<f64> = pts.iter().map(|p| euclidean(p, &pts[first])).collect();
    while chosen.len() < k {
        let mut best = usize::MAX;
        let mut best_d = -1.0;
        for (i, &d) in nearest.iter().enumerate() {
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        chosen.push(best);
        for (i, p) in pts.iter().enumerate() {
            let d = euclidean(p, &pts[best]);
            if d < nearest[i] {
                nearest[i] = d;
            }
        }
    }
    Ok(chosen)
}

pub fn maxmin_subsample(pc: &PointCloud, k: usize, seed: u64) -> Result<PointCloud> {
    Ok(pc.select(&maxmin_indices(pc, k, seed)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn square() -> PointCloud {
        PointCloud::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
            "square",
        )
        .unwrap()
    }

    #[test]
    fn square_distances() {
        let dm = pairwise_distances(&square()).unwrap();
        let mut off: Vec<f64> = (0..4)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| dm.get(i, j))
            .collect();
        off.sort_by(f64::total_cmp);
        assert_eq!(&off[..4], &[1.0; 4]);
        for d in &off[4..] {
            assert!((d - 2f64.sqrt()).abs() < 1e-15);
        }
        assert_eq!(dm.enclosing_radius(), 2f64.sqrt());
    }

    #[test]
    fn single_and_duplicate_points() {
        let one = PointCloud::new(vec![vec![1.0, 2.0]], "p").unwrap();
        let dm = pairwise_distances(&one).unwrap();
        assert_eq!((dm.len(), dm.get(0, 0)), (1, 0.0));
        let dup = PointCloud::new(vec![vec![1.0], vec![1.0]], "d").unwrap();
        assert_eq!(pairwise_distances(&dup).unwrap().get(0, 1), 0.0);
    }

    #[test]
    fn from_full_validates() {
        assert!(DistanceMatrix::from_full(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
        assert!(DistanceMatrix::from_full(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_full(2, vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_full(2, vec![0.0]).is_err());
    }

    #[test]
    fn triangle_inequality_on_sampled_triples() {
        let pc = PointCloud::new(
            (0..30).map(|i| {
                let t = i as f64 * 0.71;
                vec![t.sin() * 3.0, (1.3 * t).cos(), t * 0.1]
            }).collect(),
            "curve",
        )
        .unwrap();
        let dm = pairwise_distances(&pc).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                for k in (0..30).step_by(7) {
                    assert!(dm.get(i, j) <= dm.get(i, k) + dm.get(k, j) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn maxmin_full_is_permutation() {
        let pc = square();
        let mut idx = maxmin_indices(&pc, 4, 7).unwrap();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2, 3]);
    }

    #[test]
    fn maxmin_single_is_seeded_point() {
        let pc = square();
        let first = crate::synth::rng(42).random_range(0..4);
        assert_eq!(maxmin_indices(&pc, 1, 42).unwrap(), vec![first]);
        assert!(maxmin_indices(&pc, 0, 1).is_err());
        assert!(maxmin_indices(&pc, 5, 1).is_err());
    }

    #[test]
    fn maxmin_on_circle_spreads_points() {
        let pc = PointCloud::new(
            (0..100)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / 100.0;
                    vec![a.cos(), a.sin()]
                })
                .collect(),
            "circle",
        )
        .unwrap();
        for seed in 0..5 {
            let sub = maxmin_subsample(&pc, 10, seed).unwrap();
            let dm = pairwise_distances(&sub).unwrap();
            let mut min = f64::INFINITY;
            for i in 0..10 {
                for j in 0..i {
                    min = min.min(dm.get(i, j));
                }
            }
            let bound = 2.0 * std::f64::consts::PI / 10.0 * 0.5;
            assert!(min >= bound, "seed {seed}: {min} < {bound}");
        }
    }
}
