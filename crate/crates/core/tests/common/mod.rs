//! Shared helpers for integration tests: independent oracles and fixtures.
#![allow(dead_code)]

use cointopo::embedding::PointCloud;
use cointopo::vr::{pairwise_distances, DistanceMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` points in `[0,1]^dim`, or on a coarse integer grid (many tied
/// distances) when `grid` is set.
pub fn random_cloud(seed: u64, n: usize, dim: usize, grid: bool) -> PointCloud {
    let mut r = rng(seed);
    let points = (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| if grid { r.random_range(0..3) as f64 } else { r.random::<f64>() })
                .collect()
        })
        .collect();
    PointCloud::new(points, format!("random-{seed}")).unwrap()
}

pub fn circle(n: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let points = (0..n)
        .map(|_| {
            let t = r.random::<f64>() * std::f64::consts::TAU;
            vec![t.cos(), t.sin()]
        })
        .collect();
    PointCloud::new(points, "circle").unwrap()
}

pub fn gaussian_ball(n: usize, dim: usize, seed: u64) -> PointCloud {
    use rand_distr::{Distribution, StandardNormal};
    let mut r = rng(seed);
    let points = (0..n)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut r)).collect())
        .collect();
    PointCloud::new(points, "ball").unwrap()
}

pub fn dm(pc: &PointCloud) -> DistanceMatrix {
    pairwise_distances(pc).unwrap()
}

/// Every clique of size `<= max_dim + 1` with its diameter.
pub fn all_simplices(dm: &DistanceMatrix, max_dim: usize) -> Vec<(Vec<usize>, f64)> {
    let n = dm.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let verts: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if verts.len() > max_dim + 1 {
            continue;
        }
        let mut diam = 0.0f64;
        for a in 0..verts.len() {
            for b in a + 1..verts.len() {
                diam = diam.max(dm.get(verts[a], verts[b]));
            }
        }
        out.push((verts, diam));
    }
    out
}

fn rank_gf2(mut rows: Vec<u128>) -> usize {
    let mut rank = 0;
    for bit in 0..128 {
        let mask = 1u128 << bit;
        if let Some(p) = (rank..rows.len()).find(|&i| rows[i] & mask != 0) {
            rows.swap(rank, p);
            let pivot = rows[rank];
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && *row & mask != 0 {
                    *row ^= pivot;
                }
            }
            rank += 1;
        }
    }
    rank
}

/// Betti numbers `b_0..b_{max_dim-1}` of the Rips complex at `scale`, from
/// ranks of boundary matrices over Z/2 built from scratch.
pub fn brute_betti(dm: &DistanceMatrix, max_dim: usize, scale: f64) -> Vec<usize> {
    let simplices: Vec<Vec<usize>> = all_simplices(dm, max_dim)
        .into_iter()
        .filter(|(_, d)| *d <= scale)
        .map(|(v, _)| v)
        .collect();
    let by_dim: Vec<Vec<&Vec<usize>>> = (0..=max_dim)
        .map(|k| simplices.iter().filter(|s| s.len() == k + 1).collect())
        .collect();
    // rank of boundary from dimension k to k-1
    let boundary_rank = |k: usize| -> usize {
        if k == 0 || k > max_dim {
            return 0;
        }
        let faces = &by_dim[k - 1];
        assert!(faces.len() <= 128);
        let rows = by_dim[k]
            .iter()
            .map(|s| {
                let mut row = 0u128;
                for skip in 0..s.len() {
                    let face: Vec<usize> = s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                    let idx = faces.iter().position(|f| **f == face).unwrap();
                    row ^= 1 << idx;
                }
                row
            })
            .collect();
        rank_gf2(rows)
    };
    (0..max_dim)
        .map(|k| by_dim[k].len() - boundary_rank(k) - boundary_rank(k + 1))
        .collect()
}

/// Distinct simplex diameters up to `max_scale`, ascending.
pub fn entry_scales(dm: &DistanceMatrix, max_dim: usize, max_scale: f64) -> Vec<f64> {
    let mut s: Vec<f64> = all_simplices(dm, max_dim)
        .into_iter()
        .map(|(_, d)| d)
        .filter(|&d| d <= max_scale)
        .collect();
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}
