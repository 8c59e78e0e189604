//! Seeded Monte-Carlo calibration of the unit-root and cointegration tests.

use cointopo::cointegration::{johansen, residual_series};
use cointopo::series::{difference, TimeSeries};
use cointopo::stationarity::{adf_test_default, integration_order, Significance};
use cointopo::synth::{gen_cointegrated_system, gen_random_walk, gen_white_noise};
use rayon::prelude::*;

const FIVE: Significance = Significance::FivePercent;

fn rejects(ts: &TimeSeries) -> bool {
    adf_test_default(ts).unwrap().reject_unit_root(FIVE)
}

fn count(seeds: std::ops::Range<u64>, f: impl Fn(u64) -> bool + Sync) -> usize {
    seeds.into_par_iter().filter(|&s| f(s)).count()
}

fn angle_deg(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot.abs() / (na * nb)).min(1.0).acos().to_degrees()
}

#[test]
fn adf_calibration() {
    let noise = count(0..100, |s| rejects(&gen_white_noise(1000, s).unwrap()));
    let walk = count(0..100, |s| rejects(&gen_random_walk(1000, s).unwrap()));
    let diffed = count(0..100, |s| rejects(&difference(&gen_random_walk(1000, s).unwrap(), 1).unwrap()));
    assert!(noise >= 95, "white noise rejected in {noise}/100");
    assert!(walk <= 10, "walk rejected in {walk}/100");
    assert!(diffed >= 95, "differenced walk rejected in {diffed}/100");
}

#[test]
fn adf_statistic_is_affine_invariant() {
    for s in 0..10 {
        let ts = gen_random_walk(500, s).unwrap();
        let moved = TimeSeries::new("m", ts.values().iter().map(|v| 3.5 * v - 12.0).collect()).unwrap();
        let (a, b) = (adf_test_default(&ts).unwrap(), adf_test_default(&moved).unwrap());
        assert!((a.t_p - b.t_p).abs() < 1e-8 * a.t_p.abs().max(1.0));
    }
}

#[test]
fn integration_orders() {
    let noise = gen_white_noise(800, 3).unwrap();
    let walk = gen_random_walk(800, 3).unwrap();
    let mut acc = 0.0;
    let i2 = TimeSeries::new("i2", walk.values().iter().map(|v| { acc += v; acc }).collect()).unwrap();
    assert_eq!(integration_order(&noise, 3, None, FIVE).unwrap(), 0);
    assert_eq!(integration_order(&walk, 3, None, FIVE).unwrap(), 1);
    assert_eq!(integration_order(&i2, 3, None, FIVE).unwrap(), 2);
}

#[test]
fn johansen_recovers_pair() {
    let beta = [1.0, -2.0];
    let mean: f64 = (0..20)
        .map(|s| {
            let (ms, _) = gen_cointegrated_system(2000, 2, &beta, s).unwrap();
            angle_deg(johansen(&ms, 1).unwrap().leading(), &beta)
        })
        .sum::<f64>()
        / 20.0;
    assert!(mean <= 5.0, "mean angular error {mean}");
}

#[test]
fn cointegrated_pair_stationarity() {
    let beta = [1.0, -2.0];
    let leading = count(0..100, |s| {
        let (ms, _) = gen_cointegrated_system(2000, 2, &beta, s).unwrap();
        rejects(&residual_series(&ms, johansen(&ms, 1).unwrap().leading()).unwrap())
    });
    assert!(leading >= 90, "leading residual stationary in {leading}/100");

    let channels = count(0..100, |s| {
        let (ms, _) = gen_cointegrated_system(2000, 2, &beta, s).unwrap();
        ms.channels().unwrap().iter().all(|c| !rejects(c))
    });
    assert!(channels >= 90, "both channels nonstationary in {channels}/100");

    let injected = count(0..100, |s| {
        let (ms, _) = gen_cointegrated_system(2000, 2, &beta, s).unwrap();
        rejects(&residual_series(&ms, &beta).unwrap())
    });
    assert!(injected >= 95, "true combination stationary in {injected}/100");
}

#[test]
fn true_combination_equals_injected_noise() {
    let beta = [0.5, 1.0, -1.5];
    let (ms, e) = gen_cointegrated_system(600, 3, &beta, 8).unwrap();
    let z = residual_series(&ms, &beta).unwrap();
    for (a, b) in z.values().iter().zip(e.values()) {
        assert!((a - b).abs() < 1e-9);
    }
    // One shared trend in three channels leaves two cointegrating directions;
    // beta must lie in the span of the top two vectors.
    let jr = johansen(&ms, 2).unwrap();
    let (u, v) = (&jr.vectors[0], &jr.vectors[1]);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (uu, uv, vv) = (dot(u, u), dot(u, v), dot(v, v));
    let (ub, vb) = (dot(u, &beta), dot(v, &beta));
    let det = uu * vv - uv * uv;
    let (c0, c1) = ((vv * ub - uv * vb) / det, (uu * vb - uv * ub) / det);
    let proj: Vec<f64> = u.iter().zip(v).map(|(a, b)| c0 * a + c1 * b).collect();
    assert!(angle_deg(&proj, &beta) < 5.0);
    assert!(jr.eigenvalues[2] < 0.05);
}
