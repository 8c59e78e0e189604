//! Seeded synthetic generators: toy signals, unit-root processes, cointegrated
//! systems and a four-channel stand-in for bridge natural-frequency data.
//!
//! Every generator is bit-deterministic given its arguments; randomness comes
//! from a ChaCha8 stream seeded with the caller's seed.

use std::f64::consts::PI;
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{MultiSeries, TimeSeries};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normals(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// `sin(t) + sin(2t) + sin(3t)` sampled at `t = k dt`.
pub fn gen_sine_mix(n: usize, dt: f64) -> Result<TimeSeries> {
    if n < 2 {
        return Err(Error::Parameter(format!("sine mix needs n >= 2, got {n}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let values = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            t.sin() + (2.0 * t).sin() + (3.0 * t).sin()
        })
        .collect();
    TimeSeries::new("sine_mix", values)
}

pub fn gen_white_noise(n: usize, seed: u64) -> Result<TimeSeries> {
    TimeSeries::new("noise", normals(n, &mut rng(seed)))
}

/// Cumulative sum of unit Gaussian innovations; the first value is the first
/// innovation.
pub fn gen_random_walk(n: usize, seed: u64) -> Result<TimeSeries> {
    let mut acc = 0.0;
    let values = normals(n, &mut rng(seed))
        .into_iter()
        .map(|e| {
            acc += e;
            acc
        })
        .collect();
    TimeSeries::new("walk", values)
}

/// A system of `m` channels sharing one random-walk trend, built so that
/// `beta_true . y_t` equals an injected white-noise series exactly.
///
/// Channels are `y = a w + beta e / |beta|^2 + P u`, with `a` orthogonal to
/// `beta`, `w` the common walk, `e` the injected noise and `P u` independent
/// noise projected off `beta` (so the other combinations are not degenerate).
/// The injected noise is returned alongside.
pub fn gen_cointegrated_system(
    n: usize,
    m: usize,
    beta_true: &[f64],
    seed: u64,
) -> Result<(MultiSeries, TimeSeries)> {
    if m < 2 {
        return Err(Error::Parameter(format!("need at least 2 channels, got {m}")));
    }
    if beta_true.len() != m {
        return Err(Error::Shape {
            expected: m,
            got: beta_true.len(),
        });
    }
    let bb: f64 = beta_true.iter().map(|b| b * b).sum();
    if !(bb > 0.0) || beta_true.iter().any(|b| !b.is_finite()) {
        return Err(Error::Parameter("beta_true must be finite and nonzero".into()));
    }
    let project = |v: &[f64]| -> Vec<f64> {
        let dot: f64 = v.iter().zip(beta_true).map(|(a, b)| a * b).sum();
        v.iter().zip(beta_true).map(|(a, b)| a - dot / bb * b).collect()
    };
    let mut load = project(&vec![1.0; m]);
    if load.iter().map(|v| v * v).sum::<f64>() < 1e-12 * m as f64 {
        let mut e1 = vec![0.0; m];
        e1[0] = 1.0;
        load = project(&e1);
    }
    let mut r = rng(seed);
    let walk_steps = normals(n, &mut r);
    let injected = normals(n, &mut r);
    let mut walk = 0.0;
    let mut columns = vec![Vec::with_capacity(n); m];
    for t in 0..n {
        walk += walk_steps[t];
        let u = project(&normals(m, &mut r));
        for k in 0..m {
            columns[k].push(load[k] * walk + beta_true[k] * injected[t] / bb + u[k]);
        }
    }
    let labels = (1..=m).map(|k| format!("y{k}")).collect();
    Ok((
        MultiSeries::new(labels, columns)?,
        TimeSeries::new("injected", injected)?,
    ))
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Configuration of the four-channel bridge-frequency stand-in.
///
/// All channels follow a common environmental driver
/// `d(t) = sin(2 pi t / period) + walk_std * W(t) - cold_snap_depth * bump(t)`,
/// where `W` is a unit random walk and `bump` is a smooth plateau confined to
/// `regime` (a cold spell). Channel `k` is `channel_couplings[k] * d(t)` plus
/// Gaussian noise. Channel 2 additionally responds one-sidedly to freezing:
/// `excursion_amplitude * smoothstep((freeze_threshold - d) / freeze_width)`,
/// which is nonzero only while the driver is below the threshold. The
/// threshold sits below the normal seasonal range, so the excursion only
/// appears inside the cold spell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Z24MimicConfig {
    pub n: usize,
    pub period: usize,
    pub regime: Range<usize>,
    pub excursion_amplitude: f64,
    pub noise_std: f64,
    pub channel_couplings: [f64; 4],
    pub cold_snap_depth: f64,
    pub walk_std: f64,
    pub freeze_threshold: f64,
    pub freeze_width: f64,
    pub seed: u64,
}

impl Default for Z24MimicConfig {
    fn default() -> Self {
        Self {
            n: 3000,
            period: 300,
            regime: 1900..2400,
            excursion_amplitude: 2.0,
            noise_std: 0.05,
            channel_couplings: [1.0, 0.85, 1.15, 0.9],
            cold_snap_depth: 2.5,
            walk_std: 0.004,
            freeze_threshold: -1.75,
            freeze_width: 1.25,
            seed: 0,
        }
    }
}

impl Z24MimicConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.period < 8 {
            return Err(Error::Parameter(format!("period must be >= 8, got {}", self.period)));
        }
        if self.regime.start > self.regime.end || self.regime.end > self.n {
            return Err(Error::Parameter(format!(
                "regime {:?} outside [0, {})",
                self.regime, self.n
            )));
        }
        if !(self.noise_std >= 0.0) || !(self.walk_std >= 0.0) {
            return Err(Error::Parameter("noise and walk std must be >= 0".into()));
        }
        if !(self.freeze_width > 0.0) {
            return Err(Error::Parameter("freeze_width must be positive".into()));
        }
        Ok(())
    }

    /// Plateau in `[0, 1]`, ramped with smoothsteps over the first and last
    /// quarter of the regime, zero outside it.
    pub fn bump(&self, t: usize) -> f64 {
        if !self.regime.contains(&t) {
            return 0.0;
        }
        let len = (self.regime.end - self.regime.start) as f64;
        let u = (t - self.regime.start) as f64 / len;
        smoothstep(u / 0.25) * smoothstep((1.0 - u) / 0.25)
    }
}

pub const Z24_LABELS: [&str; 4] = ["w1", "w2", "w3", "w4"];

pub fn gen_z24_mimic(cfg: &Z24MimicConfig) -> Result<MultiSeries> {
    cfg.validate()?;
    let mut r = rng(cfg.seed);
    let steps = normals(cfg.n, &mut r);
    let mut walk = 0.0;
    let driver: Vec<f64> = (0..cfg.n)
        .map(|t| {
            walk += steps[t];
            (2.0 * PI * t as f64 / cfg.period as f64).sin() + cfg.walk_std * walk
                - cfg.cold_snap_depth * cfg.bump(t)
        })
        .collect();
    let mut columns = Vec::with_capacity(4);
    for (k, &c) in cfg.channel_couplings.iter().enumerate() {
        let noise = normals(cfg.n, &mut r);
        let col = (0..cfg.n)
            .map(|t| {
                let mut v = c * driver[t] + cfg.noise_std * noise[t];
                if k == 1 && cfg.regime.contains(&t) {
                    v += cfg.excursion_amplitude
                        * smoothstep((cfg.freeze_threshold - driver[t]) / cfg.freeze_width);
                }
                v
            })
            .collect();
        columns.push(col);
    }
    MultiSeries::new(Z24_LABELS.iter().map(|s| s.to_string()).collect(), columns)
}
