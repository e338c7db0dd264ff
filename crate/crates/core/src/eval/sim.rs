//! Synthetic regression problems with analytic mean functions and gradients.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Simulation {
    /// 20·max{e^{−2(x1−x2)²}, 2e^{−(x1²+x2²)/2}, e^{−(x1+x2)²}}, X ~ U[−3,3]^p.
    Sim1,
    /// 20·max{e^{−18x1²}, e^{−18x2²}, 1.75e^{−20(x1+x2)²}, 1.75e^{−20(x1−x2)²}}, X ~ U[−1,1]^p.
    Sim2,
    /// (xᵀβ1)² + (xᵀβ2)², X ~ N(0, Σ), Σ_ij = 0.5^|i−j|.
    Sim3,
    /// xᵀβ1·(xᵀβ2)² + (xᵀβ3)(xᵀβ4), X ~ N(0, Σ).
    Sim4,
    Friedman1,
    Friedman2,
    Friedman3,
    /// |x1| + |x2|, X ~ U[−3,3]^p.
    Lsvi1,
    /// x1 + x2², X ~ U[−3,3]^p.
    Lsvi2,
    /// 5·max{e^{−x1²/4}, e^{−x2²/4}}, X ~ U[−3,3]^p.
    Lsvi3,
    /// Same surface as `Sim1`, X ~ U[−3,3]^p.
    Lsvi4,
}

pub const ALL_SIMULATIONS: [Simulation; 11] = [
    Simulation::Sim1,
    Simulation::Sim2,
    Simulation::Sim3,
    Simulation::Sim4,
    Simulation::Friedman1,
    Simulation::Friedman2,
    Simulation::Friedman3,
    Simulation::Lsvi1,
    Simulation::Lsvi2,
    Simulation::Lsvi3,
    Simulation::Lsvi4,
];

impl fmt::Display for Simulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Simulation::Sim1 => "sim1",
            Simulation::Sim2 => "sim2",
            Simulation::Sim3 => "sim3",
            Simulation::Sim4 => "sim4",
            Simulation::Friedman1 => "friedman1",
            Simulation::Friedman2 => "friedman2",
            Simulation::Friedman3 => "friedman3",
            Simulation::Lsvi1 => "lsvi1",
            Simulation::Lsvi2 => "lsvi2",
            Simulation::Lsvi3 => "lsvi3",
            Simulation::Lsvi4 => "lsvi4",
        };
        f.write_str(s)
    }
}

impl FromStr for Simulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_SIMULATIONS
            .iter()
            .copied()
            .find(|sim| sim.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownSimulation(s.to_string()))
    }
}

/// Noise level: a fixed standard deviation or a target signal-to-noise ratio Var(m(X))/σ².
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    Sigma(f64),
    Snr(f64),
}

const SQRT6: f64 = 2.449_489_742_783_178;

fn sim3_betas() -> [[f64; 12]; 2] {
    let mut b1 = [0.0; 12];
    let mut b2 = [0.0; 12];
    for j in 0..6 {
        b1[j] = 1.0 / SQRT6;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        b2[j] = sign / SQRT6;
    }
    [b1, b2]
}

fn sim4_betas() -> [[f64; 10]; 4] {
    let s30 = 30f64.sqrt();
    let s35 = 35f64.sqrt();
    let s15 = 15f64.sqrt();
    let mut b = [[0.0; 10]; 4];
    for (j, v) in [1.0, 2.0, 3.0, 4.0].iter().enumerate() {
        b[0][j] = v / s30;
    }
    for (j, v) in [-2.0, 1.0, -4.0, 3.0, 1.0, 2.0].iter().enumerate() {
        b[1][j] = v / s35;
    }
    for (j, v) in [2.0, -1.0, 2.0, 1.0, 2.0, 1.0].iter().enumerate() {
        b[2][4 + j] = v / s15;
    }
    for (j, v) in [-1.0, -1.0, 1.0, 1.0].iter().enumerate() {
        b[3][6 + j] = v / 2.0;
    }
    b
}

fn proj(x: &[f64], b: &[f64]) -> f64 {
    b.iter().zip(x).map(|(a, c)| a * c).sum()
}

/// Index of the largest element and its value.
fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc })
}

fn sim1_terms(x: &[f64]) -> [f64; 3] {
    let (a, b) = (x[0], x[1]);
    [
        (-2.0 * (a - b).powi(2)).exp(),
        2.0 * (-0.5 * (a * a + b * b)).exp(),
        (-(a + b).powi(2)).exp(),
    ]
}

fn sim2_terms(x: &[f64]) -> [f64; 4] {
    let (a, b) = (x[0], x[1]);
    [
        (-18.0 * a * a).exp(),
        (-18.0 * b * b).exp(),
        1.75 * (-20.0 * (a + b).powi(2)).exp(),
        1.75 * (-20.0 * (a - b).powi(2)).exp(),
    ]
}

/// x2·x3 − 1/(x2·x4), shared by Friedman 2 and 3.
fn friedman_inner(x: &[f64]) -> f64 {
    x[1] * x[2] - 1.0 / (x[1] * x[3])
}

fn friedman_inner_grad(x: &[f64]) -> [f64; 4] {
    [
        0.0,
        x[2] + 1.0 / (x[1] * x[1] * x[3]),
        x[1],
        1.0 / (x[1] * x[3] * x[3]),
    ]
}

impl Simulation {
    /// Number of coordinates the mean function reads.
    pub fn intrinsic_p(self) -> usize {
        match self {
            Simulation::Sim3 => 12,
            Simulation::Sim4 => 10,
            Simulation::Friedman1 => 5,
            Simulation::Friedman2 | Simulation::Friedman3 => 4,
            _ => 2,
        }
    }

    pub fn default_p(self) -> usize {
        match self {
            Simulation::Sim1 | Simulation::Sim2 => 5,
            Simulation::Sim3 => 12,
            Simulation::Sim4 | Simulation::Friedman1 => 10,
            Simulation::Friedman2 | Simulation::Friedman3 => 4,
            _ => 10,
        }
    }

    pub fn default_noise(self) -> Noise {
        match self {
            Simulation::Sim3 | Simulation::Sim4 => Noise::Sigma(0.5),
            Simulation::Lsvi1 | Simulation::Lsvi2 | Simulation::Lsvi3 | Simulation::Lsvi4 => Noise::Snr(3.0),
            _ => Noise::Sigma(1.0),
        }
    }

    /// The regression function m(x) = E[Y | X = x].
    pub fn mean(self, x: &[f64]) -> f64 {
        match self {
            Simulation::Sim1 | Simulation::Lsvi4 => 20.0 * argmax(&sim1_terms(x)).1,
            Simulation::Sim2 => 20.0 * argmax(&sim2_terms(x)).1,
            Simulation::Sim3 => {
                let [b1, b2] = sim3_betas();
                proj(x, &b1).powi(2) + proj(x, &b2).powi(2)
            }
            Simulation::Sim4 => {
                let b = sim4_betas();
                proj(x, &b[0]) * proj(x, &b[1]).powi(2) + proj(x, &b[2]) * proj(x, &b[3])
            }
            Simulation::Friedman1 => {
                10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
            }
            Simulation::Friedman2 => (x[0] * x[0] + friedman_inner(x).powi(2)).sqrt(),
            Simulation::Friedman3 => (friedman_inner(x) / x[0]).atan(),
            Simulation::Lsvi1 => x[0].abs() + x[1].abs(),
            Simulation::Lsvi2 => x[0] + x[1] * x[1],
            Simulation::Lsvi3 => 5.0 * (-0.25 * x[0] * x[0]).exp().max((-0.25 * x[1] * x[1]).exp()),
        }
    }

    /// Analytic gradient of the mean function (of the active branch where a max is taken).
    pub fn gradient(self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        match self {
            Simulation::Sim1 | Simulation::Lsvi4 => {
                let (a, b) = (x[0], x[1]);
                let t = sim1_terms(x);
                match argmax(&t).0 {
                    0 => {
                        let d = -4.0 * (a - b) * t[0];
                        g[0] = 20.0 * d;
                        g[1] = -20.0 * d;
                    }
                    1 => {
                        g[0] = -20.0 * a * t[1];
                        g[1] = -20.0 * b * t[1];
                    }
                    _ => {
                        let d = -2.0 * (a + b) * t[2];
                        g[0] = 20.0 * d;
                        g[1] = 20.0 * d;
                    }
                }
            }
            Simulation::Sim2 => {
                let (a, b) = (x[0], x[1]);
                let t = sim2_terms(x);
                match argmax(&t).0 {
                    0 => g[0] = 20.0 * -36.0 * a * t[0],
                    1 => g[1] = 20.0 * -36.0 * b * t[1],
                    2 => {
                        let d = 20.0 * -40.0 * (a + b) * t[2];
                        g[0] = d;
                        g[1] = d;
                    }
                    _ => {
                        let d = 20.0 * -40.0 * (a - b) * t[3];
                        g[0] = d;
                        g[1] = -d;
                    }
                }
            }
            Simulation::Sim3 => {
                for b in sim3_betas() {
                    let s = 2.0 * proj(x, &b);
                    for (gj, bj) in g.iter_mut().zip(b) {
                        *gj += s * bj;
                    }
                }
            }
            Simulation::Sim4 => {
                let b = sim4_betas();
                let u: Vec<f64> = b.iter().map(|bk| proj(x, bk)).collect();
                let coef = [u[1] * u[1], 2.0 * u[0] * u[1], u[3], u[2]];
                for (k, bk) in b.iter().enumerate() {
                    for (gj, bj) in g.iter_mut().zip(bk) {
                        *gj += coef[k] * bj;
                    }
                }
            }
            Simulation::Friedman1 => {
                let c = 10.0 * PI * (PI * x[0] * x[1]).cos();
                g[0] = c * x[1];
                g[1] = c * x[0];
                g[2] = 40.0 * (x[2] - 0.5);
                g[3] = 10.0;
                g[4] = 5.0;
            }
            Simulation::Friedman2 => {
                let h = friedman_inner(x);
                let f = (x[0] * x[0] + h * h).sqrt();
                let dh = friedman_inner_grad(x);
                g[0] = x[0] / f;
                for j in 1..4 {
                    g[j] = h * dh[j] / f;
                }
            }
            Simulation::Friedman3 => {
                let h = friedman_inner(x);
                let denom = x[0] * x[0] + h * h;
                let dh = friedman_inner_grad(x);
                g[0] = -h / denom;
                for j in 1..4 {
                    g[j] = x[0] * dh[j] / denom;
                }
            }
            Simulation::Lsvi1 => {
                g[0] = x[0].signum();
                g[1] = x[1].signum();
            }
            Simulation::Lsvi2 => {
                g[0] = 1.0;
                g[1] = 2.0 * x[1];
            }
            Simulation::Lsvi3 => {
                let (e0, e1) = ((-0.25 * x[0] * x[0]).exp(), (-0.25 * x[1] * x[1]).exp());
                if e0 >= e1 {
                    g[0] = 5.0 * -0.5 * x[0] * e0;
                } else {
                    g[1] = 5.0 * -0.5 * x[1] * e1;
                }
            }
        }
        g
    }

    /// Draws one covariate vector of length `p`.
    pub fn sample_x(self, rng: &mut impl Rng, out: &mut [f64]) {
        fn unif(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
            lo + (hi - lo) * rng.random::<f64>()
        }
        match self {
            Simulation::Sim2 => out.iter_mut().for_each(|v| *v = unif(rng, -1.0, 1.0)),
            Simulation::Sim3 | Simulation::Sim4 => {
                // AR(1) with coefficient 0.5 and unit marginal variance has Σ_ij = 0.5^|i−j|.
                let scale = (1.0 - 0.25f64).sqrt();
                let mut prev = 0.0;
                for (j, v) in out.iter_mut().enumerate() {
                    let z: f64 = StandardNormal.sample(rng);
                    prev = if j == 0 { z } else { 0.5 * prev + scale * z };
                    *v = prev;
                }
            }
            Simulation::Friedman1 => out.iter_mut().for_each(|v| *v = unif(rng, 0.0, 1.0)),
            Simulation::Friedman2 | Simulation::Friedman3 => {
                let bounds = [(0.0, 100.0), (20.0, 280.0), (0.0, 1.0), (1.0, 11.0)];
                for (j, v) in out.iter_mut().enumerate() {
                    let (lo, hi) = bounds.get(j).copied().unwrap_or((0.0, 1.0));
                    *v = unif(rng, lo, hi);
                }
            }
            _ => out.iter_mut().for_each(|v| *v = unif(rng, -3.0, 3.0)),
        }
    }

    /// Var(m(X)) by Monte Carlo with a fixed seed (200 000 draws).
    pub fn signal_variance(self, p: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5a17);
        let draws = 200_000;
        let mut x = vec![0.0; p];
        let (mut mean, mut m2) = (0.0, 0.0);
        for k in 0..draws {
            self.sample_x(&mut rng, &mut x);
            let v = self.mean(&x);
            let d = v - mean;
            mean += d / (k + 1) as f64;
            m2 += d * (v - mean);
        }
        m2 / draws as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSpec {
    pub sim: Simulation,
    pub n: usize,
    pub p: usize,
    pub noise: Noise,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn new(sim: Simulation, n: usize, seed: u64) -> Self {
        Self {
            sim,
            n,
            p: sim.default_p(),
            noise: sim.default_noise(),
            seed,
        }
    }

    pub fn noise_sd(&self) -> f64 {
        match self.noise {
            Noise::Sigma(s) => s,
            Noise::Snr(snr) => (self.sim.signal_variance(self.p) / snr).sqrt(),
        }
    }
}

/// A simulated dataset with its noiseless means.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub data: Dataset,
    pub mean: Vec<f64>,
    pub sigma: f64,
}

/// Draws `n` rows: all covariates first, then the noise, from one seeded stream.
pub fn generate(spec: &SimulationSpec) -> Result<Simulated> {
    if spec.p < spec.sim.intrinsic_p() {
        return Err(Error::InvalidParam(format!(
            "{} needs p >= {}, got {}",
            spec.sim,
            spec.sim.intrinsic_p(),
            spec.p
        )));
    }
    if spec.n == 0 {
        return Err(Error::EmptyDataset);
    }
    let sigma = spec.noise_sd();
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParam(format!("invalid noise level {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = vec![0.0; spec.n * spec.p];
    for row in x.chunks_exact_mut(spec.p) {
        spec.sim.sample_x(&mut rng, row);
    }
    let mean: Vec<f64> = x.chunks_exact(spec.p).map(|r| spec.sim.mean(r)).collect();
    let y: Vec<f64> = mean
        .iter()
        .map(|m| {
            let e: f64 = StandardNormal.sample(&mut rng);
            m + sigma * e
        })
        .collect();
    Ok(Simulated {
        data: Dataset::new(x, y, spec.p)?,
        mean,
        sigma,
    })
}
