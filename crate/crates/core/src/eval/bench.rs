//! Benchmark drivers: held-out prediction error against the axis-only forest, and LSVI
//! accuracy against analytic gradients.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::baselines::{self, NadarayaWatson, SdrFeatures};
use super::metrics;
use super::sim::{self, Noise, Simulation, SimulationSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestParams};
use crate::lsvi;
use crate::par;
use crate::sdr::{SdrMethod, DEFAULT_SLICES};
use crate::tree::{MTry, SplitMode, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    Drf,
    Rf,
    SirRf,
    SaveRf,
    Nw,
    SirNw,
    SaveNw,
}

pub const ALL_METHODS: [Method; 7] = [
    Method::Drf,
    Method::Rf,
    Method::SirRf,
    Method::SaveRf,
    Method::Nw,
    Method::SirNw,
    Method::SaveNw,
];

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Drf => "DRF",
            Method::Rf => "RF",
            Method::SirRf => "SIR+RF",
            Method::SaveRf => "SAVE+RF",
            Method::Nw => "NW",
            Method::SirNw => "SIR+NW",
            Method::SaveNw => "SAVE+NW",
        }
    }

    fn projection(self) -> Option<SdrMethod> {
        match self {
            Method::SirRf | Method::SirNw => Some(SdrMethod::Sir),
            Method::SaveRf | Method::SaveNw => Some(SdrMethod::Save),
            _ => None,
        }
    }

    fn is_forest(self) -> bool {
        matches!(self, Method::Drf | Method::Rf | Method::SirRf | Method::SaveRf)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_METHODS
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParam(format!("unknown method {s:?}")))
    }
}

/// Settings for the held-out prediction benchmark.
#[derive(Debug, Clone)]
pub struct PredictiveConfig {
    pub suites: Vec<Simulation>,
    pub methods: Vec<Method>,
    pub n_train: usize,
    pub n_test: usize,
    pub replicates: usize,
    pub n_trees: usize,
    pub m_try: Vec<MTry>,
    pub n_min: Vec<usize>,
    pub n_slices: usize,
    pub seed: u64,
}

impl PredictiveConfig {
    /// Five replicates, 100 trees and a 2×2 hyperparameter grid.
    pub fn desk() -> Self {
        Self {
            suites: vec![
                Simulation::Sim1,
                Simulation::Sim2,
                Simulation::Sim3,
                Simulation::Sim4,
                Simulation::Friedman1,
                Simulation::Friedman2,
                Simulation::Friedman3,
            ],
            methods: ALL_METHODS.to_vec(),
            n_train: 2000,
            n_test: 1000,
            replicates: 5,
            n_trees: 100,
            m_try: vec![MTry::Third, MTry::All],
            n_min: vec![1, 5],
            n_slices: DEFAULT_SLICES,
            seed: 0,
        }
    }

    /// The full protocol: 50 replicates, 500 trees, twelve grid points per forest.
    pub fn full() -> Self {
        Self {
            replicates: 50,
            n_trees: 500,
            m_try: vec![
                MTry::Fixed(2),
                MTry::Fixed(4),
                MTry::Fixed(6),
                MTry::Third,
                MTry::Sqrt,
                MTry::All,
            ],
            ..Self::desk()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.suites.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidParam("benchmark needs at least one suite and method".into()));
        }
        if !self.methods.contains(&Method::Rf) {
            return Err(Error::InvalidParam("the RF baseline is required to compute improvements".into()));
        }
        if self.replicates == 0 || self.n_trees == 0 || self.n_train < 2 || self.n_test == 0 {
            return Err(Error::InvalidParam("replicates, trees and sample sizes must be positive".into()));
        }
        if self.m_try.is_empty() || self.n_min.is_empty() {
            return Err(Error::InvalidParam("hyperparameter grid is empty".into()));
        }
        Ok(())
    }
}

/// Test MSE of one method on one replicate.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub suite: String,
    pub method: String,
    pub replicate: usize,
    pub mse: f64,
    /// 1 − mse / mse_RF on the same replicate.
    pub improvement: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchSummary {
    pub suite: String,
    pub method: String,
    pub mse_mean: f64,
    pub mse_sd: f64,
    pub improvement_mean: f64,
    pub improvement_sd: f64,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub records: Vec<BenchRecord>,
    pub summaries: Vec<BenchSummary>,
}

impl BenchResult {
    pub fn summary(&self, suite: Simulation, method: Method) -> Option<&BenchSummary> {
        let (s, m) = (suite.to_string(), method.name());
        self.summaries.iter().find(|r| r.suite == s && r.method == m)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for replicate `replicate` of suite `suite`, independent of run order.
pub fn replicate_seed(seed: u64, suite: Simulation, replicate: usize) -> u64 {
    let tag = sim::ALL_SIMULATIONS.iter().position(|&s| s == suite).unwrap_or(0) as u64;
    splitmix(splitmix(splitmix(seed) ^ tag) ^ replicate as u64)
}

/// Lowest test MSE of a forest over the grid; grid points resolving to the same
/// parameters are fitted once.
fn best_forest_mse(
    train: &Dataset,
    test: &Dataset,
    mode: SplitMode,
    cfg: &PredictiveConfig,
    seed: u64,
) -> Result<f64> {
    let mut grid: Vec<TreeParams> = Vec::new();
    for &n_min in &cfg.n_min {
        for &m in &cfg.m_try {
            let tp = TreeParams {
                n_min,
                m_try: m.resolve(train.p()),
                n_slices: cfg.n_slices,
                mode,
            };
            if !grid.contains(&tp) {
                grid.push(tp);
            }
        }
    }
    let mut best = f64::INFINITY;
    for tree in grid {
        let forest = Forest::fit(
            train,
            &ForestParams {
                tree,
                n_trees: cfg.n_trees,
                seed,
            },
        )?;
        best = best.min(metrics::mse(test.y(), &forest.predict_dataset(test)?)?);
    }
    Ok(best)
}

fn method_mse(method: Method, train: &Dataset, test: &Dataset, cfg: &PredictiveConfig, seed: u64) -> Result<f64> {
    let (train, test) = match method.projection() {
        Some(sdr) => {
            let f = SdrFeatures::fit(sdr, train, cfg.n_slices)?;
            (f.transform(train), f.transform(test))
        }
        None => (train.clone(), test.clone()),
    };
    if method.is_forest() {
        let mode = if method == Method::Drf {
            SplitMode::Sdr
        } else {
            SplitMode::AxisOnly
        };
        best_forest_mse(&train, &test, mode, cfg, seed)
    } else {
        let nw = NadarayaWatson::fit(&train, None)?;
        metrics::mse(test.y(), &nw.predict_dataset(&test))
    }
}

/// Runs every (suite, replicate, method) combination. Records are ordered by suite,
/// replicate, then method as listed in the config.
pub fn run_predictive_bench(cfg: &PredictiveConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let mut records = Vec::new();
    for &suite in &cfg.suites {
        let per_rep: Vec<Result<Vec<f64>>> = par::map_indexed(cfg.replicates, |r| {
            let seed = replicate_seed(cfg.seed, suite, r);
            let spec = SimulationSpec::new(suite, cfg.n_train + cfg.n_test, seed);
            let all = sim::generate(&spec)?.data;
            let train = all.subset(&(0..cfg.n_train).collect::<Vec<_>>());
            let test = all.subset(&(cfg.n_train..all.n()).collect::<Vec<_>>());
            cfg.methods
                .iter()
                .map(|&m| method_mse(m, &train, &test, cfg, seed))
                .collect()
        });
        for (r, mses) in per_rep.into_iter().enumerate() {
            let mses = mses?;
            let rf = cfg.methods.iter().position(|&m| m == Method::Rf).map(|i| mses[i]).unwrap_or(f64::NAN);
            log::info!("{suite} replicate {r}: RF mse {rf:.4}");
            for (&m, &mse) in cfg.methods.iter().zip(&mses) {
                records.push(BenchRecord {
                    suite: suite.to_string(),
                    method: m.name().to_string(),
                    replicate: r,
                    mse,
                    improvement: 1.0 - mse / rf,
                });
            }
        }
    }
    let mut summaries = Vec::new();
    for &suite in &cfg.suites {
        for &m in &cfg.methods {
            let rows: Vec<&BenchRecord> = records
                .iter()
                .filter(|r| r.suite == suite.to_string() && r.method == m.name())
                .collect();
            let (mse_mean, mse_sd) = metrics::mean_sd(&rows.iter().map(|r| r.mse).collect::<Vec<_>>());
            let (improvement_mean, improvement_sd) =
                metrics::mean_sd(&rows.iter().map(|r| r.improvement).collect::<Vec<_>>());
            summaries.push(BenchSummary {
                suite: suite.to_string(),
                method: m.name().to_string(),
                mse_mean,
                mse_sd,
                improvement_mean,
                improvement_sd,
            });
        }
    }
    Ok(BenchResult { records, summaries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LsviMethod {
    Drf,
    Sir,
    Save,
    LocalSir,
}

pub const ALL_LSVI_METHODS: [LsviMethod; 4] = [LsviMethod::Drf, LsviMethod::Sir, LsviMethod::Save, LsviMethod::LocalSir];

impl LsviMethod {
    pub fn name(self) -> &'static str {
        match self {
            LsviMethod::Drf => "DRF",
            LsviMethod::Sir => "SIR",
            LsviMethod::Save => "SAVE",
            LsviMethod::LocalSir => "LocalSIR",
        }
    }
}

/// Settings for the local-importance benchmark.
#[derive(Debug, Clone)]
pub struct LsviConfig {
    pub suites: Vec<Simulation>,
    pub methods: Vec<LsviMethod>,
    pub n: usize,
    pub n_test: usize,
    pub p: usize,
    pub snr: f64,
    pub replicates: usize,
    pub n_trees: usize,
    pub m_try: usize,
    pub n_min: Vec<usize>,
    /// Neighbourhood sizes for local SIR; values below max(10, p) are raised to it.
    pub k: Vec<usize>,
    pub n_slices: usize,
    pub seed: u64,
}

impl LsviConfig {
    /// One replicate at SNR 3:1 with 100 trees.
    pub fn desk() -> Self {
        Self {
            suites: vec![Simulation::Lsvi1, Simulation::Lsvi2, Simulation::Lsvi3, Simulation::Lsvi4],
            methods: ALL_LSVI_METHODS.to_vec(),
            n: 2000,
            n_test: 100,
            p: 10,
            snr: 3.0,
            replicates: 1,
            n_trees: 100,
            m_try: 5,
            n_min: vec![3, 10, 25, 50, 100],
            k: vec![10, 25, 50, 100],
            n_slices: DEFAULT_SLICES,
            seed: 0,
        }
    }

    /// 50 replicates with 500 trees.
    pub fn full() -> Self {
        Self {
            replicates: 50,
            n_trees: 500,
            ..Self::desk()
        }
    }
}

/// Trace correlation of one method's direction at one test point.
#[derive(Debug, Clone, Serialize)]
pub struct LsviRecord {
    pub suite: String,
    pub method: String,
    pub replicate: usize,
    pub point: usize,
    /// NaN when the method produced no direction at this point.
    pub trace_correlation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LsviSummary {
    pub suite: String,
    pub method: String,
    pub median: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct LsviBenchResult {
    pub records: Vec<LsviRecord>,
    pub summaries: Vec<LsviSummary>,
}

impl LsviBenchResult {
    pub fn summary(&self, suite: Simulation, method: LsviMethod) -> Option<&LsviSummary> {
        let (s, m) = (suite.to_string(), method.name());
        self.summaries.iter().find(|r| r.suite == s && r.method == m)
    }
}

fn tc_or_nan(u: &[f64], v: &[f64]) -> f64 {
    metrics::trace_correlation(u, v).unwrap_or(f64::NAN)
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() {
        b
    } else if b.is_nan() {
        a
    } else {
        a.max(b)
    }
}

/// Per test point trace correlations for one method, best over its grid.
fn lsvi_scores(
    method: LsviMethod,
    data: &Dataset,
    queries: &Dataset,
    gradients: &[Vec<f64>],
    cfg: &LsviConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let q = queries.n();
    let x = nalgebra::DMatrix::from_row_slice(data.n(), data.p(), data.x());
    match method {
        LsviMethod::Sir | LsviMethod::Save => {
            let sdr = if method == LsviMethod::Sir {
                SdrMethod::Sir
            } else {
                SdrMethod::Save
            };
            let d = crate::sdr::fit(sdr, &x, data.y(), cfg.n_slices)?.leading_direction();
            Ok(gradients.iter().map(|g| tc_or_nan(&d, g)).collect())
        }
        LsviMethod::Drf => {
            let mut best = vec![f64::NAN; q];
            for &n_min in &cfg.n_min {
                let params = ForestParams {
                    tree: TreeParams {
                        n_min,
                        m_try: cfg.m_try.min(data.p()),
                        n_slices: cfg.n_slices,
                        mode: SplitMode::Sdr,
                    },
                    n_trees: cfg.n_trees,
                    seed,
                };
                let forest = Forest::fit(data, &params)?;
                let out = lsvi::compute_lsvi_batch(&forest, data, queries)?;
                for ((b, r), g) in best.iter_mut().zip(out).zip(gradients) {
                    if let Ok(li) = r {
                        *b = nan_max(*b, tc_or_nan(&li.direction, g));
                    }
                }
            }
            Ok(best)
        }
        LsviMethod::LocalSir => {
            let floor = 10.max(data.p());
            let mut ks: Vec<usize> = cfg.k.iter().map(|&k| k.max(floor).min(data.n())).collect();
            ks.dedup();
            Ok(par::map_indexed(q, |i| {
                ks.iter()
                    .filter_map(|&k| baselines::local_sir(data, queries.row(i), k, cfg.n_slices).ok())
                    .map(|d| tc_or_nan(&d, &gradients[i]))
                    .fold(f64::NAN, nan_max)
            }))
        }
    }
}

/// Trace correlation between each method's direction and the normalized analytic
/// gradient at `n_test` training points drawn without replacement.
pub fn run_lsvi_bench(cfg: &LsviConfig) -> Result<LsviBenchResult> {
    if cfg.suites.is_empty() || cfg.methods.is_empty() || cfg.replicates == 0 {
        return Err(Error::InvalidParam("benchmark needs suites, methods and replicates".into()));
    }
    if cfg.n_test == 0 || cfg.n_test > cfg.n {
        return Err(Error::InvalidParam(format!("test points must lie in 1..={}", cfg.n)));
    }
    if cfg.n_min.is_empty() || cfg.k.is_empty() || !(cfg.snr > 0.0) {
        return Err(Error::InvalidParam("empty grid or non-positive SNR".into()));
    }
    let mut records = Vec::new();
    for &suite in &cfg.suites {
        for r in 0..cfg.replicates {
            let seed = replicate_seed(cfg.seed, suite, r);
            let spec = SimulationSpec {
                sim: suite,
                n: cfg.n,
                p: cfg.p,
                noise: Noise::Snr(cfg.snr),
                seed,
            };
            let data = sim::generate(&spec)?.data;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57);
            let mut picked = index::sample(&mut rng, cfg.n, cfg.n_test).into_vec();
            picked.sort_unstable();
            let queries = data.subset(&picked);
            let gradients: Vec<Vec<f64>> = queries.rows().map(|x| suite.gradient(x)).collect();
            for &m in &cfg.methods {
                let scores = lsvi_scores(m, &data, &queries, &gradients, cfg, seed)?;
                log::info!(
                    "{suite} replicate {r} {}: median trace correlation {:.3}",
                    m.name(),
                    metrics::median(&scores)
                );
                records.extend(scores.into_iter().enumerate().map(|(point, tc)| LsviRecord {
                    suite: suite.to_string(),
                    method: m.name().to_string(),
                    replicate: r,
                    point,
                    trace_correlation: tc,
                }));
            }
        }
    }
    let mut summaries = Vec::new();
    for &suite in &cfg.suites {
        for &m in &cfg.methods {
            let v: Vec<f64> = records
                .iter()
                .filter(|r| r.suite == suite.to_string() && r.method == m.name())
                .map(|r| r.trace_correlation)
                .collect();
            let finite: Vec<f64> = v.iter().copied().filter(|t| t.is_finite()).collect();
            summaries.push(LsviSummary {
                suite: suite.to_string(),
                method: m.name().to_string(),
                median: metrics::median(&v),
                mean: metrics::mean_sd(&finite).0,
            });
        }
    }
    Ok(LsviBenchResult { records, summaries })
}
