//! Simulations, metrics, comparison methods and benchmark drivers.

pub mod baselines;
pub mod bench;
pub mod metrics;
pub mod sim;

pub use bench::{run_lsvi_bench, run_predictive_bench, LsviConfig, PredictiveConfig};
pub use sim::{generate, Noise, Simulated, Simulation, SimulationSpec};
