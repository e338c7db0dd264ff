//! Dimension reduction forests.
//!
//! A random forest whose trees split on linear combinations of the covariates estimated
//! per node by sliced inverse regression (SIR) and sliced average variance estimation
//! (SAVE), falling back to axis-aligned splits in small or degenerate nodes. The fitted
//! forest exposes its kernel (the fraction of trees in which two points share a leaf),
//! local subspace variable importance and out-of-bag permutation importance.
//!
//! ```
//! use drforest::{eval, Forest, ForestParams};
//!
//! let sim = eval::generate(&eval::SimulationSpec::new(eval::Simulation::Sim1, 300, 7)).unwrap();
//! let params = ForestParams { n_trees: 20, ..ForestParams::default() };
//! let forest = Forest::fit(&sim.data, &params).unwrap();
//! let yhat = forest.predict(&[0.5, -0.5, 0.0, 0.0, 0.0]).unwrap();
//! assert!(yhat.is_finite());
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod forest;
pub mod io;
pub mod linalg;
pub mod lsvi;
mod par;
pub mod sdr;
pub mod tree;

pub use data::{Dataset, Fingerprint, Standardization};
pub use error::{Error, Result};
pub use forest::{permutation_importance, Forest, ForestParams};
pub use lsvi::{compute_lsvi, compute_lsvi_batch, LocalImportance};
pub use sdr::{fit_save, fit_sir, SdrMethod, SdrResult};
pub use tree::{MTry, SplitMode, SplitRule, Tree, TreeParams};

pub use nalgebra;
