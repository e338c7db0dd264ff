//! Browser bindings for the demo page in `www/`.
//!
//! Fits a dimension reduction forest and an axis-aligned forest to the two-dimensional
//! version of the first simulation surface, then answers kernel, LSVI and prediction
//! queries at points the user clicks.

use drforest::eval::{self, Simulation, SimulationSpec};
use drforest::forest::kernel_from_leaves;
use drforest::{lsvi, Dataset, Forest, ForestParams, SplitMode, TreeParams};
use wasm_bindgen::prelude::*;

/// Half-width of the square the covariates are drawn from.
const BOX: f64 = 3.0;

#[wasm_bindgen]
pub struct Demo {
    data: Dataset,
    drf: Forest,
    rf: Forest,
    drf_leaves: Vec<Vec<usize>>,
    rf_leaves: Vec<Vec<usize>>,
}

fn err(e: drforest::Error) -> JsError {
    JsError::new(&e.to_string())
}

impl Demo {
    fn pick(&self, model: &str) -> Result<(&Forest, &[Vec<usize>]), JsError> {
        match model {
            "drf" => Ok((&self.drf, &self.drf_leaves)),
            "rf" => Ok((&self.rf, &self.rf_leaves)),
            other => Err(JsError::new(&format!("unknown model {other:?}; use \"drf\" or \"rf\""))),
        }
    }
}

#[wasm_bindgen]
impl Demo {
    /// Simulates `n` points and fits both forests.
    #[wasm_bindgen(constructor)]
    pub fn new(n: u32, trees: u32, min_leaf: u32, seed: u32) -> Result<Demo, JsError> {
        let spec = SimulationSpec {
            p: 2,
            ..SimulationSpec::new(Simulation::Sim1, n as usize, seed as u64)
        };
        let data = eval::generate(&spec).map_err(err)?.data;
        let fit = |mode| {
            let params = ForestParams {
                tree: TreeParams {
                    n_min: min_leaf as usize,
                    mode,
                    ..TreeParams::default()
                },
                n_trees: trees as usize,
                seed: seed as u64,
            };
            Forest::fit(&data, &params)
        };
        let drf = fit(SplitMode::Sdr).map_err(err)?;
        let rf = fit(SplitMode::AxisOnly).map_err(err)?;
        let drf_leaves = drf.leaf_matrix(&data).map_err(err)?;
        let rf_leaves = rf.leaf_matrix(&data).map_err(err)?;
        Ok(Demo {
            data,
            drf,
            rf,
            drf_leaves,
            rf_leaves,
        })
    }

    /// Covariate box half-width; points lie in [-extent, extent]².
    pub fn extent() -> f64 {
        BOX
    }

    /// Training covariates, interleaved `x1, x2, x1, x2, …`.
    pub fn points(&self) -> Vec<f64> {
        self.data.x().to_vec()
    }

    pub fn responses(&self) -> Vec<f64> {
        self.data.y().to_vec()
    }

    /// Kernel weight of every training point with respect to the query.
    pub fn kernel_weights(&self, model: &str, x1: f64, x2: f64) -> Result<Vec<f64>, JsError> {
        let (forest, leaves) = self.pick(model)?;
        let q = forest.leaf_ids(&[x1, x2]).map_err(err)?;
        Ok(kernel_from_leaves(&q, leaves))
    }

    /// `[d1, d2, min_eigenvalue, ambiguous]` at the query.
    pub fn lsvi(&self, model: &str, x1: f64, x2: f64) -> Result<Vec<f64>, JsError> {
        let w = self.kernel_weights(model, x1, x2)?;
        let li = lsvi::lsvi_from_weights(&self.data, &w, &[x1, x2]).map_err(err)?;
        Ok(vec![
            li.direction[0],
            li.direction[1],
            li.min_eigenvalue,
            f64::from(u8::from(li.ambiguous)),
        ])
    }

    /// Predictions on a `res`×`res` grid over the box, row by row from the top (x2 = +extent).
    pub fn predict_grid(&self, model: &str, res: u32) -> Result<Vec<f64>, JsError> {
        let (forest, _) = self.pick(model)?;
        grid(res, |x| forest.predict(x).map_err(err))
    }

    /// The noiseless regression function on the same grid.
    pub fn truth_grid(res: u32) -> Result<Vec<f64>, JsError> {
        grid(res, |x| Ok(Simulation::Sim1.mean(x)))
    }
}

fn grid(res: u32, mut f: impl FnMut(&[f64]) -> Result<f64, JsError>) -> Result<Vec<f64>, JsError> {
    let res = res.max(2) as usize;
    let step = 2.0 * BOX / (res - 1) as f64;
    let mut out = Vec::with_capacity(res * res);
    for r in 0..res {
        let x2 = BOX - r as f64 * step;
        for c in 0..res {
            out.push(f(&[-BOX + c as f64 * step, x2])?);
        }
    }
    Ok(out)
}
