//! Comparison methods: Nadaraya-Watson kernel regression, global SDR feature maps and
//! nearest-neighbour ("local") SIR.

use nalgebra::DMatrix;

use crate::data::{Dataset, Standardization};
use crate::error::{Error, Result};
use crate::sdr::{self, SdrMethod, SdrResult};

/// Silverman's rule of thumb for a Gaussian product kernel on standardized data.
pub fn silverman_bandwidth(n: usize, p: usize) -> f64 {
    let pf = p as f64;
    (4.0 / (pf + 2.0)).powf(1.0 / (pf + 4.0)) * (n as f64).powf(-1.0 / (pf + 4.0))
}

/// Gaussian-kernel Nadaraya-Watson regression on per-column standardized covariates.
#[derive(Debug, Clone)]
pub struct NadarayaWatson {
    standardization: Standardization,
    x: Dataset,
    bandwidth: f64,
}

impl NadarayaWatson {
    /// Uses Silverman's bandwidth when `bandwidth` is `None`.
    pub fn fit(train: &Dataset, bandwidth: Option<f64>) -> Result<Self> {
        let standardization = Standardization::fit(train).map_err(|j| Error::ConstantColumn(format!("x{}", j + 1)))?;
        let bandwidth = bandwidth.unwrap_or_else(|| silverman_bandwidth(train.n(), train.p()));
        if !(bandwidth > 0.0) {
            return Err(Error::InvalidParam(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self {
            x: standardization.apply(train),
            standardization,
            bandwidth,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut q = vec![0.0; x.len()];
        self.standardization.apply_row(x, &mut q);
        let d2: Vec<f64> = self
            .x
            .rows()
            .map(|r| r.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum())
            .collect();
        // Shift by the nearest distance so tiny bandwidths do not underflow every weight.
        let dmin = d2.iter().copied().fold(f64::INFINITY, f64::min);
        let scale = 2.0 * self.bandwidth * self.bandwidth;
        let (mut num, mut den) = (0.0, 0.0);
        for (d, y) in d2.iter().zip(self.x.y()) {
            let w = (-(d - dmin) / scale).exp();
            num += w * y;
            den += w;
        }
        num / den
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Vec<f64> {
        crate::par::map_indexed(data.n(), |i| self.predict(data.row(i)))
    }
}

/// Global SIR or SAVE directions used as a fixed linear feature map.
#[derive(Debug, Clone)]
pub struct SdrFeatures {
    pub result: SdrResult,
}

impl SdrFeatures {
    pub fn fit(method: SdrMethod, train: &Dataset, n_slices: usize) -> Result<Self> {
        let x = DMatrix::from_row_slice(train.n(), train.p(), train.x());
        Ok(Self {
            result: sdr::fit(method, &x, train.y(), n_slices)?,
        })
    }

    pub fn transform(&self, data: &Dataset) -> Dataset {
        data.map_rows(self.result.k(), |r, o| self.result.project_row(r, o))
    }
}

/// Indices of the `k` nearest rows to `x0` (Euclidean), ties to the lower index.
pub fn nearest_neighbors(x: &Dataset, x0: &[f64], k: usize) -> Vec<usize> {
    let d2: Vec<f64> = x
        .rows()
        .map(|r| r.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum())
        .collect();
    let mut order: Vec<usize> = (0..x.n()).collect();
    order.sort_by(|&a, &b| d2[a].total_cmp(&d2[b]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Leading SIR direction fitted on the `k` nearest neighbours of `x0`.
pub fn local_sir(x: &Dataset, x0: &[f64], k: usize, n_slices: usize) -> Result<Vec<f64>> {
    if x0.len() != x.p() {
        return Err(Error::DimensionMismatch {
            expected: x.p(),
            found: x0.len(),
        });
    }
    if k < 10.max(x.p()) || k > x.n() {
        return Err(Error::InvalidParam(format!(
            "neighbourhood size must lie in [max(10, p), n] = [{}, {}], got {k}",
            10.max(x.p()),
            x.n()
        )));
    }
    let idx = nearest_neighbors(x, x0, k);
    let local = x.subset(&idx);
    let xm = DMatrix::from_row_slice(local.n(), local.p(), local.x());
    Ok(sdr::fit_sir(&xm, local.y(), n_slices)?.leading_direction())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silverman_formula() {
        let h = silverman_bandwidth(100, 2);
        assert!((h - (4.0f64 / 4.0).powf(1.0 / 6.0) * 100f64.powf(-1.0 / 6.0)).abs() < 1e-15);
    }

    #[test]
    fn tiny_bandwidth_interpolates() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| (i * i) as f64).collect();
        let d = Dataset::from_rows(&rows, y.clone()).unwrap();
        let nw = NadarayaWatson::fit(&d, Some(1e-6)).unwrap();
        for (i, r) in rows.iter().enumerate() {
            assert!((nw.predict(r) - y[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn neighbour_ties_prefer_lower_index() {
        let rows = vec![vec![1.0], vec![-1.0], vec![0.5], vec![1.0]];
        let d = Dataset::from_rows(&rows, vec![0.0; 4]).unwrap();
        assert_eq!(nearest_neighbors(&d, &[0.0], 2), vec![2, 0]);
        assert_eq!(nearest_neighbors(&d, &[0.0], 3), vec![2, 0, 1]);
    }
}
