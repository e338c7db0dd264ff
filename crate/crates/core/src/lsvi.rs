//! Local subspace variable importance (LSVI).
//!
//! At a query point the forest kernel weights the training covariates; after centering
//! at the query, the direction of least weighted variance is the one along which the
//! regression function locally changes most. Only its span is meaningful.

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::linalg;

/// Relative eigen-gap below which the smallest eigenvalue is treated as repeated.
pub const AMBIGUITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalImportance {
    pub query: Vec<f64>,
    /// Unit vector, largest-magnitude loading positive.
    pub direction: Vec<f64>,
    pub min_eigenvalue: f64,
    /// Σ w_i.
    pub weight_mass: f64,
    /// The smallest eigenvalue is repeated (gap < 1e-9·trace); `direction` is then the
    /// first eigenvector of that eigenspace and the span is not identified.
    pub ambiguous: bool,
}

/// Weighted, query-centered covariance of `x` and its smallest eigenvector.
///
/// Weights are normalized internally, so only their ratios matter.
pub fn lsvi_from_weights(x: &Dataset, weights: &[f64], x0: &[f64]) -> Result<LocalImportance> {
    let (n, p) = (x.n(), x.p());
    if weights.len() != n {
        return Err(Error::LengthMismatch(n, weights.len()));
    }
    if x0.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: x0.len(),
        });
    }
    let support = weights.iter().filter(|&&w| w > 0.0).count();
    let mass: f64 = weights.iter().sum();
    if !(mass > 0.0) || support < p + 1 {
        return Err(Error::DegenerateKernel {
            support,
            needed: p + 1,
        });
    }

    let mut mu = vec![0.0; p];
    for (row, &w) in x.rows().zip(weights) {
        if w > 0.0 {
            for j in 0..p {
                mu[j] += w * (row[j] - x0[j]);
            }
        }
    }
    mu.iter_mut().for_each(|m| *m /= mass);

    let mut cov = DMatrix::<f64>::zeros(p, p);
    let mut d = vec![0.0; p];
    for (row, &w) in x.rows().zip(weights) {
        if w > 0.0 {
            for j in 0..p {
                d[j] = row[j] - x0[j] - mu[j];
            }
            for a in 0..p {
                for b in a..p {
                    cov[(a, b)] += w * d[a] * d[b];
                }
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / mass;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }

    let (values, vectors) = linalg::sym_eigen_desc(&cov);
    let last = p - 1;
    let mut direction: Vec<f64> = vectors.column(last).iter().copied().collect();
    linalg::canonicalize(&mut direction);
    let trace: f64 = values.iter().sum();
    let ambiguous = p > 1 && (values[last - 1] - values[last]) < AMBIGUITY_TOL * trace.abs();
    Ok(LocalImportance {
        query: x0.to_vec(),
        direction,
        min_eigenvalue: values[last].max(0.0),
        weight_mass: mass,
        ambiguous,
    })
}

/// LSVI at `x0` using the forest kernel against the training covariates.
pub fn compute_lsvi(forest: &Forest, train: &Dataset, x0: &[f64]) -> Result<LocalImportance> {
    let weights = forest.kernel(x0, train)?;
    lsvi_from_weights(train, &weights, x0)
}

/// LSVI for many queries, sharing the training-set leaf lookup.
pub fn compute_lsvi_batch(forest: &Forest, train: &Dataset, queries: &Dataset) -> Result<Vec<Result<LocalImportance>>> {
    let leaves = forest.leaf_matrix(train)?;
    let query_leaves = forest.leaf_matrix(queries)?;
    Ok(crate::par::map_indexed(queries.n(), |q| {
        let w = crate::forest::kernel_from_leaves(&query_leaves[q], &leaves);
        lsvi_from_weights(train, &w, queries.row(q))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let t = i as f64 / 10.0 - 2.5;
                vec![t, 0.01 * ((i * 7 % 5) as f64 - 2.0)]
            })
            .collect();
        Dataset::from_rows(&rows, vec![0.0; 50]).unwrap()
    }

    #[test]
    fn uniform_weights_pick_short_axis() {
        let d = line_data();
        let r = lsvi_from_weights(&d, &vec![1.0; 50], &[0.0, 0.0]).unwrap();
        assert!(r.direction[1].abs() >= 0.99);
        assert!(!r.ambiguous);
        assert!((linalg::norm(&r.direction) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weight_scale_invariance() {
        let d = line_data();
        let w: Vec<f64> = (0..50).map(|i| ((i % 4) as f64) * 0.25).collect();
        let a = lsvi_from_weights(&d, &w, &[0.3, 0.0]).unwrap();
        let w7: Vec<f64> = w.iter().map(|v| v * 7.0).collect();
        let b = lsvi_from_weights(&d, &w7, &[0.3, 0.0]).unwrap();
        for (x, y) in a.direction.iter().zip(&b.direction) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn insufficient_support() {
        let d = line_data();
        let mut w = vec![0.0; 50];
        w[3] = 1.0;
        w[9] = 0.5;
        assert!(matches!(
            lsvi_from_weights(&d, &w, &[0.0, 0.0]),
            Err(Error::DegenerateKernel { support: 2, needed: 3 })
        ));
        assert!(matches!(
            lsvi_from_weights(&d, &vec![0.0; 50], &[0.0, 0.0]),
            Err(Error::DegenerateKernel { .. })
        ));
    }

    #[test]
    fn isotropic_cloud_is_ambiguous() {
        let rows = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let d = Dataset::from_rows(&rows, vec![0.0; 4]).unwrap();
        let r = lsvi_from_weights(&d, &[1.0; 4], &[0.0, 0.0]).unwrap();
        assert!(r.ambiguous);
    }
}
