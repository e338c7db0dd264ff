//! Small dense linear algebra used by the inverse-regression estimators:
//! QR whitening, back-substitution and sorted symmetric eigendecompositions.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance on `|R_jj|` below which the design is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Whitened design from a thin QR of the centered data.
///
/// `z = sqrt(n) * Q`, so `zᵀz = n·I` and `x = z·r/sqrt(n) + 1·meanᵀ`.
/// `r` has a positive diagonal.
#[derive(Debug, Clone)]
pub struct WhitenedData {
    pub z: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub mean: DVector<f64>,
}

pub fn whiten(x: &DMatrix<f64>) -> Result<WhitenedData> {
    let (n, p) = x.shape();
    if n < 2 || n < p {
        return Err(Error::TooFewSamples {
            needed: p.max(2),
            got: n,
        });
    }
    let mean = x.row_mean().transpose();
    let mut u = x.clone();
    for (j, mut col) in u.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }

    let qr = u.qr();
    let mut r = qr.r();
    let mut q = qr.q();

    let max_diag = r.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for j in 0..p {
        let d = r[(j, j)];
        if !(d.abs() > RANK_TOL * max_diag) {
            return Err(Error::RankDeficient(j));
        }
        if d < 0.0 {
            r.row_mut(j).neg_mut();
            q.column_mut(j).neg_mut();
        }
    }
    q *= (n as f64).sqrt();
    Ok(WhitenedData { z: q, r, mean })
}

/// Solves `upper · X = rhs` for upper-triangular `upper`.
pub fn back_substitute(upper: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let p = upper.nrows();
    let mut out = rhs.clone();
    for c in 0..rhs.ncols() {
        for i in (0..p).rev() {
            let mut s = out[(i, c)];
            for k in i + 1..p {
                s -= upper[(i, k)] * out[(k, c)];
            }
            out[(i, c)] = s / upper[(i, i)];
        }
    }
    out
}

/// Eigenpairs of a symmetric matrix, eigenvalues nonincreasing.
/// Ties keep the solver's order so the result is deterministic.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |i, c| eig.eigenvectors[(i, order[c])]);
    (values, vectors)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales to unit norm and flips the sign so the largest-magnitude loading is positive.
/// Returns `false` for a zero vector.
pub fn canonicalize(v: &mut [f64]) -> bool {
    let nrm = norm(v);
    if !(nrm > 0.0) || !nrm.is_finite() {
        return false;
    }
    let mut k = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[k].abs() {
            k = i;
        }
    }
    let s = if v[k] < 0.0 { -nrm } else { nrm };
    v.iter_mut().for_each(|x| *x /= s);
    true
}
