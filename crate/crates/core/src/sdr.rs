//! Sliced inverse regression (SIR) and sliced average variance estimation (SAVE).
//!
//! Both estimators whiten the design with a thin QR, slice the samples by response,
//! build a p×p moment matrix in whitened coordinates and map its eigenvectors back
//! to the original coordinates by back-substitution against `sqrt(n)·R`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, WhitenedData};

pub const DEFAULT_SLICES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdrMethod {
    Sir,
    Save,
}

impl std::fmt::Display for SdrMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SdrMethod::Sir => "SIR",
            SdrMethod::Save => "SAVE",
        })
    }
}

/// Slice membership of each sample (original order) and the size of each slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceAssignment {
    pub slice_of: Vec<usize>,
    pub counts: Vec<usize>,
}

impl SliceAssignment {
    pub fn n_slices(&self) -> usize {
        self.counts.len()
    }
}

/// Number of slices actually used for a node of `n` samples: every slice needs two samples.
pub fn effective_slices(n: usize, n_slices: usize) -> usize {
    if n < 2 * n_slices {
        (n / 2).max(2)
    } else {
        n_slices
    }
}

/// Contiguous, near-equal slices over the samples sorted by response.
///
/// Runs of tied responses never straddle a boundary: a boundary landing inside a run
/// moves right past it, and slices left empty by such moves are dropped.
pub fn make_slices(y: &[f64], n_slices: usize) -> SliceAssignment {
    let n = y.len();
    let h = n_slices.max(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));

    let base = n / h;
    let extra = n % h;
    let mut slice_of = vec![0; n];
    let mut counts = Vec::with_capacity(h);
    let mut start = 0;
    let mut nominal_end = 0;
    for s in 0..h {
        nominal_end += base + usize::from(s < extra);
        if nominal_end <= start {
            continue;
        }
        let mut end = nominal_end;
        while end < n && y[order[end]] == y[order[end - 1]] {
            end += 1;
        }
        let id = counts.len();
        for &i in &order[start..end] {
            slice_of[i] = id;
        }
        counts.push(end - start);
        start = end;
    }
    SliceAssignment { slice_of, counts }
}

/// Output of SIR or SAVE.
#[derive(Debug, Clone)]
pub struct SdrResult {
    /// p×k, unit-norm columns in original coordinates, ordered by eigenvalue.
    pub directions: DMatrix<f64>,
    /// Nonincreasing, clamped at zero.
    pub eigenvalues: Vec<f64>,
    pub method: SdrMethod,
    pub n_slices: usize,
    /// The p×p moment matrix (Λ) in whitened coordinates.
    pub moment: DMatrix<f64>,
}

impl SdrResult {
    pub fn leading_direction(&self) -> Vec<f64> {
        self.directions.column(0).iter().copied().collect()
    }

    /// Projects row-major covariates (length p rows) onto all k directions.
    pub fn project_row(&self, row: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = linalg::dot(self.directions.column(c).as_slice(), row);
        }
    }

    pub fn k(&self) -> usize {
        self.directions.ncols()
    }
}

/// Whitened design and slices shared by both estimators.
struct Prepared {
    w: WhitenedData,
    slices: SliceAssignment,
    means: DMatrix<f64>,
}

fn prepare(x: &DMatrix<f64>, y: &[f64], n_slices: usize) -> Result<Prepared> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::LengthMismatch(n, y.len()));
    }
    if n_slices < 2 {
        return Err(Error::InvalidParam(format!("slice count must be at least 2, got {n_slices}")));
    }
    let w = linalg::whiten(x)?;
    let slices = make_slices(y, effective_slices(n, n_slices));
    let h = slices.n_slices();
    if h < 2 {
        return Err(Error::DegenerateSlices(h));
    }
    let mut means = DMatrix::zeros(h, p);
    for j in 0..p {
        let col = w.z.column(j);
        for (i, &k) in slices.slice_of.iter().enumerate() {
            means[(k, j)] += col[i];
        }
    }
    for (k, &c) in slices.counts.iter().enumerate() {
        means.row_mut(k).scale_mut(1.0 / c as f64);
    }
    Ok(Prepared { w, slices, means })
}

/// Λ_SIR = Σ_k (n_k/n) m_k m_kᵀ with m_k the whitened slice means (the overall whitened mean is 0).
fn sir_moment(prep: &Prepared) -> DMatrix<f64> {
    let p = prep.means.ncols();
    let n = prep.slices.slice_of.len() as f64;
    let mut lam = DMatrix::zeros(p, p);
    for (k, &c) in prep.slices.counts.iter().enumerate() {
        let wt = c as f64 / n;
        for a in 0..p {
            for b in 0..p {
                lam[(a, b)] += wt * prep.means[(k, a)] * prep.means[(k, b)];
            }
        }
    }
    lam
}

/// Λ_SAVE = Σ_k (n_k/n) (I − V_k)², V_k the slice covariance of the whitened data.
fn save_moment(prep: &Prepared) -> DMatrix<f64> {
    let p = prep.means.ncols();
    let n = prep.slices.slice_of.len();
    let h = prep.slices.n_slices();
    let mut covs = vec![DMatrix::<f64>::zeros(p, p); h];
    let mut centered = vec![0.0; p];
    for i in 0..n {
        let k = prep.slices.slice_of[i];
        for (j, c) in centered.iter_mut().enumerate() {
            *c = prep.w.z[(i, j)] - prep.means[(k, j)];
        }
        let cov = &mut covs[k];
        for a in 0..p {
            let ca = centered[a];
            for b in a..p {
                cov[(a, b)] += ca * centered[b];
            }
        }
    }
    let mut lam = DMatrix::zeros(p, p);
    for (k, mut cov) in covs.into_iter().enumerate() {
        let c = prep.slices.counts[k] as f64;
        for a in 0..p {
            for b in a..p {
                let v = cov[(a, b)] / c;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        let d = DMatrix::identity(p, p) - cov;
        lam += (&d * &d) * (c / n as f64);
    }
    lam
}

fn finish(prep: &Prepared, moment: DMatrix<f64>, method: SdrMethod, k: usize) -> SdrResult {
    let (values, vectors) = linalg::sym_eigen_desc(&moment);
    let n = prep.slices.slice_of.len() as f64;
    let scaled_r = &prep.w.r * n.sqrt();
    let gamma = vectors.columns(0, k).into_owned();
    let mut directions = linalg::back_substitute(&scaled_r, &gamma);
    for mut col in directions.column_iter_mut() {
        let mut v: Vec<f64> = col.iter().copied().collect();
        linalg::canonicalize(&mut v);
        col.copy_from_slice(&v);
    }
    SdrResult {
        directions,
        eigenvalues: values[..k].iter().map(|v| v.max(0.0)).collect(),
        method,
        n_slices: prep.slices.n_slices(),
        moment,
    }
}

fn sir_from(prep: &Prepared) -> SdrResult {
    let p = prep.means.ncols();
    // Λ_SIR has rank at most (slices − 1).
    let k = p.min(prep.slices.n_slices() - 1).max(1);
    finish(prep, sir_moment(prep), SdrMethod::Sir, k)
}

fn save_from(prep: &Prepared) -> SdrResult {
    let p = prep.means.ncols();
    finish(prep, save_moment(prep), SdrMethod::Save, p)
}

/// Sliced inverse regression on an n×p design.
pub fn fit_sir(x: &DMatrix<f64>, y: &[f64], n_slices: usize) -> Result<SdrResult> {
    Ok(sir_from(&prepare(x, y, n_slices)?))
}

/// Sliced average variance estimation on an n×p design.
pub fn fit_save(x: &DMatrix<f64>, y: &[f64], n_slices: usize) -> Result<SdrResult> {
    Ok(save_from(&prepare(x, y, n_slices)?))
}

pub fn fit(method: SdrMethod, x: &DMatrix<f64>, y: &[f64], n_slices: usize) -> Result<SdrResult> {
    match method {
        SdrMethod::Sir => fit_sir(x, y, n_slices),
        SdrMethod::Save => fit_save(x, y, n_slices),
    }
}

/// SIR and SAVE sharing one whitening and slicing pass.
pub fn fit_sir_save(x: &DMatrix<f64>, y: &[f64], n_slices: usize) -> Result<(SdrResult, SdrResult)> {
    let prep = prepare(x, y, n_slices)?;
    Ok((sir_from(&prep), save_from(&prep)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sizes(s: &SliceAssignment) -> Vec<usize> {
        s.counts.clone()
    }

    #[test]
    fn even_split() {
        let s = make_slices(&[1.0, 2.0, 3.0, 4.0], 2);
        assert_eq!(s.slice_of, vec![0, 0, 1, 1]);
    }

    #[test]
    fn ties_stay_together() {
        let s = make_slices(&[1.0, 1.0, 1.0, 2.0], 2);
        assert_eq!(sizes(&s), vec![3, 1]);
        assert_eq!(s.slice_of, vec![0, 0, 0, 1]);
    }

    #[test]
    fn descending_responses() {
        let s = make_slices(&[5.0, 4.0, 3.0, 2.0, 1.0, 0.0], 3);
        assert_eq!(sizes(&s), vec![2, 2, 2]);
        assert_eq!(s.slice_of, vec![2, 2, 1, 1, 0, 0]);
    }

    #[test]
    fn constant_response_is_one_slice() {
        let s = make_slices(&[3.0; 7], 3);
        assert_eq!(sizes(&s), vec![7]);
    }

    #[test]
    fn uneven_sizes_differ_by_one() {
        let y: Vec<f64> = (0..23).map(f64::from).collect();
        let s = make_slices(&y, 5);
        assert_eq!(s.counts.iter().sum::<usize>(), 23);
        let (lo, hi) = (s.counts.iter().min().unwrap(), s.counts.iter().max().unwrap());
        assert!(hi - lo <= 1);
    }

    #[test]
    fn slice_count_reduction() {
        assert_eq!(effective_slices(100, 10), 10);
        assert_eq!(effective_slices(19, 10), 9);
        assert_eq!(effective_slices(3, 10), 2);
    }

    #[test]
    fn constant_response_is_degenerate() {
        let x = DMatrix::from_fn(20, 2, |i, j| ((i * 3 + j * 5) % 7) as f64 + i as f64 * 0.01);
        let y = vec![1.5; 20];
        assert!(matches!(fit_save(&x, &y, 5), Err(Error::DegenerateSlices(1))));
        assert!(matches!(fit_sir(&x, &y, 5), Err(Error::DegenerateSlices(1))));
    }
}
