use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense regression dataset: `n` rows of `p` covariates (row-major) and a response per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    n: usize,
    p: usize,
}

impl Dataset {
    /// Builds a dataset from row-major covariates. Rejects empty or non-finite input.
    pub fn new(x: Vec<f64>, y: Vec<f64>, p: usize) -> Result<Self> {
        let n = y.len();
        if n == 0 || p == 0 {
            return Err(Error::EmptyDataset);
        }
        if x.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                found: x.len(),
            });
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput {
                row: k / p,
                col: k % p,
            });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { row: i, col: p });
        }
        Ok(Self { x, y, n, p })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bad.len(),
            });
        }
        Self::new(rows.concat(), y, p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.p + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.p)
    }

    /// Rows selected by index (repeats allowed).
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            x.extend_from_slice(self.row(i));
        }
        Dataset {
            x,
            y: idx.iter().map(|&i| self.y[i]).collect(),
            n: idx.len(),
            p: self.p,
        }
    }

    /// Replaces the covariates with `p_new` columns computed row by row.
    pub fn map_rows(&self, p_new: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Dataset {
        let mut x = vec![0.0; self.n * p_new];
        for (src, dst) in self.rows().zip(x.chunks_exact_mut(p_new)) {
            f(src, dst);
        }
        Dataset {
            x,
            y: self.y.clone(),
            n: self.n,
            p: p_new,
        }
    }

    /// FNV-1a over the bit patterns of every covariate and response.
    pub fn fingerprint(&self) -> Fingerprint {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        for v in self.x.iter().chain(self.y.iter()) {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        }
        Fingerprint {
            n: self.n,
            p: self.p,
            checksum: format!("{h:016x}"),
        }
    }
}

/// Identifies the training set a forest was fitted on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub n: usize,
    pub p: usize,
    pub checksum: String,
}

/// Per-column centering and scaling applied before fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Population mean and standard deviation of each column; `Err(j)` if column `j` is constant.
    pub fn fit(data: &Dataset) -> std::result::Result<Self, usize> {
        let n = data.n() as f64;
        let mut mean = vec![0.0; data.p()];
        for row in data.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; data.p()];
        for row in data.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
        if let Some(j) = (0..scale.len()).find(|&j| scale[j] <= 1e-12 * (1.0 + mean[j].abs())) {
            return Err(j);
        }
        Ok(Self { mean, scale })
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (row[j] - self.mean[j]) / self.scale[j];
        }
    }

    pub fn apply(&self, data: &Dataset) -> Dataset {
        data.map_rows(data.p(), |r, o| self.apply_row(r, o))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(matches!(
            Dataset::new(vec![1.0, 2.0, 3.0], vec![0.0, 1.0], 2),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Dataset::new(vec![1.0, f64::NAN], vec![0.0], 2),
            Err(Error::NonFiniteInput { row: 0, col: 1 })
        ));
        assert!(matches!(Dataset::new(vec![], vec![], 2), Err(Error::EmptyDataset)));
    }

    #[test]
    fn subset_repeats_rows() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], vec![5.0, 6.0]).unwrap();
        let s = d.subset(&[1, 1, 0]);
        assert_eq!(s.x(), &[3.0, 4.0, 3.0, 4.0, 1.0, 2.0]);
        assert_eq!(s.y(), &[6.0, 6.0, 5.0]);
    }

    #[test]
    fn fingerprint_sees_single_bit_changes() {
        let a = Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![0.0, 0.0]).unwrap();
        let b = Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![0.0, -0.0]).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
    }
}
