//! Independent reference implementations shared by the integration tests.
//!
//! Each oracle is written directly from the defining formula, without reusing the
//! library's fast paths (no QR whitening, no running-sum split scan, no leaf-id tables).

#![allow(dead_code)]

use drforest::tree::{Node, SplitRule, Tree};
use drforest::Dataset;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_rows(rng: &mut impl Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..p).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// |cos| between two vectors.
pub fn abs_cos(u: &[f64], v: &[f64]) -> f64 {
    let d: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (d / (nu * nv)).abs()
}

/// Slice membership for responses without ties: sort, then cut into `h` contiguous
/// groups whose sizes differ by at most one (larger groups first).
fn oracle_slices(y: &[f64], h: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap());
    let (base, extra) = (y.len() / h, y.len() % h);
    let mut out = Vec::new();
    let mut start = 0;
    for k in 0..h {
        let len = base + usize::from(k < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Whitened inverse-regression moments evaluated from their definitions:
/// Σ̂ = (1/n)Σ(x−x̄)(x−x̄)ᵀ, z = L⁻¹(x−x̄) with Σ̂ = LLᵀ (Cholesky, positive diagonal),
/// Λ_SIR = Σ_k (n_k/n) z̄_k z̄_kᵀ and Λ_SAVE = Σ_k (n_k/n)(I − Var_k(z))².
/// Requires distinct responses.
pub fn moment_oracle(rows: &[Vec<f64>], y: &[f64], h: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = rows.len();
    let p = rows[0].len();
    let nf = n as f64;
    let mean: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let mut sigma = vec![vec![0.0; p]; p];
    for r in rows {
        for a in 0..p {
            for b in 0..p {
                sigma[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]) / nf;
            }
        }
    }
    // Cholesky–Banachiewicz.
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][j] = (sigma[i][i] - s).sqrt();
            } else {
                l[i][j] = (sigma[i][j] - s) / l[j][j];
            }
        }
    }
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut out = vec![0.0; p];
            for i in 0..p {
                let s: f64 = (0..i).map(|k| l[i][k] * out[k]).sum();
                out[i] = (r[i] - mean[i] - s) / l[i][i];
            }
            out
        })
        .collect();

    let mut sir = DMatrix::zeros(p, p);
    let mut save = DMatrix::zeros(p, p);
    for slice in oracle_slices(y, h) {
        let nk = slice.len() as f64;
        let zbar: Vec<f64> = (0..p).map(|j| slice.iter().map(|&i| z[i][j]).sum::<f64>() / nk).collect();
        let mut v = DMatrix::zeros(p, p);
        for &i in &slice {
            for a in 0..p {
                for b in 0..p {
                    v[(a, b)] += (z[i][a] - zbar[a]) * (z[i][b] - zbar[b]) / nk;
                }
            }
        }
        for a in 0..p {
            for b in 0..p {
                sir[(a, b)] += nk / nf * zbar[a] * zbar[b];
            }
        }
        let d = DMatrix::identity(p, p) - v;
        save += (&d * &d) * (nk / nf);
    }
    (sir, save)
}

/// Reference CART regression tree, built recursively from the textbook definition.
pub enum CartNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<CartNode>,
        right: Box<CartNode>,
    },
}

fn sse(ys: &[f64]) -> f64 {
    if ys.is_empty() {
        return 0.0;
    }
    let m = ys.iter().sum::<f64>() / ys.len() as f64;
    ys.iter().map(|y| (y - m) * (y - m)).sum()
}

/// Grows a CART tree on the samples `idx` (order matters only for the leaf sums).
/// Nodes of fewer than max(2, n_min) samples, or with constant response, are leaves.
/// Among all (feature, threshold) pairs, the lowest SSE wins, then the smallest
/// threshold, then the lowest feature.
pub fn naive_cart(data: &Dataset, idx: &[usize], n_min: usize) -> CartNode {
    let y: Vec<f64> = idx.iter().map(|&i| data.y()[i]).collect();
    let leaf = || CartNode::Leaf(y.iter().sum::<f64>() / y.len() as f64);
    if idx.len() < n_min.max(2) || y.iter().all(|&v| v == y[0]) {
        return leaf();
    }
    let mut best: Option<(f64, f64, usize)> = None;
    for j in 0..data.p() {
        let mut values: Vec<f64> = idx.iter().map(|&i| data.get(i, j)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for &c in &values[..values.len() - 1] {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| data.get(i, j) <= c);
            let ly: Vec<f64> = l.iter().map(|&i| data.y()[i]).collect();
            let ry: Vec<f64> = r.iter().map(|&i| data.y()[i]).collect();
            let s = sse(&ly) + sse(&ry);
            let better = match best {
                None => true,
                Some((bs, bc, bj)) => s < bs || (s == bs && (c < bc || (c == bc && j < bj))),
            };
            if better {
                best = Some((s, c, j));
            }
        }
    }
    match best {
        None => leaf(),
        Some((_, threshold, feature)) => {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| data.get(i, feature) <= threshold);
            CartNode::Split {
                feature,
                threshold,
                left: Box::new(naive_cart(data, &l, n_min)),
                right: Box::new(naive_cart(data, &r, n_min)),
            }
        }
    }
}

pub fn cart_predict(node: &CartNode, x: &[f64]) -> f64 {
    match node {
        CartNode::Leaf(v) => *v,
        CartNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if x[*feature] <= *threshold {
                cart_predict(left, x)
            } else {
                cart_predict(right, x)
            }
        }
    }
}

/// Index of the node array entry `x` lands in, found by walking the stored nodes.
pub fn walk(tree: &Tree, x: &[f64]) -> usize {
    let mut k = 0;
    loop {
        match &tree.nodes()[k] {
            Node::Leaf { .. } => return k,
            Node::Split { rule, left, right } => {
                let v = match rule {
                    SplitRule::Axis { feature, .. } => x[*feature],
                    SplitRule::Oblique { direction, .. } => direction.iter().zip(x).map(|(a, b)| a * b).sum(),
                };
                k = if v <= rule.threshold() { *left } else { *right } as usize;
            }
        }
    }
}

/// Fraction of trees in which `a` and `b` reach the same node, by direct traversal.
pub fn brute_kernel(trees: &[Tree], a: &[f64], b: &[f64]) -> f64 {
    let shared = trees.iter().filter(|t| walk(t, a) == walk(t, b)).count();
    shared as f64 / trees.len() as f64
}

/// Local subspace direction computed step by step from the algorithm statement.
pub fn lsvi_oracle(rows: &[Vec<f64>], w: &[f64], x0: &[f64]) -> (Vec<f64>, f64) {
    let p = x0.len();
    let total: f64 = w.iter().sum();
    let centered: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(x0).map(|(a, b)| a - b).collect()).collect();
    let mu: Vec<f64> = (0..p)
        .map(|j| centered.iter().zip(w).map(|(r, wi)| wi * r[j]).sum::<f64>() / total)
        .collect();
    let mut cov = DMatrix::zeros(p, p);
    for (r, wi) in centered.iter().zip(w) {
        let d = DMatrix::from_fn(p, 1, |j, _| r[j] - mu[j]);
        cov += (&d * d.transpose()) * *wi;
    }
    cov /= total;
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imin();
    (eig.eigenvectors.column(k).iter().copied().collect(), eig.eigenvalues[k])
}

pub fn dataset(rows: &[Vec<f64>], y: Vec<f64>) -> Dataset {
    Dataset::from_rows(rows, y).unwrap()
}
