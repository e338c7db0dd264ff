use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Fingerprint};
use crate::error::{Error, Result};
use crate::par;
use crate::tree::{self, Tree, TreeParams};

pub const DEFAULT_TREES: usize = 500;
pub const DEFAULT_IMPORTANCE_REPEATS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub tree: TreeParams,
    pub n_trees: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            tree: TreeParams::default(),
            n_trees: DEFAULT_TREES,
            seed: 0,
        }
    }
}

/// The RNG stream for tree `index`: ChaCha8 keyed by the forest seed, stream = tree index.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Bootstrap multiplicities: `n` draws with replacement.
pub fn bootstrap_counts(n: usize, rng: &mut impl Rng) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    counts
}

fn expand(counts: &[u32]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
        .collect()
}

/// A bagged ensemble of dimension reduction trees. Immutable once fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    inbag: Vec<Vec<u32>>,
    params: ForestParams,
    p: usize,
    fingerprint: Fingerprint,
}

impl Forest {
    /// Fits `params.n_trees` trees, each on its own bootstrap resample. Trees are grown in
    /// parallel when the `parallel` feature is on; the result does not depend on the
    /// number of worker threads.
    pub fn fit(data: &Dataset, params: &ForestParams) -> Result<Self> {
        params.tree.validate()?;
        if params.n_trees == 0 {
            return Err(Error::InvalidParam("number of trees must be at least 1".into()));
        }
        if data.n() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: data.n() });
        }
        let n = data.n();
        let fitted = par::map_indexed(params.n_trees, |m| {
            let mut rng = tree_rng(params.seed, m);
            let counts = bootstrap_counts(n, &mut rng);
            let tree = tree::fit_tree(data, &expand(&counts), &params.tree);
            (tree, counts)
        });
        let (trees, inbag) = fitted.into_iter().unzip();
        Ok(Self {
            trees,
            inbag,
            params: *params,
            p: data.p(),
            fingerprint: data.fingerprint(),
        })
    }

    /// Reassembles a forest from stored parts (used by the model loader).
    pub fn from_parts(
        trees: Vec<Tree>,
        inbag: Vec<Vec<u32>>,
        params: ForestParams,
        p: usize,
        fingerprint: Fingerprint,
    ) -> Result<Self> {
        if trees.is_empty() || trees.len() != inbag.len() || trees.len() != params.n_trees {
            return Err(Error::CorruptModel("tree and in-bag counts disagree".into()));
        }
        if trees.iter().any(|t| t.p() != p) {
            return Err(Error::CorruptModel("tree dimension differs from forest".into()));
        }
        let n = fingerprint.n;
        if inbag.iter().any(|c| c.len() != n || c.iter().map(|&v| v as usize).sum::<usize>() != n) {
            return Err(Error::CorruptModel("in-bag counts do not sum to n".into()));
        }
        Ok(Self {
            trees,
            inbag,
            params,
            p,
            fingerprint,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn inbag(&self) -> &[Vec<u32>] {
        &self.inbag
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.p {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.p,
                found: x.len(),
            })
        }
    }

    /// Mean of the tree predictions.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.leaf(x).1).sum();
        sum / self.trees.len() as f64
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_dim(data.row(0))?;
        Ok(par::map_indexed(data.n(), |i| self.predict_unchecked(data.row(i))))
    }

    /// Leaf id of `x` in every tree.
    pub fn leaf_ids(&self, x: &[f64]) -> Result<Vec<usize>> {
        self.check_dim(x)?;
        Ok(self.trees.iter().map(|t| t.leaf(x).0).collect())
    }

    /// Leaf ids of every row of `data`, indexed `[row][tree]`.
    pub fn leaf_matrix(&self, data: &Dataset) -> Result<Vec<Vec<usize>>> {
        self.check_dim(data.row(0))?;
        Ok(par::map_indexed(data.n(), |i| {
            self.trees.iter().map(|t| t.leaf(data.row(i)).0).collect()
        }))
    }

    /// Forest kernel weights between `x0` and each row of `points`: the fraction of trees
    /// in which the two share a leaf.
    pub fn kernel(&self, x0: &[f64], points: &Dataset) -> Result<Vec<f64>> {
        let query = self.leaf_ids(x0)?;
        let leaves = self.leaf_matrix(points)?;
        Ok(kernel_from_leaves(&query, &leaves))
    }
}

/// Kernel weights from precomputed leaf ids (`leaves[row][tree]`).
pub fn kernel_from_leaves(query: &[usize], leaves: &[Vec<usize>]) -> Vec<f64> {
    let m = query.len() as f64;
    leaves
        .iter()
        .map(|row| {
            let shared = row.iter().zip(query).filter(|(a, b)| a == b).count();
            shared as f64 / m
        })
        .collect()
}

pub fn fit_forest(data: &Dataset, params: &ForestParams) -> Result<Forest> {
    Forest::fit(data, params)
}

/// Out-of-bag permutation importance: for each feature, the increase in each tree's OOB
/// mean squared error when that feature is permuted among the tree's OOB samples,
/// averaged over trees and `repeats` permutations. Trees without OOB samples are skipped.
pub fn permutation_importance(
    forest: &Forest,
    data: &Dataset,
    rng: &mut impl Rng,
    repeats: usize,
) -> Result<Vec<f64>> {
    if data.p() != forest.p() {
        return Err(Error::DimensionMismatch {
            expected: forest.p(),
            found: data.p(),
        });
    }
    if data.n() != forest.fingerprint().n {
        return Err(Error::LengthMismatch(forest.fingerprint().n, data.n()));
    }
    if repeats == 0 {
        return Err(Error::InvalidParam("repeats must be at least 1".into()));
    }
    let p = data.p();
    // One seed per tree keeps the result independent of scheduling.
    let seeds: Vec<u64> = (0..forest.trees().len()).map(|_| rng.random()).collect();

    let per_tree: Vec<Option<Vec<f64>>> = par::map_indexed(forest.trees().len(), |m| {
        let tree = &forest.trees()[m];
        let oob: Vec<usize> = (0..data.n()).filter(|&i| forest.inbag()[m][i] == 0).collect();
        if oob.is_empty() {
            return None;
        }
        let y = data.y();
        let mse = |pred: &dyn Fn(usize) -> f64| {
            oob.iter()
                .enumerate()
                .map(|(k, &i)| (y[i] - pred(k)).powi(2))
                .sum::<f64>()
                / oob.len() as f64
        };
        let base = mse(&|k| tree.leaf(data.row(oob[k])).1);
        let mut tree_rng = ChaCha8Rng::seed_from_u64(seeds[m]);
        let mut row = vec![0.0; p];
        let mut perm: Vec<usize> = (0..oob.len()).collect();
        let mut out = vec![0.0; p];
        for (j, o) in out.iter_mut().enumerate() {
            for _ in 0..repeats {
                perm.iter_mut().enumerate().for_each(|(k, v)| *v = k);
                perm.shuffle(&mut tree_rng);
                let permuted = oob
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| {
                        row.copy_from_slice(data.row(i));
                        row[j] = data.get(oob[perm[k]], j);
                        (y[i] - tree.leaf(&row).1).powi(2)
                    })
                    .sum::<f64>()
                    / oob.len() as f64;
                *o += permuted - base;
            }
            *o /= repeats as f64;
        }
        Some(out)
    });

    let used: Vec<&Vec<f64>> = per_tree.iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::NoOobSamples);
    }
    let mut imp = vec![0.0; p];
    for v in &used {
        for (a, b) in imp.iter_mut().zip(v.iter()) {
            *a += b;
        }
    }
    imp.iter_mut().for_each(|a| *a /= used.len() as f64);
    Ok(imp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bootstrap_draws_n() {
        let mut rng = tree_rng(3, 7);
        let c = bootstrap_counts(100, &mut rng);
        assert_eq!(c.iter().sum::<u32>(), 100);
        assert_eq!(expand(&c).len(), 100);
    }

    #[test]
    fn tree_streams_differ_and_repeat() {
        let a: u64 = tree_rng(1, 0).random();
        let b: u64 = tree_rng(1, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, tree_rng(1, 0).random::<u64>());
    }

    #[test]
    fn kernel_counts_shared_leaves() {
        let leaves = vec![vec![0, 1], vec![0, 2], vec![3, 2]];
        assert_eq!(kernel_from_leaves(&[0, 2], &leaves), vec![0.5, 1.0, 0.5]);
    }
}
