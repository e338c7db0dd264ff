//! Dimension reduction trees.
//!
//! A node screens its features by their best axis-aligned split, estimates the
//! leading SIR and SAVE directions on the screened features, and splits on whichever
//! projection gives the lower child sum of squared errors. Nodes too small for the
//! inverse-regression estimators, or where they break down, split axis-aligned.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::sdr::{self, DEFAULT_SLICES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// SIR/SAVE oblique splits with axis-aligned fallback.
    Sdr,
    /// Plain CART: axis-aligned splits only.
    AxisOnly,
}

/// A screening size given either literally or relative to the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MTry {
    Fixed(usize),
    /// ⌈p/3⌉
    Third,
    /// ⌈√p⌉
    Sqrt,
    All,
}

impl MTry {
    /// Resolved count, clamped to `1..=p`.
    pub fn resolve(self, p: usize) -> usize {
        let m = match self {
            MTry::Fixed(m) => m,
            MTry::Third => p.div_ceil(3),
            MTry::Sqrt => (p as f64).sqrt().ceil() as usize,
            MTry::All => p,
        };
        m.clamp(1, p.max(1))
    }
}

impl std::fmt::Display for MTry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MTry::Fixed(m) => write!(f, "{m}"),
            MTry::Third => f.write_str("third"),
            MTry::Sqrt => f.write_str("sqrt"),
            MTry::All => f.write_str("all"),
        }
    }
}

impl std::str::FromStr for MTry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(MTry::All),
            "sqrt" => Ok(MTry::Sqrt),
            "third" => Ok(MTry::Third),
            other => match other.parse::<usize>() {
                Ok(m) if m >= 1 => Ok(MTry::Fixed(m)),
                _ => Err(Error::InvalidParam(format!(
                    "m_try must be a positive integer, all, sqrt or third; got {s:?}"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Nodes with fewer samples than this become leaves.
    pub n_min: usize,
    /// Number of screened features per node; values above `p` mean all features.
    pub m_try: usize,
    pub n_slices: usize,
    pub mode: SplitMode,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            n_min: 5,
            m_try: usize::MAX,
            n_slices: DEFAULT_SLICES,
            mode: SplitMode::Sdr,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 {
            return Err(Error::InvalidParam("n_min must be at least 1".into()));
        }
        if self.m_try == 0 {
            return Err(Error::InvalidParam("m_try must be at least 1".into()));
        }
        if self.n_slices < 2 {
            return Err(Error::InvalidParam("slice count must be at least 2".into()));
        }
        Ok(())
    }

    fn min_split_size(&self) -> usize {
        self.n_min.max(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitRule {
    Axis { feature: usize, threshold: f64 },
    /// `direction` is a dense unit p-vector.
    Oblique { direction: Vec<f64>, threshold: f64 },
}

impl SplitRule {
    #[inline]
    pub fn project(&self, x: &[f64]) -> f64 {
        match self {
            SplitRule::Axis { feature, .. } => x[*feature],
            SplitRule::Oblique { direction, .. } => linalg::dot(direction, x),
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            SplitRule::Axis { threshold, .. } | SplitRule::Oblique { threshold, .. } => *threshold,
        }
    }

    #[inline]
    pub fn goes_left(&self, x: &[f64]) -> bool {
        self.project(x) <= self.threshold()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split { rule: SplitRule, left: u32, right: u32 },
    Leaf { value: f64, leaf_id: u32, count: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    n_leaves: usize,
    p: usize,
    params: TreeParams,
}

impl Tree {
    /// Reassembles a tree, checking child indices, leaf ids and direction norms.
    pub fn from_parts(nodes: Vec<Node>, p: usize, params: TreeParams) -> Result<Self> {
        let corrupt = |m: String| Err(Error::CorruptModel(m));
        if nodes.is_empty() {
            return corrupt("tree has no nodes".into());
        }
        let mut leaf_seen = vec![];
        let mut referenced = vec![false; nodes.len()];
        for (k, node) in nodes.iter().enumerate() {
            match node {
                Node::Split { rule, left, right } => {
                    for &c in [left, right] {
                        let c = c as usize;
                        if c <= k || c >= nodes.len() || referenced[c] {
                            return corrupt(format!("node {k} has invalid child {c}"));
                        }
                        referenced[c] = true;
                    }
                    match rule {
                        SplitRule::Axis { feature, threshold } => {
                            if *feature >= p || !threshold.is_finite() {
                                return corrupt(format!("node {k} has invalid axis rule"));
                            }
                        }
                        SplitRule::Oblique { direction, threshold } => {
                            if direction.len() != p
                                || !threshold.is_finite()
                                || (linalg::norm(direction) - 1.0).abs() > 1e-9
                            {
                                return corrupt(format!("node {k} has invalid oblique rule"));
                            }
                        }
                    }
                }
                Node::Leaf { value, leaf_id, .. } => {
                    if !value.is_finite() {
                        return corrupt(format!("leaf {k} has non-finite value"));
                    }
                    leaf_seen.push(*leaf_id as usize);
                }
            }
        }
        if referenced[0] || referenced.iter().skip(1).any(|r| !r) {
            return corrupt("nodes do not form a single tree".into());
        }
        let n_leaves = leaf_seen.len();
        leaf_seen.sort_unstable();
        if leaf_seen.iter().enumerate().any(|(i, &id)| i != id) {
            return corrupt("leaf ids are not dense".into());
        }
        Ok(Self {
            nodes,
            n_leaves,
            p,
            params,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    /// Leaf id and leaf mean for a point already known to have length `p`.
    #[inline]
    pub fn leaf(&self, x: &[f64]) -> (usize, f64) {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Split { rule, left, right } => {
                    k = if rule.goes_left(x) { *left } else { *right } as usize;
                }
                Node::Leaf { value, leaf_id, .. } => return (*leaf_id as usize, *value),
            }
        }
    }

    pub fn route(&self, x: &[f64]) -> Result<(usize, f64)> {
        if x.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: x.len(),
            });
        }
        Ok(self.leaf(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.route(x).map(|(_, v)| v)
    }
}

/// Best threshold on a single projected feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split1d {
    pub threshold: f64,
    /// Σ(y−ȳ_L)² + Σ(y−ȳ_R)².
    pub sse: f64,
    pub n_left: usize,
    /// Σ(y−ȳ)² of the unsplit node.
    pub node_sse: f64,
}

/// Relative SSE difference below which two candidate splits count as tied.
const TIE_TOL: f64 = 1e-10;

impl Split1d {
    /// `Less` if `self` has clearly lower SSE than `other`, `Equal` on a tie.
    ///
    /// Running sums accumulate in a different order for each projection, so the same
    /// partition reached through two features can differ in the last bits.
    fn cmp_sse(&self, other: &Split1d) -> std::cmp::Ordering {
        let tol = TIE_TOL * self.node_sse.max(other.node_sse);
        if self.sse < other.sse - tol {
            std::cmp::Ordering::Less
        } else if self.sse > other.sse + tol {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    }

    /// Lower SSE wins, then the smaller threshold.
    fn beats(&self, other: &Split1d) -> Option<bool> {
        match self.cmp_sse(other).then(self.threshold.total_cmp(&other.threshold)) {
            std::cmp::Ordering::Less => Some(true),
            std::cmp::Ordering::Greater => Some(false),
            std::cmp::Ordering::Equal => None,
        }
    }
}

/// Reusable buffers for split searches.
#[derive(Default)]
pub(crate) struct Scratch {
    pairs: Vec<(f64, f64)>,
}

impl Scratch {
    fn best_split(&mut self, mut fill: impl FnMut(&mut Vec<(f64, f64)>)) -> Option<Split1d> {
        self.pairs.clear();
        fill(&mut self.pairs);
        self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        scan_sorted(&self.pairs)
    }
}

/// One pass over (value, response) pairs sorted by value, using running sums of the
/// node-centered response. Thresholds are the distinct values except the largest;
/// ties in SSE (see [`TIE_TOL`]) go to the smaller threshold.
fn scan_sorted(pairs: &[(f64, f64)]) -> Option<Split1d> {
    let m = pairs.len();
    if m < 2 || pairs[0].0 == pairs[m - 1].0 {
        return None;
    }
    let mean = pairs.iter().map(|p| p.1).sum::<f64>() / m as f64;
    let mut total = 0.0;
    let mut total_sq = 0.0;
    for &(_, y) in pairs {
        let c = y - mean;
        total += c;
        total_sq += c * c;
    }
    let mut left = 0.0;
    let mut best: Option<Split1d> = None;
    for i in 0..m - 1 {
        left += pairs[i].1 - mean;
        if pairs[i].0 < pairs[i + 1].0 {
            let n_left = i + 1;
            let n_right = m - n_left;
            let right = total - left;
            let sse = total_sq - left * left / n_left as f64 - right * right / n_right as f64;
            let cand = Split1d {
                threshold: pairs[i].0,
                sse,
                n_left,
                node_sse: total_sq,
            };
            if best.is_none_or(|b| cand.cmp_sse(&b).is_lt()) {
                best = Some(cand);
            }
        }
    }
    best.map(|b| Split1d {
        sse: b.sse.max(0.0),
        ..b
    })
}

/// Minimizes the two-child sum of squared errors over thresholds on `values`.
pub fn best_split_1d(values: &[f64], y: &[f64]) -> Result<Split1d> {
    if values.len() != y.len() {
        return Err(Error::LengthMismatch(values.len(), y.len()));
    }
    let mut scratch = Scratch::default();
    scratch
        .best_split(|buf| buf.extend(values.iter().copied().zip(y.iter().copied())))
        .ok_or(Error::NoValidSplit)
}

fn axis_splits(data: &Dataset, idx: &[usize], scratch: &mut Scratch) -> Vec<Option<Split1d>> {
    let y = data.y();
    (0..data.p())
        .map(|j| scratch.best_split(|buf| buf.extend(idx.iter().map(|&i| (data.get(i, j), y[i])))))
        .collect()
}

/// Features ranked by their best axis-aligned SSE (unsplittable features last, ties
/// to the lower index), truncated to `m_try`.
fn rank_features(axis: &[Option<Split1d>], m_try: usize) -> Vec<usize> {
    let key = |j: usize| axis[j].map_or(f64::INFINITY, |s| s.sse);
    let mut order: Vec<usize> = (0..axis.len()).collect();
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    order.truncate(m_try.min(axis.len()));
    order
}

/// The `m_try` features whose best axis-aligned split has the lowest SSE within the node.
pub fn screen_features(data: &Dataset, idx: &[usize], m_try: usize) -> Vec<usize> {
    if m_try >= data.p() {
        return (0..data.p()).collect();
    }
    let axis = axis_splits(data, idx, &mut Scratch::default());
    rank_features(&axis, m_try)
}

fn best_axis_rule(axis: &[Option<Split1d>], features: &[usize]) -> Option<SplitRule> {
    let mut best: Option<(usize, Split1d)> = None;
    for &j in features {
        let Some(s) = axis[j] else { continue };
        let better = match best {
            None => true,
            Some((bj, b)) => s.beats(&b).unwrap_or(j < bj),
        };
        if better {
            best = Some((j, s));
        }
    }
    best.map(|(feature, s)| SplitRule::Axis {
        feature,
        threshold: s.threshold,
    })
}

/// Leading SIR and SAVE directions on the screened features, embedded as p-vectors.
fn sdr_directions(data: &Dataset, idx: &[usize], features: &[usize], n_slices: usize) -> Option<[Vec<f64>; 2]> {
    let y_node: Vec<f64> = idx.iter().map(|&i| data.y()[i]).collect();
    let x_node = DMatrix::from_fn(idx.len(), features.len(), |r, c| data.get(idx[r], features[c]));
    let (sir, save) = sdr::fit_sir_save(&x_node, &y_node, n_slices).ok()?;
    let embed = |res: &sdr::SdrResult| {
        let mut d = vec![0.0; data.p()];
        for (c, &j) in features.iter().enumerate() {
            d[j] = res.directions[(c, 0)];
        }
        linalg::canonicalize(&mut d).then_some(d)
    };
    Some([embed(&sir)?, embed(&save)?])
}

fn is_constant(values: impl Iterator<Item = f64>) -> bool {
    let mut first = None;
    for v in values {
        match first {
            None => first = Some(v),
            Some(f) if f != v => return false,
            _ => {}
        }
    }
    true
}

pub(crate) fn find_split_with(
    data: &Dataset,
    idx: &[usize],
    params: &TreeParams,
    scratch: &mut Scratch,
) -> Option<SplitRule> {
    let m = idx.len();
    let p = data.p();
    if m < 2 || is_constant(idx.iter().map(|&i| data.y()[i])) {
        return None;
    }
    let use_sdr = params.mode == SplitMode::Sdr && m >= p.max(2 * params.n_slices);
    let screen_all = params.m_try >= p;

    let mut axis = None;
    let features: Vec<usize> = if screen_all {
        (0..p).collect()
    } else {
        let a = axis_splits(data, idx, scratch);
        let f = rank_features(&a, params.m_try);
        axis = Some(a);
        f
    };

    if use_sdr {
        if let Some(directions) = sdr_directions(data, idx, &features, params.n_slices) {
            let y = data.y();
            let mut best: Option<(Split1d, usize)> = None;
            for (k, d) in directions.iter().enumerate() {
                let s = scratch.best_split(|buf| {
                    buf.extend(idx.iter().map(|&i| (linalg::dot(d, data.row(i)), y[i])))
                });
                if let Some(s) = s {
                    if best.is_none_or(|(b, _)| s.beats(&b) == Some(true)) {
                        best = Some((s, k));
                    }
                }
            }
            if let Some((s, k)) = best {
                let [sir, save] = directions;
                return Some(SplitRule::Oblique {
                    direction: if k == 0 { sir } else { save },
                    threshold: s.threshold,
                });
            }
        }
    }

    let axis = axis.unwrap_or_else(|| axis_splits(data, idx, scratch));
    best_axis_rule(&axis, &features)
}

/// Split rule for the node holding samples `idx`, or `None` if no split is possible.
pub fn find_split(data: &Dataset, idx: &[usize], params: &TreeParams) -> Option<SplitRule> {
    find_split_with(data, idx, params, &mut Scratch::default())
}

/// Grows a tree on the samples `idx` (repeats allowed, as in a bootstrap resample).
pub fn fit_tree(data: &Dataset, idx: &[usize], params: &TreeParams) -> Tree {
    let mut work: Vec<usize> = idx.to_vec();
    let mut spill: Vec<usize> = Vec::with_capacity(work.len());
    let mut scratch = Scratch::default();
    let mut nodes: Vec<Option<Node>> = vec![None];
    let mut n_leaves = 0u32;
    let mut stack = vec![(0usize, 0usize, work.len())];

    while let Some((slot, start, end)) = stack.pop() {
        let size = end - start;
        let rule = if size >= params.min_split_size() {
            find_split_with(data, &work[start..end], params, &mut scratch)
        } else {
            None
        };
        match rule {
            Some(rule) => {
                // Stable partition keeps the original sample order inside each child.
                spill.clear();
                let mut write = start;
                for r in start..end {
                    let i = work[r];
                    if rule.goes_left(data.row(i)) {
                        work[write] = i;
                        write += 1;
                    } else {
                        spill.push(i);
                    }
                }
                work[write..end].copy_from_slice(&spill);
                debug_assert!(write > start && write < end);
                let left = nodes.len();
                nodes.push(None);
                nodes.push(None);
                nodes[slot] = Some(Node::Split {
                    rule,
                    left: left as u32,
                    right: left as u32 + 1,
                });
                stack.push((left + 1, write, end));
                stack.push((left, start, write));
            }
            None => {
                let sum: f64 = work[start..end].iter().map(|&i| data.y()[i]).sum();
                let value = if size == 0 { 0.0 } else { sum / size as f64 };
                nodes[slot] = Some(Node::Leaf {
                    value,
                    leaf_id: n_leaves,
                    count: size as u32,
                });
                n_leaves += 1;
            }
        }
    }

    Tree {
        nodes: nodes.into_iter().map(|n| n.expect("every slot is filled")).collect(),
        n_leaves: n_leaves as usize,
        p: data.p(),
        params: *params,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mtry_resolution() {
        assert_eq!("third".parse::<MTry>().unwrap().resolve(10), 4);
        assert_eq!("sqrt".parse::<MTry>().unwrap().resolve(10), 4);
        assert_eq!("all".parse::<MTry>().unwrap().resolve(7), 7);
        assert_eq!("6".parse::<MTry>().unwrap().resolve(5), 5);
        assert!("0".parse::<MTry>().is_err());
        assert!("half".parse::<MTry>().is_err());
    }
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_separation() {
        let s = best_split_1d(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0, 10.0, 10.0]).unwrap();
        assert_eq!(s.threshold, 2.0);
        assert_eq!(s.sse, 0.0);
        assert_eq!(s.n_left, 2);
    }

    #[test]
    fn tie_goes_to_smaller_threshold() {
        let s = best_split_1d(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.threshold, 1.0);
        assert_abs_diff_eq!(s.sse, 0.5, epsilon = 1e-12);
        assert_eq!(s.n_left, 1);
    }

    #[test]
    fn constant_projection_has_no_split() {
        assert!(matches!(best_split_1d(&[5.0, 5.0, 5.0], &[1.0, 2.0, 3.0]), Err(Error::NoValidSplit)));
    }

    #[test]
    fn threshold_is_never_the_maximum() {
        let s = best_split_1d(&[3.0, 1.0, 2.0, 3.0], &[9.0, 0.0, 0.0, 10.0]).unwrap();
        assert_eq!(s.threshold, 2.0);
        assert_eq!(s.n_left, 2);
    }

    fn toy(rows: &[[f64; 3]], y: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Dataset::from_rows(&rows, y.to_vec()).unwrap()
    }

    #[test]
    fn screening_finds_informative_feature() {
        let rows: Vec<[f64; 3]> = (0..12)
            .map(|i| [i as f64, ((i * 5) % 7) as f64, ((i * 3) % 5) as f64])
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let d = toy(&rows, &y);
        let idx: Vec<usize> = (0..12).collect();
        assert_eq!(screen_features(&d, &idx, 1), vec![0]);
        assert_eq!(screen_features(&d, &idx, 3), vec![0, 1, 2]);
    }

    #[test]
    fn screening_tie_prefers_lower_index() {
        let rows: Vec<[f64; 3]> = (0..10).map(|i| [((i * 7) % 3) as f64, i as f64, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { 0.0 } else { 1.0 }).collect();
        let d = toy(&rows, &y);
        let idx: Vec<usize> = (0..10).collect();
        assert_eq!(screen_features(&d, &idx, 1), vec![1]);
    }

    #[test]
    fn constant_response_gives_single_leaf() {
        let rows: Vec<[f64; 3]> = (0..20).map(|i| [i as f64, (i % 3) as f64, 1.0]).collect();
        let d = toy(&rows, &[4.25; 20]);
        let idx: Vec<usize> = (0..20).collect();
        assert!(find_split(&d, &idx, &TreeParams::default()).is_none());
        let t = fit_tree(&d, &idx, &TreeParams::default());
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.route(&[100.0, 0.0, 0.0]).unwrap(), (0, 4.25));
    }

    #[test]
    fn large_n_min_gives_mean_leaf() {
        let rows: Vec<[f64; 3]> = (0..6).map(|i| [i as f64, 0.0, 1.0]).collect();
        let d = toy(&rows, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let params = TreeParams {
            n_min: 7,
            ..TreeParams::default()
        };
        let t = fit_tree(&d, &(0..6).collect::<Vec<_>>(), &params);
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.route(&[0.0, 0.0, 0.0]).unwrap(), (0, 3.5));
    }

    #[test]
    fn boundary_routes_left_and_dimension_checked() {
        let tree = Tree::from_parts(
            vec![
                Node::Split {
                    rule: SplitRule::Axis {
                        feature: 0,
                        threshold: 1.0,
                    },
                    left: 1,
                    right: 2,
                },
                Node::Leaf {
                    value: -1.0,
                    leaf_id: 0,
                    count: 1,
                },
                Node::Leaf {
                    value: 1.0,
                    leaf_id: 1,
                    count: 1,
                },
            ],
            2,
            TreeParams::default(),
        )
        .unwrap();
        assert_eq!(tree.route(&[1.0, 5.0]).unwrap(), (0, -1.0));
        assert_eq!(tree.route(&[1.0000001, 5.0]).unwrap(), (1, 1.0));
        assert!(matches!(tree.route(&[1.0]), Err(Error::DimensionMismatch { expected: 2, found: 1 })));
    }

    #[test]
    fn from_parts_rejects_bad_trees() {
        let leaf = |id| Node::Leaf {
            value: 0.0,
            leaf_id: id,
            count: 1,
        };
        let split = |l, r| Node::Split {
            rule: SplitRule::Oblique {
                direction: vec![0.6, 0.8],
                threshold: 0.0,
            },
            left: l,
            right: r,
        };
        assert!(Tree::from_parts(vec![split(1, 2), leaf(0), leaf(1)], 2, TreeParams::default()).is_ok());
        assert!(Tree::from_parts(vec![split(1, 3), leaf(0), leaf(1)], 2, TreeParams::default()).is_err());
        assert!(Tree::from_parts(vec![split(1, 2), leaf(0), leaf(5)], 2, TreeParams::default()).is_err());
        let bad_norm = Node::Split {
            rule: SplitRule::Oblique {
                direction: vec![1.0, 1.0],
                threshold: 0.0,
            },
            left: 1,
            right: 2,
        };
        assert!(Tree::from_parts(vec![bad_norm, leaf(0), leaf(1)], 2, TreeParams::default()).is_err());
    }
}
