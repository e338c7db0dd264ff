//! Versioned JSON model files.
//!
//! Numbers are written as shortest round-trip decimals, so a loaded forest predicts
//! bit-for-bit what the saved one did. Field order is fixed, which makes the output of
//! [`to_bytes`] canonical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Fingerprint, Standardization};
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestParams};
use crate::tree::{Node, SplitMode, SplitRule, Tree, TreeParams};

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "drforest-model";

/// A fitted forest plus what is needed to apply it to raw input columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub forest: Forest,
    pub feature_names: Vec<String>,
    pub target: String,
    /// Applied to raw covariates before they reach the forest.
    pub standardization: Option<Standardization>,
}

impl Model {
    /// Covariates as the forest sees them.
    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        match &self.standardization {
            Some(s) => {
                let mut out = vec![0.0; row.len()];
                s.apply_row(row, &mut out);
                out
            }
            None => row.to_vec(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    n_trees: usize,
    seed: u64,
    n_min: usize,
    m_try: usize,
    n_slices: usize,
    mode: SplitMode,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum NodeDoc {
    Axis {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Oblique {
        direction: Vec<f64>,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
        leaf_id: u32,
        count: u32,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    format_version: u32,
    p: usize,
    feature_names: Vec<String>,
    target: String,
    params: ParamsDoc,
    fingerprint: Fingerprint,
    standardization: Option<Standardization>,
    trees: Vec<Vec<NodeDoc>>,
    inbag: Vec<Vec<u32>>,
}

fn node_doc(node: &Node) -> NodeDoc {
    match node {
        Node::Split { rule, left, right } => match rule {
            SplitRule::Axis { feature, threshold } => NodeDoc::Axis {
                feature: *feature,
                threshold: *threshold,
                left: *left,
                right: *right,
            },
            SplitRule::Oblique { direction, threshold } => NodeDoc::Oblique {
                direction: direction.clone(),
                threshold: *threshold,
                left: *left,
                right: *right,
            },
        },
        Node::Leaf { value, leaf_id, count } => NodeDoc::Leaf {
            value: *value,
            leaf_id: *leaf_id,
            count: *count,
        },
    }
}

fn node_from_doc(doc: NodeDoc) -> Node {
    match doc {
        NodeDoc::Axis {
            feature,
            threshold,
            left,
            right,
        } => Node::Split {
            rule: SplitRule::Axis { feature, threshold },
            left,
            right,
        },
        NodeDoc::Oblique {
            direction,
            threshold,
            left,
            right,
        } => Node::Split {
            rule: SplitRule::Oblique { direction, threshold },
            left,
            right,
        },
        NodeDoc::Leaf { value, leaf_id, count } => Node::Leaf { value, leaf_id, count },
    }
}

/// Serializes a model; equal models give equal bytes.
pub fn to_bytes(model: &Model) -> Result<Vec<u8>> {
    let f = &model.forest;
    let fp = f.params();
    let doc = ModelDoc {
        format: FORMAT_NAME.into(),
        format_version: FORMAT_VERSION,
        p: f.p(),
        feature_names: model.feature_names.clone(),
        target: model.target.clone(),
        params: ParamsDoc {
            n_trees: fp.n_trees,
            seed: fp.seed,
            n_min: fp.tree.n_min,
            m_try: fp.tree.m_try,
            n_slices: fp.tree.n_slices,
            mode: fp.tree.mode,
        },
        fingerprint: f.fingerprint().clone(),
        standardization: model.standardization.clone(),
        trees: f.trees().iter().map(|t| t.nodes().iter().map(node_doc).collect()).collect(),
        inbag: f.inbag().to_vec(),
    };
    let mut bytes = serde_json::to_vec(&doc).map_err(|e| Error::CorruptModel(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Parses and validates a model document.
pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| Error::CorruptModel(format!("not a model document: {e}")))?;
    match value.get("format").and_then(|v| v.as_str()) {
        Some(FORMAT_NAME) => {}
        _ => return Err(Error::CorruptModel("missing format tag".into())),
    }
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::CorruptModel("format_version".into()))?;
    if version != FORMAT_VERSION as u64 {
        return Err(Error::VersionMismatch {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            supported: FORMAT_VERSION,
        });
    }
    let doc: ModelDoc = serde_json::from_value(value).map_err(|e| Error::CorruptModel(e.to_string()))?;
    if doc.feature_names.len() != doc.p {
        return Err(Error::CorruptModel("feature_names".into()));
    }
    if doc.fingerprint.p != doc.p {
        return Err(Error::CorruptModel("fingerprint".into()));
    }
    if let Some(s) = &doc.standardization {
        if s.mean.len() != doc.p
            || s.scale.len() != doc.p
            || s.scale.iter().any(|v| !(*v > 0.0) || !v.is_finite())
            || s.mean.iter().any(|v| !v.is_finite())
        {
            return Err(Error::CorruptModel("standardization".into()));
        }
    }
    let tree_params = TreeParams {
        n_min: doc.params.n_min,
        m_try: doc.params.m_try,
        n_slices: doc.params.n_slices,
        mode: doc.params.mode,
    };
    tree_params
        .validate()
        .map_err(|e| Error::CorruptModel(format!("params: {e}")))?;
    let trees = doc
        .trees
        .into_iter()
        .map(|nodes| Tree::from_parts(nodes.into_iter().map(node_from_doc).collect(), doc.p, tree_params))
        .collect::<Result<Vec<_>>>()?;
    let params = ForestParams {
        tree: tree_params,
        n_trees: doc.params.n_trees,
        seed: doc.params.seed,
    };
    let forest = Forest::from_parts(trees, doc.inbag, params, doc.p, doc.fingerprint)?;
    Ok(Model {
        forest,
        feature_names: doc.feature_names,
        target: doc.target,
        standardization: doc.standardization,
    })
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_bytes(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    from_bytes(&std::fs::read(path)?)
}
