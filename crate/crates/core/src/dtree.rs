//! C4.5-style decision trees over categorical Pass/Fail datasets.
//!
//! Induction picks, at every node, the attribute maximizing the configured criterion among the
//! *admissible* splits: those producing at least `min_admissible_branches` child subsets of
//! at least `min_leaf` records each and a strictly positive information gain. This admissibility
//! rule stands in for J48's error-based pruning. On the bundled Table-5 style dataset it yields
//! the familiar single-split tree on `Update`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::infotheory::{gain_ratio_at, info_gain_index, EpisodeDataset, LabelCounts};
use crate::{ErrorCode, Outcome};

/// Gains below this are treated as zero.
const GAIN_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DtreeError {
    #[error("cannot build a tree from an empty dataset")]
    EmptyDataset,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("record does not supply attribute {0}")]
    MissingAttribute(String),
    #[error("split would leave the train or test set empty ({train} train / {test} test)")]
    DegenerateSplit { train: usize, test: usize },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidSplit(f64),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
}

impl ErrorCode for DtreeError {
    fn code(&self) -> &'static str {
        match self {
            DtreeError::EmptyDataset => "EMPTY_DATASET",
            DtreeError::InvalidConfig(_) => "INVALID_CONFIG",
            DtreeError::MissingAttribute(_) => "MISSING_ATTRIBUTE",
            DtreeError::DegenerateSplit { .. } => "DEGENERATE_SPLIT",
            DtreeError::InvalidSplit(_) => "INVALID_SPLIT",
            DtreeError::MalformedTree(_) => "MALFORMED_TREE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    InfoGain,
    #[default]
    GainRatio,
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "info_gain" => Ok(Criterion::InfoGain),
            "gain_ratio" => Ok(Criterion::GainRatio),
            other => Err(format!("unknown criterion {other:?} (expected info_gain or gain_ratio)")),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::InfoGain => "info_gain",
            Criterion::GainRatio => "gain_ratio",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub criterion: Criterion,
    pub min_leaf: usize,
    pub min_admissible_branches: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { criterion: Criterion::GainRatio, min_leaf: 2, min_admissible_branches: 2 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), DtreeError> {
        if self.min_leaf < 1 {
            return Err(DtreeError::InvalidConfig("min_leaf must be at least 1".into()));
        }
        if self.min_admissible_branches < 2 {
            return Err(DtreeError::InvalidConfig("min_admissible_branches must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal {
        attribute: String,
        branches: BTreeMap<String, TreeNode>,
        #[serde(rename = "default")]
        default_branch: String,
    },
    Leaf {
        label: Outcome,
        #[serde(with = "counts_pair")]
        counts: LabelCounts,
    },
}

mod counts_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::infotheory::LabelCounts;

    pub fn serialize<S: Serializer>(c: &LabelCounts, s: S) -> Result<S::Ok, S::Error> {
        [c.pass, c.fail].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<LabelCounts, D::Error> {
        let [pass, fail] = <[usize; 2]>::deserialize(d)?;
        Ok(LabelCounts { pass, fail })
    }
}

impl TreeNode {
    pub fn leaf(counts: LabelCounts) -> Self {
        TreeNode::Leaf { label: majority(counts), counts }
    }
}

/// Majority label; ties go to Fail so that an undecided leaf prescribes relearning.
pub fn majority(c: LabelCounts) -> Outcome {
    if c.pass > c.fail {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionTree {
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    /// Parses and structurally validates a serialized tree.
    pub fn from_json(text: &str) -> Result<Self, DtreeError> {
        let tree: DecisionTree = serde_json::from_str(text).map_err(|e| DtreeError::MalformedTree(e.to_string()))?;
        tree.validate()?;
        Ok(tree)
    }

    pub fn validate(&self) -> Result<(), DtreeError> {
        fn walk<'a>(node: &'a TreeNode, used: &mut Vec<&'a str>) -> Result<(), DtreeError> {
            match node {
                TreeNode::Leaf { label, counts } => {
                    if counts.total() > 0 && *label != majority(*counts) {
                        return Err(DtreeError::MalformedTree(format!(
                            "leaf label {label} disagrees with counts [{}, {}]",
                            counts.pass, counts.fail
                        )));
                    }
                    Ok(())
                }
                TreeNode::Internal { attribute, branches, default_branch } => {
                    if branches.len() < 2 {
                        return Err(DtreeError::MalformedTree(format!("{attribute} has fewer than 2 branches")));
                    }
                    if !branches.contains_key(default_branch) {
                        return Err(DtreeError::MalformedTree(format!(
                            "default branch {default_branch} of {attribute} is not a branch"
                        )));
                    }
                    if used.contains(&attribute.as_str()) {
                        return Err(DtreeError::MalformedTree(format!("{attribute} split twice on one path")));
                    }
                    used.push(attribute);
                    for child in branches.values() {
                        walk(child, used)?;
                    }
                    used.pop();
                    Ok(())
                }
            }
        }
        walk(&self.root, &mut Vec::new())
    }

    /// Classifies a record given as `attribute -> feature`.
    pub fn classify(&self, features: &BTreeMap<String, String>) -> Result<Outcome, DtreeError> {
        self.classify_with(|a| features.get(a).map(String::as_str))
    }

    /// Classifies using an arbitrary attribute lookup. Features never seen in training follow the
    /// node's default branch.
    pub fn classify_with<'a>(&self, lookup: impl Fn(&str) -> Option<&'a str>) -> Result<Outcome, DtreeError> {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return Ok(*label),
                TreeNode::Internal { attribute, branches, default_branch } => {
                    let feature = lookup(attribute).ok_or_else(|| DtreeError::MissingAttribute(attribute.clone()))?;
                    node = branches.get(feature).unwrap_or_else(|| &branches[default_branch]);
                }
            }
        }
    }

    /// Sum of the label counts over all leaves.
    pub fn leaf_counts(&self) -> LabelCounts {
        fn walk(node: &TreeNode, acc: &mut LabelCounts) {
            match node {
                TreeNode::Leaf { counts, .. } => {
                    acc.pass += counts.pass;
                    acc.fail += counts.fail;
                }
                TreeNode::Internal { branches, .. } => branches.values().for_each(|c| walk(c, acc)),
            }
        }
        let mut acc = LabelCounts::default();
        walk(&self.root, &mut acc);
        acc
    }

    pub fn depth(&self) -> usize {
        fn walk(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { branches, .. } => 1 + branches.values().map(walk).max().unwrap_or(0),
            }
        }
        walk(&self.root)
    }

    /// Indented, Weka-like text rendering, e.g. `Update = UpdateSelect: Fail (4/1)`.
    pub fn render_text(&self) -> String {
        fn leaf_text(label: Outcome, c: &LabelCounts) -> String {
            let (total, wrong) = match label {
                Outcome::Pass => (c.total(), c.fail),
                Outcome::Fail => (c.total(), c.pass),
            };
            if wrong == 0 {
                format!("{label} ({total})")
            } else {
                format!("{label} ({total}/{wrong})")
            }
        }
        fn walk(node: &TreeNode, depth: usize, out: &mut String) {
            if let TreeNode::Internal { attribute, branches, .. } = node {
                for (feature, child) in branches {
                    let indent = "|   ".repeat(depth);
                    match child {
                        TreeNode::Leaf { label, counts } => {
                            let _ = writeln!(out, "{indent}{attribute} = {feature}: {}", leaf_text(*label, counts));
                        }
                        TreeNode::Internal { .. } => {
                            let _ = writeln!(out, "{indent}{attribute} = {feature}");
                            walk(child, depth + 1, out);
                        }
                    }
                }
            }
        }
        match &self.root {
            TreeNode::Leaf { label, counts } => format!(": {}\n", leaf_text(*label, counts)),
            root => {
                let mut out = String::new();
                walk(root, 0, &mut out);
                out
            }
        }
    }
}

/// Induces a tree from `d`.
pub fn build_tree(d: &EpisodeDataset, cfg: &TrainConfig) -> Result<DecisionTree, DtreeError> {
    cfg.validate()?;
    if d.is_empty() {
        return Err(DtreeError::EmptyDataset);
    }
    let available: Vec<usize> = (0..d.attributes().len()).collect();
    Ok(DecisionTree { root: grow(d, &available, cfg) })
}

fn grow(d: &EpisodeDataset, available: &[usize], cfg: &TrainConfig) -> TreeNode {
    let counts = d.label_counts();
    if counts.is_pure() || available.is_empty() {
        return TreeNode::leaf(counts);
    }

    let mut best: Option<(usize, f64)> = None;
    for &attr in available {
        let parts = d.partition_indices(attr);
        let large = parts.values().filter(|v| v.len() >= cfg.min_leaf).count();
        if large < cfg.min_admissible_branches || info_gain_index(d, attr) <= GAIN_EPSILON {
            continue;
        }
        let score = match cfg.criterion {
            Criterion::InfoGain => info_gain_index(d, attr),
            Criterion::GainRatio => gain_ratio_at(d, attr),
        };
        // Earlier attributes win ties.
        if best.is_none_or(|(_, s)| score > s + GAIN_EPSILON) {
            best = Some((attr, score));
        }
    }
    let Some((attr, _)) = best else {
        return TreeNode::leaf(counts);
    };

    let rest: Vec<usize> = available.iter().copied().filter(|&a| a != attr).collect();
    let parts = d.partition_indices(attr);
    let default_branch = parts
        .iter()
        .fold(None::<(&str, usize)>, |acc, (f, idx)| match acc {
            Some((_, n)) if n >= idx.len() => acc,
            _ => Some((f, idx.len())),
        })
        .map(|(f, _)| f.to_string())
        .expect("admissible split has branches");
    let branches = parts
        .iter()
        .map(|(feature, idx)| (feature.to_string(), grow(&d.subset(idx), &rest, cfg)))
        .collect();
    TreeNode::Internal { attribute: d.attributes()[attr].clone(), branches, default_branch }
}

/// Rows are true labels, columns predicted labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_pass_pred_pass: usize,
    pub true_pass_pred_fail: usize,
    pub true_fail_pred_pass: usize,
    pub true_fail_pred_fail: usize,
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: Outcome, predicted: Outcome) {
        match (truth, predicted) {
            (Outcome::Pass, Outcome::Pass) => self.true_pass_pred_pass += 1,
            (Outcome::Pass, Outcome::Fail) => self.true_pass_pred_fail += 1,
            (Outcome::Fail, Outcome::Pass) => self.true_fail_pred_pass += 1,
            (Outcome::Fail, Outcome::Fail) => self.true_fail_pred_fail += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.correct() + self.incorrect()
    }

    pub fn correct(&self) -> usize {
        self.true_pass_pred_pass + self.true_fail_pred_fail
    }

    pub fn incorrect(&self) -> usize {
        self.true_pass_pred_fail + self.true_fail_pred_pass
    }

    /// `None` for an empty evaluation.
    pub fn accuracy(&self) -> Option<f64> {
        (self.total() > 0).then(|| self.correct() as f64 / self.total() as f64)
    }
}

/// Predicted label of every record of `d`, in record order.
pub fn predict(t: &DecisionTree, d: &EpisodeDataset) -> Result<Vec<Outcome>, DtreeError> {
    let attrs = d.attributes();
    d.records()
        .iter()
        .map(|r| {
            t.classify_with(|a| attrs.iter().position(|x| x == a).map(|i| r.features[i].as_str()))
        })
        .collect()
}

pub fn evaluate(t: &DecisionTree, d: &EpisodeDataset) -> Result<ConfusionMatrix, DtreeError> {
    let mut m = ConfusionMatrix::default();
    for (r, p) in d.records().iter().zip(predict(t, d)?) {
        m.record(r.label, p);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Shuffles record indices with ChaCha8 seeded from `seed` (Fisher-Yates via `rand`'s
/// `SliceRandom::shuffle`), then takes the first `ceil(fraction · n)` records for training.
pub fn split_dataset(d: &EpisodeDataset, s: &SplitSpec) -> Result<(EpisodeDataset, EpisodeDataset), DtreeError> {
    if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
        return Err(DtreeError::InvalidSplit(s.train_fraction));
    }
    let n = d.len();
    // The epsilon keeps e.g. 0.8 * 10 from rounding up to 9.
    let train = ((s.train_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let train = train.min(n);
    if n < 2 || train == 0 || train == n {
        return Err(DtreeError::DegenerateSplit { train, test: n - train });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    indices.shuffle(&mut rng);
    Ok((d.subset(&indices[..train]), d.subset(&indices[train..])))
}
