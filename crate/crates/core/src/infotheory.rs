//! Entropy and information gain over categorical, Pass/Fail-labeled episode datasets.
//!
//! All quantities are in bits (log base 2). A feature whose matching records all share one label
//! has zero weighted entropy: the skill is uniformly mastered (or uniformly missing) there.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{ErrorCode, Outcome};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InfoError {
    #[error("entropy of an empty label set is undefined")]
    EmptyCounts,
    #[error("dataset has no records")]
    EmptyDataset,
    #[error("unknown attribute {0}")]
    UnknownAttribute(String),
    #[error("unknown feature {feature} for attribute {attribute}")]
    UnknownFeature { attribute: String, feature: String },
    #[error("duplicate attribute {0}")]
    DuplicateAttribute(String),
    #[error("record {record} has {got} features, expected {expected}")]
    RaggedRecord { record: usize, expected: usize, got: usize },
    #[error("record {record}: feature {feature} is not in the domain of {attribute}")]
    FeatureOutsideDomain { record: usize, attribute: String, feature: String },
}

impl ErrorCode for InfoError {
    fn code(&self) -> &'static str {
        match self {
            InfoError::EmptyCounts => "EMPTY_COUNTS",
            InfoError::EmptyDataset => "EMPTY_DATASET",
            InfoError::UnknownAttribute(_) => "UNKNOWN_ATTRIBUTE",
            InfoError::UnknownFeature { .. } => "UNKNOWN_FEATURE",
            InfoError::DuplicateAttribute(_) => "DUPLICATE_ATTRIBUTE",
            InfoError::RaggedRecord { .. } => "RAGGED_RECORD",
            InfoError::FeatureOutsideDomain { .. } => "FEATURE_OUTSIDE_DOMAIN",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    pub pass: usize,
    pub fail: usize,
}

impl LabelCounts {
    pub fn new(pass: usize, fail: usize) -> Self {
        LabelCounts { pass, fail }
    }

    pub fn total(&self) -> usize {
        self.pass + self.fail
    }

    pub fn add(&mut self, label: Outcome) {
        match label {
            Outcome::Pass => self.pass += 1,
            Outcome::Fail => self.fail += 1,
        }
    }

    pub fn is_pure(&self) -> bool {
        self.pass == 0 || self.fail == 0
    }

    pub fn from_labels(labels: impl IntoIterator<Item = Outcome>) -> Self {
        let mut c = LabelCounts::default();
        labels.into_iter().for_each(|l| c.add(l));
        c
    }
}

/// One labeled episode; features are aligned with the dataset's attribute order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Episode {
    pub features: Vec<String>,
    pub label: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeDataset {
    attributes: Vec<String>,
    domains: Vec<BTreeSet<String>>,
    records: Vec<Episode>,
}

impl EpisodeDataset {
    /// Builds a dataset whose feature domains are the observed values.
    pub fn new(attributes: Vec<String>, records: Vec<Episode>) -> Result<Self, InfoError> {
        let mut domains = vec![BTreeSet::new(); attributes.len()];
        for r in &records {
            for (d, f) in domains.iter_mut().zip(&r.features) {
                d.insert(f.clone());
            }
        }
        Self::with_domains(attributes, domains, records)
    }

    /// Builds a dataset with explicit feature domains (one set per attribute).
    pub fn with_domains(
        attributes: Vec<String>,
        domains: Vec<BTreeSet<String>>,
        records: Vec<Episode>,
    ) -> Result<Self, InfoError> {
        if records.is_empty() {
            return Err(InfoError::EmptyDataset);
        }
        let mut seen = BTreeSet::new();
        for a in &attributes {
            if !seen.insert(a) {
                return Err(InfoError::DuplicateAttribute(a.clone()));
            }
        }
        assert_eq!(attributes.len(), domains.len(), "one domain per attribute");
        for (i, r) in records.iter().enumerate() {
            if r.features.len() != attributes.len() {
                return Err(InfoError::RaggedRecord { record: i, expected: attributes.len(), got: r.features.len() });
            }
            for ((a, d), f) in attributes.iter().zip(&domains).zip(&r.features) {
                if !d.contains(f) {
                    return Err(InfoError::FeatureOutsideDomain {
                        record: i,
                        attribute: a.clone(),
                        feature: f.clone(),
                    });
                }
            }
        }
        Ok(EpisodeDataset { attributes, domains, records })
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn records(&self) -> &[Episode] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn attribute_index(&self, attribute: &str) -> Result<usize, InfoError> {
        self.attributes
            .iter()
            .position(|a| a == attribute)
            .ok_or_else(|| InfoError::UnknownAttribute(attribute.to_string()))
    }

    /// Declared feature values of an attribute, lexicographically ordered.
    pub fn domain(&self, attribute: &str) -> Result<&BTreeSet<String>, InfoError> {
        Ok(&self.domains[self.attribute_index(attribute)?])
    }

    pub fn label_counts(&self) -> LabelCounts {
        LabelCounts::from_labels(self.records.iter().map(|r| r.label))
    }

    /// The records at `indices`, sharing this dataset's attributes and domains. May be empty.
    pub fn subset(&self, indices: &[usize]) -> EpisodeDataset {
        EpisodeDataset {
            attributes: self.attributes.clone(),
            domains: self.domains.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Feature of `record` for `attribute`, as a map suitable for classification.
    pub fn feature_map(&self, record: usize) -> BTreeMap<String, String> {
        self.attributes.iter().cloned().zip(self.records[record].features.iter().cloned()).collect()
    }

    /// Label counts per observed feature of the attribute at `attr`.
    pub(crate) fn partition(&self, attr: usize) -> BTreeMap<&str, LabelCounts> {
        let mut parts: BTreeMap<&str, LabelCounts> = BTreeMap::new();
        for r in &self.records {
            parts.entry(r.features[attr].as_str()).or_default().add(r.label);
        }
        parts
    }

    /// Record indices grouped by feature of the attribute at `attr`.
    pub(crate) fn partition_indices(&self, attr: usize) -> BTreeMap<&str, Vec<usize>> {
        let mut parts: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            parts.entry(r.features[attr].as_str()).or_default().push(i);
        }
        parts
    }
}

/// Shannon entropy `-Σ p·log₂p` of a binary label distribution, with `0·log₂0 = 0`.
pub fn entropy(c: LabelCounts) -> Result<f64, InfoError> {
    let total = c.total();
    if total == 0 {
        return Err(InfoError::EmptyCounts);
    }
    Ok(entropy_of_sizes(&[c.pass, c.fail]))
}

/// Entropy of a distribution given by raw counts; zero counts contribute nothing.
fn entropy_of_sizes(sizes: &[usize]) -> f64 {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    sizes
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let p = k as f64 / n;
            // Written as p·log₂(1/p) so a pure subset yields +0 rather than -0.
            p * (n / k as f64).log2()
        })
        .sum()
}

fn weighted(c: LabelCounts, total: usize) -> f64 {
    if c.total() == 0 {
        return 0.0;
    }
    c.total() as f64 / total as f64 * entropy_of_sizes(&[c.pass, c.fail])
}

/// `(|S_v| / |S|) · H(S_v)` for the records whose `attribute` equals `feature`; 0 if none match.
pub fn weighted_feature_entropy(d: &EpisodeDataset, attribute: &str, feature: &str) -> Result<f64, InfoError> {
    let attr = d.attribute_index(attribute)?;
    if !d.domains[attr].contains(feature) {
        return Err(InfoError::UnknownFeature { attribute: attribute.to_string(), feature: feature.to_string() });
    }
    let c = LabelCounts::from_labels(d.records.iter().filter(|r| r.features[attr] == feature).map(|r| r.label));
    Ok(weighted(c, d.len()))
}

fn dataset_entropy(d: &EpisodeDataset) -> f64 {
    let c = d.label_counts();
    entropy_of_sizes(&[c.pass, c.fail])
}

fn info_gain_at(d: &EpisodeDataset, attr: usize) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    let children: f64 = d.partition(attr).values().map(|&c| weighted(c, d.len())).sum();
    // Non-negative in exact arithmetic; clamp rounding residue.
    (dataset_entropy(d) - children).max(0.0)
}

fn split_info_at(d: &EpisodeDataset, attr: usize) -> f64 {
    let sizes: Vec<usize> = d.partition(attr).values().map(LabelCounts::total).collect();
    entropy_of_sizes(&sizes)
}

pub(crate) fn gain_ratio_at(d: &EpisodeDataset, attr: usize) -> f64 {
    let split = split_info_at(d, attr);
    if split == 0.0 {
        0.0
    } else {
        info_gain_at(d, attr) / split
    }
}

pub(crate) fn info_gain_index(d: &EpisodeDataset, attr: usize) -> f64 {
    info_gain_at(d, attr)
}

/// `H(S) - Σ_v (|S_v| / |S|) · H(S_v)`.
pub fn info_gain(d: &EpisodeDataset, attribute: &str) -> Result<f64, InfoError> {
    Ok(info_gain_at(d, d.attribute_index(attribute)?))
}

/// Entropy of the partition sizes induced by `attribute`.
pub fn split_info(d: &EpisodeDataset, attribute: &str) -> Result<f64, InfoError> {
    Ok(split_info_at(d, d.attribute_index(attribute)?))
}

/// Information gain over split information; 0 when the split information is 0.
pub fn gain_ratio(d: &EpisodeDataset, attribute: &str) -> Result<f64, InfoError> {
    Ok(gain_ratio_at(d, d.attribute_index(attribute)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntropy {
    pub feature: String,
    pub pass: usize,
    pub fail: usize,
    pub weighted_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeGain {
    pub attribute: String,
    pub info_gain: f64,
    pub split_info: f64,
    pub gain_ratio: f64,
    pub features: Vec<FeatureEntropy>,
}

/// Entropy, gain and per-feature impurity for every attribute of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub records: usize,
    pub pass: usize,
    pub fail: usize,
    pub dataset_entropy: f64,
    pub attributes: Vec<AttributeGain>,
}

impl GainReport {
    pub fn attribute(&self, name: &str) -> Option<&AttributeGain> {
        self.attributes.iter().find(|a| a.attribute == name)
    }

    pub fn feature(&self, attribute: &str, feature: &str) -> Option<&FeatureEntropy> {
        self.attribute(attribute)?.features.iter().find(|f| f.feature == feature)
    }

    /// Features (across all attributes) with zero weighted entropy that match at least one record.
    pub fn zero_impurity_features(&self) -> Vec<&str> {
        self.attributes
            .iter()
            .flat_map(|a| a.features.iter())
            .filter(|f| f.pass + f.fail > 0 && f.weighted_entropy == 0.0)
            .map(|f| f.feature.as_str())
            .collect()
    }

    /// Copy with every real value rounded to `decimals` places, for display.
    pub fn rounded(&self, decimals: i32) -> GainReport {
        let scale = 10f64.powi(decimals);
        let r = |x: f64| (x * scale).round() / scale;
        GainReport {
            dataset_entropy: r(self.dataset_entropy),
            attributes: self
                .attributes
                .iter()
                .map(|a| AttributeGain {
                    attribute: a.attribute.clone(),
                    info_gain: r(a.info_gain),
                    split_info: r(a.split_info),
                    gain_ratio: r(a.gain_ratio),
                    features: a
                        .features
                        .iter()
                        .map(|f| FeatureEntropy { weighted_entropy: r(f.weighted_entropy), ..f.clone() })
                        .collect(),
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// Full report; attributes in declaration order, features lexicographic.
pub fn gain_report(d: &EpisodeDataset) -> GainReport {
    let labels = d.label_counts();
    let attributes = d
        .attributes
        .iter()
        .enumerate()
        .map(|(ai, name)| {
            let parts: HashMap<&str, LabelCounts> = d.partition(ai).into_iter().collect();
            let features = d.domains[ai]
                .iter()
                .map(|f| {
                    let c = parts.get(f.as_str()).copied().unwrap_or_default();
                    FeatureEntropy {
                        feature: f.clone(),
                        pass: c.pass,
                        fail: c.fail,
                        weighted_entropy: weighted(c, d.len()),
                    }
                })
                .collect();
            AttributeGain {
                attribute: name.clone(),
                info_gain: info_gain_at(d, ai),
                split_info: split_info_at(d, ai),
                gain_ratio: gain_ratio_at(d, ai),
                features,
            }
        })
        .collect();
    GainReport {
        records: d.len(),
        pass: labels.pass,
        fail: labels.fail,
        dataset_entropy: dataset_entropy(d),
        attributes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(features: &[&str], label: Outcome) -> Episode {
        Episode { features: features.iter().map(|s| s.to_string()).collect(), label }
    }

    fn tiny() -> EpisodeDataset {
        EpisodeDataset::new(
            vec!["A".into(), "B".into()],
            vec![
                ep(&["a1", "b1"], Outcome::Pass),
                ep(&["a1", "b2"], Outcome::Fail),
                ep(&["a2", "b1"], Outcome::Pass),
                ep(&["a2", "b1"], Outcome::Pass),
            ],
        )
        .unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(LabelCounts::new(6, 3)).unwrap() - 0.918_295_834).abs() < 1e-9);
        assert_eq!(entropy(LabelCounts::new(5, 0)).unwrap(), 0.0);
        assert_eq!(entropy(LabelCounts::new(1, 1)).unwrap(), 1.0);
        assert_eq!(entropy(LabelCounts::new(0, 0)), Err(InfoError::EmptyCounts));
    }

    #[test]
    fn gain_on_tiny_dataset() {
        let d = tiny();
        // H(3,1) = 0.811278; B splits perfectly.
        assert!((info_gain(&d, "B").unwrap() - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert!((weighted_feature_entropy(&d, "A", "a1").unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(weighted_feature_entropy(&d, "A", "a2").unwrap(), 0.0);
        assert_eq!(split_info(&d, "A").unwrap(), 1.0);
    }

    #[test]
    fn unknown_names() {
        let d = tiny();
        assert_eq!(info_gain(&d, "C"), Err(InfoError::UnknownAttribute("C".into())));
        assert!(matches!(weighted_feature_entropy(&d, "A", "zz"), Err(InfoError::UnknownFeature { .. })));
    }

    #[test]
    fn constant_label_dataset_has_zero_gain() {
        let d = EpisodeDataset::new(
            vec!["A".into()],
            vec![ep(&["x"], Outcome::Fail), ep(&["y"], Outcome::Fail)],
        )
        .unwrap();
        assert_eq!(info_gain(&d, "A").unwrap(), 0.0);
        assert_eq!(gain_ratio(&d, "A").unwrap(), 0.0);
    }

    #[test]
    fn single_feature_attribute_has_zero_split_info() {
        let d = EpisodeDataset::new(
            vec!["A".into()],
            vec![ep(&["x"], Outcome::Pass), ep(&["x"], Outcome::Fail)],
        )
        .unwrap();
        assert_eq!(split_info(&d, "A").unwrap(), 0.0);
        assert_eq!(gain_ratio(&d, "A").unwrap(), 0.0);
    }

    #[test]
    fn one_record_report_is_all_zero() {
        let d = EpisodeDataset::new(vec!["A".into()], vec![ep(&["x"], Outcome::Pass)]).unwrap();
        let r = gain_report(&d);
        assert_eq!(r.dataset_entropy, 0.0);
        assert!(r.attributes.iter().all(|a| a.info_gain == 0.0 && a.features.iter().all(|f| f.weighted_entropy == 0.0)));
    }

    #[test]
    fn dataset_validation() {
        assert_eq!(EpisodeDataset::new(vec!["A".into()], vec![]), Err(InfoError::EmptyDataset));
        assert!(matches!(
            EpisodeDataset::new(vec!["A".into(), "B".into()], vec![ep(&["x"], Outcome::Pass)]),
            Err(InfoError::RaggedRecord { .. })
        ));
        assert!(matches!(
            EpisodeDataset::new(vec!["A".into(), "A".into()], vec![ep(&["x", "y"], Outcome::Pass)]),
            Err(InfoError::DuplicateAttribute(_))
        ));
        let domains = vec![BTreeSet::from(["x".to_string()])];
        assert!(matches!(
            EpisodeDataset::with_domains(vec!["A".into()], domains, vec![ep(&["y"], Outcome::Pass)]),
            Err(InfoError::FeatureOutsideDomain { .. })
        ));
    }

    #[test]
    fn rounded_report_keeps_four_decimals() {
        let r = gain_report(&tiny()).rounded(4);
        assert_eq!(r.attribute("B").unwrap().info_gain, 0.8113);
    }
}
