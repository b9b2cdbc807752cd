//! Difference-of-probability recommendation and Bayes fail posteriors.
//!
//! Every quantity here is a small fraction, so all arithmetic is exact ([`BigRational`]);
//! conversion to `f64` happens only when a value is displayed or serialized.
//!
//! The central quantity is the *fail weight* of a performance vector: the maximum expected
//! probability (1, every leaf passed) minus the observed pass proportion. A weight of 0 means
//! the student progresses to the next topic; any positive weight prescribes relearning the
//! failed leaves, weighted by that value.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::graph::{GraphError, KnowledgeGraph, NodeId};
use crate::{ErrorCode, Outcome};

pub const MAX_WEIGHT_TABLE_SIZE: u32 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbabilityError {
    #[error("probability {0} is outside [0, 1]")]
    OutOfRange(String),
    #[error("performance vector is empty")]
    EmptyPerformance,
    #[error("leaf {0} appears more than once in the performance vector")]
    DuplicateLeaf(String),
    #[error("invalid performance string {0:?}: expected only 'P' and 'F'")]
    InvalidPerformanceString(String),
    #[error("performance string has {got} outcomes but {parent} has {expected} leaves")]
    PerformanceLengthMismatch { parent: String, expected: usize, got: usize },
    #[error("leaf {leaf} does not belong to parent {parent}")]
    LeafNotUnderParent { leaf: String, parent: String },
    #[error("all joint weights are zero")]
    AllZeroWeights,
    #[error("joint weight for {0} is negative")]
    NegativeWeight(String),
    #[error("parent {0} appears more than once")]
    DuplicateParent(String),
    #[error("duplicate counts row for ({parent}, {leaf})")]
    DuplicateRow { parent: String, leaf: String },
    #[error("leaf {0} is not present in the counts")]
    UnknownLeaf(String),
    #[error("no failures recorded anywhere; posterior is undefined")]
    ZeroDenominator,
    #[error("weight table size must be between 1 and {MAX_WEIGHT_TABLE_SIZE}, got {0}")]
    InvalidTableSize(u32),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl ErrorCode for ProbabilityError {
    fn code(&self) -> &'static str {
        match self {
            ProbabilityError::OutOfRange(_) => "OUT_OF_RANGE",
            ProbabilityError::EmptyPerformance => "EMPTY_PERFORMANCE",
            ProbabilityError::DuplicateLeaf(_) => "DUPLICATE_LEAF",
            ProbabilityError::InvalidPerformanceString(_) => "INVALID_PERFORMANCE_STRING",
            ProbabilityError::PerformanceLengthMismatch { .. } => "PERFORMANCE_LENGTH_MISMATCH",
            ProbabilityError::LeafNotUnderParent { .. } => "LEAF_NOT_UNDER_PARENT",
            ProbabilityError::AllZeroWeights => "ALL_ZERO_WEIGHTS",
            ProbabilityError::NegativeWeight(_) => "NEGATIVE_WEIGHT",
            ProbabilityError::DuplicateParent(_) => "DUPLICATE_PARENT",
            ProbabilityError::DuplicateRow { .. } => "DUPLICATE_ROW",
            ProbabilityError::UnknownLeaf(_) => "UNKNOWN_LEAF",
            ProbabilityError::ZeroDenominator => "ZERO_DENOMINATOR",
            ProbabilityError::InvalidTableSize(_) => "INVALID_TABLE_SIZE",
            ProbabilityError::Graph(e) => e.code(),
        }
    }
}

/// Builds the exact fraction `num/den`. Panics if `den == 0`.
pub fn ratio(num: u64, den: u64) -> BigRational {
    assert!(den != 0, "zero denominator");
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"3"`, `"2/7"` or a finite decimal such as `"0.125"` into an exact fraction.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let numer: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = BigRational::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// A probability held as an exact fraction in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Probability(BigRational);

impl Probability {
    pub fn new(value: BigRational) -> Result<Self, ProbabilityError> {
        if value.is_negative() || value > BigRational::one() {
            return Err(ProbabilityError::OutOfRange(value.to_string()));
        }
        Ok(Probability(value))
    }

    /// `num/den`; panics unless `0 < den` and `num <= den`.
    pub fn from_ratio(num: u64, den: u64) -> Self {
        assert!(num <= den, "{num}/{den} exceeds 1");
        Probability(ratio(num, den))
    }

    pub fn zero() -> Self {
        Probability(BigRational::zero())
    }

    pub fn one() -> Self {
        Probability(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.0)
    }

    /// `1 - p`.
    pub fn complement(&self) -> Probability {
        Probability(BigRational::one() - &self.0)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Serialized as `{"fraction": "2/3", "value": 0.6666666666666666}`.
impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ExactValue::from(&self.0).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Probability {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = ExactValue::deserialize(deserializer)?;
        let r = parse_rational(&raw.fraction)
            .ok_or_else(|| D::Error::custom(format!("bad fraction {:?}", raw.fraction)))?;
        Probability::new(r).map_err(D::Error::custom)
    }
}

/// Wire form of an exact number: the reduced fraction plus its nearest `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactValue {
    pub fraction: String,
    pub value: f64,
}

impl From<&BigRational> for ExactValue {
    fn from(r: &BigRational) -> Self {
        ExactValue { fraction: r.to_string(), value: rational_to_f64(r) }
    }
}

/// Parses a performance string over `{P, F}`.
pub fn parse_performance_string(text: &str) -> Result<Vec<Outcome>, ProbabilityError> {
    text.chars()
        .map(Outcome::from_char)
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| ProbabilityError::InvalidPerformanceString(text.to_string()))
}

pub fn performance_string(outcomes: impl IntoIterator<Item = Outcome>) -> String {
    outcomes.into_iter().map(Outcome::as_char).collect()
}

/// Ordered Pass/Fail outcomes of one assessment episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(NodeId, Outcome)>", into = "Vec<(NodeId, Outcome)>")]
pub struct PerformanceVector {
    entries: Vec<(NodeId, Outcome)>,
}

impl PerformanceVector {
    pub fn new(entries: Vec<(NodeId, Outcome)>) -> Result<Self, ProbabilityError> {
        if entries.is_empty() {
            return Err(ProbabilityError::EmptyPerformance);
        }
        let mut seen = HashSet::new();
        for (leaf, _) in &entries {
            if !seen.insert(leaf) {
                return Err(ProbabilityError::DuplicateLeaf(leaf.to_string()));
            }
        }
        Ok(PerformanceVector { entries })
    }

    /// Aligns a `PF` string with the declared leaf order of `parent`.
    pub fn from_string(g: &KnowledgeGraph, parent: &str, text: &str) -> Result<Self, ProbabilityError> {
        let leaves = g.leaves_under(parent)?;
        let outcomes = parse_performance_string(text)?;
        if outcomes.len() != leaves.len() {
            return Err(ProbabilityError::PerformanceLengthMismatch {
                parent: parent.to_string(),
                expected: leaves.len(),
                got: outcomes.len(),
            });
        }
        PerformanceVector::new(leaves.into_iter().zip(outcomes).collect())
    }

    pub fn entries(&self) -> &[(NodeId, Outcome)] {
        &self.entries
    }

    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        self.entries.iter().map(|(_, o)| *o)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn passes(&self) -> usize {
        self.outcomes().filter(|o| o.is_pass()).count()
    }

    pub fn fails(&self) -> usize {
        self.len() - self.passes()
    }

    pub fn failed_leaves(&self) -> Vec<NodeId> {
        self.entries.iter().filter(|(_, o)| o.is_fail()).map(|(l, _)| l.clone()).collect()
    }

    pub fn fail_weight(&self) -> Probability {
        fail_weight(self.outcomes()).expect("performance vector is non-empty")
    }

    pub fn pass_weight(&self) -> Probability {
        Probability::from_ratio(self.passes() as u64, self.len() as u64)
    }

    pub fn to_performance_string(&self) -> String {
        performance_string(self.outcomes())
    }
}

impl TryFrom<Vec<(NodeId, Outcome)>> for PerformanceVector {
    type Error = ProbabilityError;

    fn try_from(entries: Vec<(NodeId, Outcome)>) -> Result<Self, Self::Error> {
        PerformanceVector::new(entries)
    }
}

impl From<PerformanceVector> for Vec<(NodeId, Outcome)> {
    fn from(p: PerformanceVector) -> Self {
        p.entries
    }
}

/// `1 - p`.
pub fn complement(p: &Probability) -> Probability {
    p.complement()
}

/// The maximum expected probability (1) minus the pass proportion, i.e. `(n - passes) / n`.
pub fn fail_weight(outcomes: impl IntoIterator<Item = Outcome>) -> Result<Probability, ProbabilityError> {
    let (n, passes) = outcomes
        .into_iter()
        .fold((0u64, 0u64), |(n, p), o| (n + 1, p + u64::from(o.is_pass())));
    if n == 0 {
        return Err(ProbabilityError::EmptyPerformance);
    }
    let max_expected = BigRational::one();
    Probability::new(max_expected - ratio(passes, n))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentWeight {
    pub parent: NodeId,
    pub weight: Probability,
}

/// What a student should do next after a pre-assessment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recommendation {
    /// Every assessed leaf passed. `target` is `None` at the top of the curriculum, in which
    /// case `curriculum_complete` is set.
    Progress { target: Option<NodeId>, curriculum_complete: bool },
    /// Some leaves failed; relearn them. `weight` is in `(0, 1]`.
    Relearn { leaves: Vec<NodeId>, weight: Probability, per_parent: Vec<ParentWeight> },
}

impl Recommendation {
    pub fn progress(target: Option<NodeId>) -> Self {
        let curriculum_complete = target.is_none();
        Recommendation::Progress { target, curriculum_complete }
    }

    pub fn is_progress(&self) -> bool {
        matches!(self, Recommendation::Progress { .. })
    }

    /// Fail weight implied by the recommendation (0 for progress).
    pub fn weight(&self) -> Probability {
        match self {
            Recommendation::Progress { .. } => Probability::zero(),
            Recommendation::Relearn { weight, .. } => weight.clone(),
        }
    }
}

/// Recommendation for a single pre-assessed parent: progress to its next-higher topic when every
/// leaf passed, otherwise relearn the failed leaves.
pub fn recommend(
    g: &KnowledgeGraph,
    parent: &str,
    perf: &PerformanceVector,
) -> Result<Recommendation, ProbabilityError> {
    let parent_id = g
        .parents()
        .find(|p| *p == parent)
        .cloned()
        .ok_or_else(|| GraphError::UnknownNode(parent.to_string()))?;
    for (leaf, _) in perf.entries() {
        if g.parent_of(leaf.as_str()) != Some(&parent_id) {
            return Err(ProbabilityError::LeafNotUnderParent {
                leaf: leaf.to_string(),
                parent: parent.to_string(),
            });
        }
    }
    let weight = perf.fail_weight();
    if weight.is_zero() {
        return Ok(Recommendation::progress(g.next_higher(parent)?));
    }
    Ok(Recommendation::Relearn {
        leaves: perf.failed_leaves(),
        per_parent: vec![ParentWeight { parent: parent_id, weight: weight.clone() }],
        weight,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posterior {
    pub target: NodeId,
    pub posterior: Probability,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosteriorTable {
    pub entries: Vec<Posterior>,
}

impl PosteriorTable {
    pub fn get(&self, target: &str) -> Option<&Probability> {
        self.entries.iter().find(|p| p.target == target).map(|p| &p.posterior)
    }

    pub fn total(&self) -> BigRational {
        self.entries.iter().fold(BigRational::zero(), |acc, p| acc + p.posterior.as_ratio())
    }
}

/// Normalizes joint fail weights: `posterior_j = w_j / Σ w_i`.
pub fn bayes_fail_posterior(joints: &[(NodeId, BigRational)]) -> Result<PosteriorTable, ProbabilityError> {
    if let Some((id, _)) = joints.iter().find(|(_, w)| w.is_negative()) {
        return Err(ProbabilityError::NegativeWeight(id.to_string()));
    }
    let total = joints.iter().fold(BigRational::zero(), |acc, (_, w)| acc + w);
    if total.is_zero() {
        return Err(ProbabilityError::AllZeroWeights);
    }
    let entries = joints
        .iter()
        .map(|(id, w)| Posterior {
            target: id.clone(),
            posterior: Probability::new(w / &total).expect("normalized weight lies in [0, 1]"),
        })
        .collect();
    Ok(PosteriorTable { entries })
}

/// Performance vectors grouped by parent, e.g. `{select: FPPP, delete: FFP}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPerformance {
    groups: Vec<(NodeId, PerformanceVector)>,
}

impl GroupPerformance {
    pub fn new(groups: Vec<(NodeId, PerformanceVector)>) -> Result<Self, ProbabilityError> {
        let mut seen = HashSet::new();
        for (p, _) in &groups {
            if !seen.insert(p) {
                return Err(ProbabilityError::DuplicateParent(p.to_string()));
            }
        }
        Ok(GroupPerformance { groups })
    }

    pub fn groups(&self) -> &[(NodeId, PerformanceVector)] {
        &self.groups
    }

    /// All outcomes of all groups, concatenated in group order.
    pub fn pooled(&self) -> impl Iterator<Item = Outcome> + '_ {
        self.groups.iter().flat_map(|(_, v)| v.outcomes())
    }
}

/// Joint weights under a uniform prior over groups: `(1 / #groups) · (group fails / all outcomes)`.
pub fn uniform_scheme_joints(gp: &GroupPerformance) -> Vec<(NodeId, BigRational)> {
    let groups = gp.groups();
    if groups.is_empty() {
        return Vec::new();
    }
    let prior = ratio(1, groups.len() as u64);
    let total: u64 = groups.iter().map(|(_, v)| v.len() as u64).sum();
    groups
        .iter()
        .map(|(parent, v)| (parent.clone(), &prior * ratio(v.fails() as u64, total)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRow {
    pub parent: NodeId,
    pub leaf: NodeId,
    pub pass: u64,
    pub fail: u64,
}

impl CountRow {
    pub fn total(&self) -> u64 {
        self.pass + self.fail
    }
}

/// Per-leaf pass/fail tallies across a cohort. Totals are always derived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateCounts {
    rows: Vec<CountRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub pass: u64,
    pub fail: u64,
}

impl Tally {
    pub fn total(&self) -> u64 {
        self.pass + self.fail
    }
}

impl AggregateCounts {
    pub fn new(rows: Vec<CountRow>) -> Result<Self, ProbabilityError> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !seen.insert((&r.parent, &r.leaf)) {
                return Err(ProbabilityError::DuplicateRow {
                    parent: r.parent.to_string(),
                    leaf: r.leaf.to_string(),
                });
            }
        }
        Ok(AggregateCounts { rows })
    }

    pub fn rows(&self) -> &[CountRow] {
        &self.rows
    }

    pub fn totals(&self) -> Tally {
        self.rows.iter().fold(Tally::default(), |t, r| Tally { pass: t.pass + r.pass, fail: t.fail + r.fail })
    }

    /// Per-parent tallies in order of first appearance.
    pub fn group_totals(&self) -> Vec<(NodeId, Tally)> {
        let mut order: Vec<(NodeId, Tally)> = Vec::new();
        let mut index: HashMap<&NodeId, usize> = HashMap::new();
        for r in &self.rows {
            let i = *index.entry(&r.parent).or_insert_with(|| {
                order.push((r.parent.clone(), Tally::default()));
                order.len() - 1
            });
            order[i].1.pass += r.pass;
            order[i].1.fail += r.fail;
        }
        order
    }
}

/// How the likelihood terms of the aggregate posterior are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateScheme {
    /// The published arithmetic: the target's likelihood is `leaf fails / group fails`, while each
    /// denominator term uses `group fails / all fails`. Not guaranteed to stay within `[0, 1]`.
    #[default]
    Paper,
    /// Likelihoods are `fails / all fails` throughout, so the posteriors of all leaves form a
    /// partition and sum to 1.
    Consistent,
}

impl std::str::FromStr for AggregateScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(AggregateScheme::Paper),
            "consistent" => Ok(AggregateScheme::Consistent),
            other => Err(format!("unknown scheme {other:?} (expected paper or consistent)")),
        }
    }
}

/// Posterior that `target_leaf` is the failed node, weighting each parent group by its share of
/// all recorded outcomes.
pub fn aggregate_scheme_posterior(
    counts: &AggregateCounts,
    target_leaf: &str,
    scheme: AggregateScheme,
) -> Result<BigRational, ProbabilityError> {
    let target = counts
        .rows()
        .iter()
        .find(|r| r.leaf == target_leaf)
        .ok_or_else(|| ProbabilityError::UnknownLeaf(target_leaf.to_string()))?;
    let grand = counts.totals();
    let groups = counts.group_totals();
    if grand.fail == 0 {
        return Err(ProbabilityError::ZeroDenominator);
    }
    let all_outcomes = grand.total();
    let prior = |t: &Tally| ratio(t.total(), all_outcomes);

    let denominator = groups
        .iter()
        .fold(BigRational::zero(), |acc, (_, t)| acc + prior(t) * ratio(t.fail, grand.fail));

    let target_group = &groups.iter().find(|(p, _)| *p == target.parent).expect("row's parent is grouped").1;
    let likelihood = match scheme {
        AggregateScheme::Paper if target_group.fail == 0 => BigRational::zero(),
        AggregateScheme::Paper => ratio(target.fail, target_group.fail),
        AggregateScheme::Consistent => ratio(target.fail, grand.fail),
    };
    let numerator = prior(target_group) * likelihood;
    Ok(numerator / denominator)
}

/// One row of the pass/fail weight table: for `n` assessed leaves, pair `j` is
/// `((n - j) / n, j / n)`, the pass and fail weights after `j` failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightTableRow {
    pub n: u32,
}

impl WeightTableRow {
    pub fn new(n: u32) -> Result<Self, ProbabilityError> {
        if n == 0 || n > MAX_WEIGHT_TABLE_SIZE {
            return Err(ProbabilityError::InvalidTableSize(n));
        }
        Ok(WeightTableRow { n })
    }

    pub fn len(&self) -> usize {
        self.n as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(pass_weight, fail_weight)` for `j` failures; `None` when `j > n`.
    pub fn pair(&self, j: u32) -> Option<(Probability, Probability)> {
        (j <= self.n).then(|| {
            let n = u64::from(self.n);
            let j = u64::from(j);
            (Probability::from_ratio(n - j, n), Probability::from_ratio(j, n))
        })
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Probability, Probability)> + '_ {
        (0..=self.n).map(|j| self.pair(j).expect("j within row"))
    }
}

/// Rows `1..=n_max` of the weight table. Rows compute their pairs lazily.
pub fn weight_table(n_max: u32) -> Result<Vec<WeightTableRow>, ProbabilityError> {
    WeightTableRow::new(n_max)?;
    Ok((1..=n_max).map(|n| WeightTableRow { n }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_graph;

    fn fixture() -> KnowledgeGraph {
        load_graph(include_str!("../fixtures/sql_ontology.graph.json")).unwrap()
    }

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn fw(s: &str) -> BigRational {
        fail_weight(parse_performance_string(s).unwrap()).unwrap().into_ratio()
    }

    #[test]
    fn complement_examples() {
        assert_eq!(complement(&Probability::zero()), Probability::one());
        assert_eq!(complement(&Probability::one()), Probability::zero());
        assert_eq!(complement(&Probability::from_ratio(3, 4)), Probability::from_ratio(1, 4));
    }

    #[test]
    fn fail_weight_examples() {
        assert_eq!(fw("FPPP"), ratio(1, 4));
        assert_eq!(fw("PFF"), ratio(2, 3));
        assert_eq!(fw("PPPP"), ratio(0, 1));
        assert_eq!(fw("FFF"), ratio(1, 1));
        assert_eq!(fail_weight(Vec::new()), Err(ProbabilityError::EmptyPerformance));
    }

    #[test]
    fn iterative_listing_for_three_objects() {
        // Every 3-vector: weight is (#fails)/3.
        for (s, expected) in [
            ("PPF", 1),
            ("PFP", 1),
            ("FPP", 1),
            ("PFF", 2),
            ("FPF", 2),
            ("FFP", 2),
            ("FFF", 3),
            ("PPP", 0),
        ] {
            assert_eq!(fw(s), ratio(expected, 3), "{s}");
        }
    }

    #[test]
    fn sum_decomposition_of_two_parents() {
        // (1 - 3/4) + (1 - 1/3): the select and delete fail weights taken together.
        let combined = fw("PPPF") + fw("PFF");
        assert_eq!(combined, ratio(11, 12));
        assert_eq!(fw("PPPF"), ratio(1, 4));
        assert_eq!(fw("PFF"), ratio(2, 3));
    }

    #[test]
    fn invalid_performance_string() {
        assert!(matches!(
            parse_performance_string("FPXP"),
            Err(ProbabilityError::InvalidPerformanceString(_))
        ));
    }

    #[test]
    fn recommend_progress_and_relearn() {
        let g = fixture();
        let perf = PerformanceVector::from_string(&g, "delete", "PPP").unwrap();
        assert_eq!(recommend(&g, "delete", &perf).unwrap(), Recommendation::progress(Some(id("update"))));

        let perf = PerformanceVector::from_string(&g, "select", "FPPP").unwrap();
        match recommend(&g, "select", &perf).unwrap() {
            Recommendation::Relearn { leaves, weight, per_parent } => {
                assert_eq!(leaves, vec![id("selectOrderBy")]);
                assert_eq!(weight, Probability::from_ratio(1, 4));
                assert_eq!(per_parent.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }

        let perf = PerformanceVector::from_string(&g, "delete", "PFF").unwrap();
        match recommend(&g, "delete", &perf).unwrap() {
            Recommendation::Relearn { leaves, weight, .. } => {
                assert_eq!(leaves, vec![id("deleteSelect"), id("deleteWhere")]);
                assert_eq!(weight, Probability::from_ratio(2, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn recommend_terminal_parent_completes_curriculum() {
        let g = fixture();
        let perf = PerformanceVector::from_string(&g, "join", "PPP").unwrap();
        assert_eq!(
            recommend(&g, "join", &perf).unwrap(),
            Recommendation::Progress { target: None, curriculum_complete: true }
        );
    }

    #[test]
    fn recommend_rejects_foreign_leaf() {
        let g = fixture();
        let perf = PerformanceVector::new(vec![(id("selectAll"), Outcome::Pass)]).unwrap();
        assert!(matches!(
            recommend(&g, "delete", &perf),
            Err(ProbabilityError::LeafNotUnderParent { .. })
        ));
        assert!(matches!(
            PerformanceVector::from_string(&g, "delete", "PP"),
            Err(ProbabilityError::PerformanceLengthMismatch { expected: 3, got: 2, .. })
        ));
    }

    #[test]
    fn performance_vector_invariants() {
        assert_eq!(PerformanceVector::new(vec![]), Err(ProbabilityError::EmptyPerformance));
        let dup = vec![(id("a"), Outcome::Pass), (id("a"), Outcome::Fail)];
        assert_eq!(PerformanceVector::new(dup), Err(ProbabilityError::DuplicateLeaf("a".into())));
    }

    #[test]
    fn bayes_uniform_scheme_on_two_groups() {
        let g = fixture();
        let gp = GroupPerformance::new(vec![
            (id("select"), PerformanceVector::from_string(&g, "select", "FPPP").unwrap()),
            (id("delete"), PerformanceVector::from_string(&g, "delete", "FFP").unwrap()),
        ])
        .unwrap();
        let joints = uniform_scheme_joints(&gp);
        assert_eq!(joints[0].1, ratio(1, 2) * ratio(1, 7));
        assert_eq!(joints[1].1, ratio(1, 2) * ratio(2, 7));
        let table = bayes_fail_posterior(&joints).unwrap();
        assert_eq!(table.get("select").unwrap(), &Probability::from_ratio(1, 3));
        assert_eq!(table.get("delete").unwrap(), &Probability::from_ratio(2, 3));
    }

    #[test]
    fn bayes_edge_cases() {
        let single = bayes_fail_posterior(&[(id("x"), ratio(5, 1))]).unwrap();
        assert_eq!(single.get("x").unwrap(), &Probability::one());

        let t = bayes_fail_posterior(&[(id("a"), ratio(1, 1)), (id("b"), ratio(1, 1)), (id("c"), ratio(2, 1))])
            .unwrap();
        let got: Vec<_> = t.entries.iter().map(|p| p.posterior.clone()).collect();
        assert_eq!(
            got,
            [Probability::from_ratio(1, 4), Probability::from_ratio(1, 4), Probability::from_ratio(1, 2)]
        );

        assert_eq!(
            bayes_fail_posterior(&[(id("a"), ratio(0, 1))]),
            Err(ProbabilityError::AllZeroWeights)
        );
        assert_eq!(bayes_fail_posterior(&[]), Err(ProbabilityError::AllZeroWeights));
        assert!(matches!(
            bayes_fail_posterior(&[(id("a"), -ratio(1, 2))]),
            Err(ProbabilityError::NegativeWeight(_))
        ));
    }

    #[test]
    fn uniform_scheme_edge_cases() {
        let all_pass = GroupPerformance::new(vec![(
            id("select"),
            PerformanceVector::new(vec![(id("a"), Outcome::Pass), (id("b"), Outcome::Pass)]).unwrap(),
        )])
        .unwrap();
        assert_eq!(uniform_scheme_joints(&all_pass)[0].1, ratio(0, 1));

        let fails = |p: &str| {
            PerformanceVector::new(vec![(id(&format!("{p}1")), Outcome::Fail), (id(&format!("{p}2")), Outcome::Fail)])
                .unwrap()
        };
        let sym = GroupPerformance::new(vec![(id("a"), fails("a")), (id("b"), fails("b"))]).unwrap();
        let j = uniform_scheme_joints(&sym);
        assert_eq!(j[0].1, j[1].1);

        assert!(matches!(
            GroupPerformance::new(vec![(id("a"), fails("a")), (id("a"), fails("b"))]),
            Err(ProbabilityError::DuplicateParent(_))
        ));
    }

    fn row(parent: &str, leaf: &str, pass: u64, fail: u64) -> CountRow {
        CountRow { parent: id(parent), leaf: id(leaf), pass, fail }
    }

    fn table4() -> AggregateCounts {
        AggregateCounts::new(vec![
            row("select", "selectOrderBy", 11, 3),
            row("select", "selectDistinct", 14, 1),
            row("select", "selectWhere", 14, 0),
            row("select", "selectAll", 14, 0),
            row("delete", "deleteSelect", 5, 16),
            row("delete", "deleteWhere", 20, 1),
            row("delete", "truncateTable", 10, 3),
        ])
        .unwrap()
    }

    #[test]
    fn aggregate_paper_scheme_matches_published_arithmetic() {
        let got = aggregate_scheme_posterior(&table4(), "deleteSelect", AggregateScheme::Paper).unwrap();
        let expected = (ratio(55, 112) * ratio(16, 20))
            / (ratio(57, 112) * ratio(4, 24) + ratio(55, 112) * ratio(20, 24));
        assert_eq!(got, expected);
        assert!((rational_to_f64(&got) - 0.7951).abs() < 5e-4);
        assert!((rational_to_f64(&got) - 0.78).abs() <= 0.02);
    }

    #[test]
    fn aggregate_consistent_scheme_is_a_partition() {
        let counts = table4();
        let total = counts.rows().iter().fold(BigRational::zero(), |acc, r| {
            acc + aggregate_scheme_posterior(&counts, r.leaf.as_str(), AggregateScheme::Consistent).unwrap()
        });
        assert_eq!(total, BigRational::one());
    }

    #[test]
    fn aggregate_edge_cases() {
        let counts = table4();
        assert_eq!(
            aggregate_scheme_posterior(&counts, "selectWhere", AggregateScheme::Paper).unwrap(),
            BigRational::zero()
        );
        assert_eq!(
            aggregate_scheme_posterior(&counts, "nosuch", AggregateScheme::Paper),
            Err(ProbabilityError::UnknownLeaf("nosuch".into()))
        );

        let single = AggregateCounts::new(vec![row("a", "x", 3, 1), row("a", "y", 2, 0), row("b", "z", 4, 0)]).unwrap();
        for scheme in [AggregateScheme::Paper, AggregateScheme::Consistent] {
            assert_eq!(aggregate_scheme_posterior(&single, "x", scheme).unwrap(), BigRational::one());
        }

        let none = AggregateCounts::new(vec![row("a", "x", 3, 0), row("b", "y", 1, 0)]).unwrap();
        assert_eq!(
            aggregate_scheme_posterior(&none, "x", AggregateScheme::Paper),
            Err(ProbabilityError::ZeroDenominator)
        );
        assert!(matches!(
            AggregateCounts::new(vec![row("a", "x", 1, 0), row("a", "x", 2, 0)]),
            Err(ProbabilityError::DuplicateRow { .. })
        ));
    }

    #[test]
    fn table4_totals() {
        let counts = table4();
        assert_eq!(counts.totals(), Tally { pass: 88, fail: 24 });
        let groups = counts.group_totals();
        assert_eq!(groups[0].0, "select");
        assert_eq!(groups[0].1.total(), 57);
        assert_eq!(groups[1].1.total(), 55);
    }

    #[test]
    fn weight_table_rows() {
        let rows = weight_table(7).unwrap();
        assert_eq!(rows.len(), 7);
        let four: Vec<(f64, f64)> = rows[3].pairs().map(|(p, f)| (p.to_f64(), f.to_f64())).collect();
        assert_eq!(four, [(1.0, 0.0), (0.75, 0.25), (0.5, 0.5), (0.25, 0.75), (0.0, 1.0)]);
        let one: Vec<(f64, f64)> = rows[0].pairs().map(|(p, f)| (p.to_f64(), f.to_f64())).collect();
        assert_eq!(one, [(1.0, 0.0), (0.0, 1.0)]);
        let (p, f) = rows[6].pair(1).unwrap();
        assert_eq!(format!("{:.3} {:.3}", p.to_f64(), f.to_f64()), "0.857 0.143");
        assert_eq!(rows[6].pair(8), None);
        assert_eq!(weight_table(0), Err(ProbabilityError::InvalidTableSize(0)));
        assert_eq!(weight_table(10_001), Err(ProbabilityError::InvalidTableSize(10_001)));
        assert_eq!(weight_table(10_000).unwrap().len(), 10_000);
    }

    #[test]
    fn probability_bounds_and_serde() {
        assert!(Probability::new(ratio(3, 2)).is_err());
        assert!(Probability::new(-ratio(1, 2)).is_err());
        let p = Probability::from_ratio(2, 3);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"fraction":"2/3","value":0.6666666666666666}"#);
        assert_eq!(serde_json::from_str::<Probability>(&json).unwrap(), p);
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("2/7"), Some(ratio(2, 7)));
        assert_eq!(parse_rational("0.125"), Some(ratio(1, 8)));
        assert_eq!(parse_rational("5"), Some(ratio(5, 1)));
        assert_eq!(parse_rational("-0.5"), Some(-ratio(1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
    }
}
