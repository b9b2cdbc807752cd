//! The ontology of learning objects.
//!
//! A [`KnowledgeGraph`] holds parent concept nodes (e.g. `select`, `delete`), the leaf skill
//! nodes each parent owns (e.g. `selectOrderBy`), prerequisite edges between parents and the
//! progression chain that names the "next higher" topic of every parent. Graphs are loaded from
//! a JSON document, validated once and are immutable afterwards.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ErrorCode;

/// Identifier of a parent or leaf node. Non-empty, case-sensitive, no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid node id {0:?}: ids must be non-empty and contain no whitespace")]
pub struct InvalidNodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, InvalidNodeId> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(InvalidNodeId(id));
        }
        Ok(NodeId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for NodeId {
    type Error = InvalidNodeId;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        NodeId::new(value)
    }
}

impl TryFrom<&str> for NodeId {
    type Error = InvalidNodeId;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        NodeId::new(value)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> Self {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for NodeId {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for NodeId {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// One multiple-choice item of a leaf's pre-assessment quiz.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuizItem {
    pub prompt: String,
    pub choices: Vec<String>,
    pub correct_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafNode {
    pub id: NodeId,
    pub quiz: Vec<QuizItem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ParentNode {
    id: NodeId,
    leaves: Vec<LeafNode>,
}

/// Ways a graph document can violate the ontology invariants.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error(transparent)]
    InvalidId(#[from] InvalidNodeId),
    #[error("duplicate node id {0}")]
    DuplicateId(String),
    #[error("leaf {leaf} is listed under both {first} and {second}")]
    LeafUnderMultipleParents { leaf: String, first: String, second: String },
    #[error("parent {0} has no leaves")]
    ParentWithoutLeaves(String),
    #[error("{kind} edge {from} -> {to} references {missing}, which is not a parent node")]
    EdgeEndpointNotParent { kind: &'static str, from: String, to: String, missing: String },
    #[error("duplicate {kind} edge {from} -> {to}")]
    DuplicateEdge { kind: &'static str, from: String, to: String },
    #[error("prerequisite relation has a cycle: {}", .0.join(" -> "))]
    PrerequisiteCycle(Vec<String>),
    #[error("parent {parent} has more than one next-higher parent ({first}, {second})")]
    ProgressionNotFunction { parent: String, first: String, second: String },
    #[error("progression relation has a cycle: {}", .0.join(" -> "))]
    ProgressionCycle(Vec<String>),
    #[error("quiz item {index} of leaf {leaf}: {reason}")]
    InvalidQuiz { leaf: String, index: usize, reason: String },
    #[error("alias {alias} points to {target}, which is not a leaf")]
    AliasTargetUnknown { alias: String, target: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("malformed graph document: {0}")]
    Parse(String),
    #[error("invalid graph: {0}")]
    Validation(#[from] ValidationError),
    #[error("unknown node {0}")]
    UnknownNode(String),
}

impl ErrorCode for GraphError {
    fn code(&self) -> &'static str {
        match self {
            GraphError::Parse(_) => "PARSE_ERROR",
            GraphError::Validation(_) => "VALIDATION_ERROR",
            GraphError::UnknownNode(_) => "UNKNOWN_NODE",
        }
    }
}

/// Serialized form of a graph file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub parents: Vec<ParentDocument>,
    #[serde(default)]
    pub prerequisites: Vec<EdgeDocument>,
    #[serde(default)]
    pub progression: Vec<EdgeDocument>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aliases: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParentDocument {
    pub id: String,
    pub leaves: Vec<LeafDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafDocument {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quiz: Option<Vec<QuizItem>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDocument {
    pub from: String,
    pub to: String,
}

/// Validated, immutable ontology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    parents: Vec<ParentNode>,
    parent_index: HashMap<NodeId, usize>,
    leaf_owner: HashMap<NodeId, (usize, usize)>,
    prerequisites: Vec<(NodeId, NodeId)>,
    progression: Vec<(NodeId, NodeId)>,
    next: HashMap<NodeId, NodeId>,
    aliases: BTreeMap<String, NodeId>,
    notes: Vec<String>,
    has_quiz: HashSet<NodeId>,
}

/// Parses and validates a graph file.
pub fn load_graph(document: &str) -> Result<KnowledgeGraph, GraphError> {
    let doc: GraphDocument =
        serde_json::from_str(document).map_err(|e| GraphError::Parse(e.to_string()))?;
    Ok(KnowledgeGraph::from_document(doc)?)
}

impl KnowledgeGraph {
    pub fn from_document(doc: GraphDocument) -> Result<Self, ValidationError> {
        let mut parents = Vec::with_capacity(doc.parents.len());
        let mut parent_index = HashMap::new();
        let mut leaf_owner: HashMap<NodeId, (usize, usize)> = HashMap::new();
        let mut has_quiz = HashSet::new();

        for (pi, p) in doc.parents.iter().enumerate() {
            let pid = NodeId::new(p.id.clone())?;
            if parent_index.insert(pid.clone(), pi).is_some() {
                return Err(ValidationError::DuplicateId(p.id.clone()));
            }
            if p.leaves.is_empty() {
                return Err(ValidationError::ParentWithoutLeaves(p.id.clone()));
            }
            parents.push(ParentNode { id: pid, leaves: Vec::new() });
        }

        for (pi, p) in doc.parents.iter().enumerate() {
            for (li, l) in p.leaves.iter().enumerate() {
                let lid = NodeId::new(l.id.clone())?;
                if parent_index.contains_key(&lid) {
                    return Err(ValidationError::DuplicateId(l.id.clone()));
                }
                if let Some(&(prev, _)) = leaf_owner.get(&lid) {
                    if prev == pi {
                        return Err(ValidationError::DuplicateId(l.id.clone()));
                    }
                    return Err(ValidationError::LeafUnderMultipleParents {
                        leaf: l.id.clone(),
                        first: doc.parents[prev].id.clone(),
                        second: p.id.clone(),
                    });
                }
                let quiz = l.quiz.clone().unwrap_or_default();
                for (qi, item) in quiz.iter().enumerate() {
                    validate_quiz_item(&l.id, qi, item)?;
                }
                if !quiz.is_empty() {
                    has_quiz.insert(lid.clone());
                }
                leaf_owner.insert(lid.clone(), (pi, li));
                parents[pi].leaves.push(LeafNode { id: lid, quiz });
            }
        }

        let prerequisites = resolve_edges("prerequisite", &doc.prerequisites, &parent_index)?;
        let progression = resolve_edges("progression", &doc.progression, &parent_index)?;

        if let Some(cycle) = find_cycle(&parents, &prerequisites) {
            return Err(ValidationError::PrerequisiteCycle(cycle));
        }

        let mut next: HashMap<NodeId, NodeId> = HashMap::new();
        for (from, to) in &progression {
            if let Some(existing) = next.get(from) {
                return Err(ValidationError::ProgressionNotFunction {
                    parent: from.to_string(),
                    first: existing.to_string(),
                    second: to.to_string(),
                });
            }
            next.insert(from.clone(), to.clone());
        }
        if let Some(cycle) = find_cycle(&parents, &progression) {
            return Err(ValidationError::ProgressionCycle(cycle));
        }

        let mut aliases = BTreeMap::new();
        for (alias, target) in &doc.aliases {
            let target_id = NodeId::new(target.clone())?;
            if !leaf_owner.contains_key(&target_id) {
                return Err(ValidationError::AliasTargetUnknown {
                    alias: alias.clone(),
                    target: target.clone(),
                });
            }
            aliases.insert(alias.clone(), target_id);
        }

        Ok(KnowledgeGraph {
            parents,
            parent_index,
            leaf_owner,
            prerequisites,
            progression,
            next,
            aliases,
            notes: doc.notes,
            has_quiz,
        })
    }

    pub fn to_document(&self) -> GraphDocument {
        let edge = |(f, t): &(NodeId, NodeId)| EdgeDocument { from: f.to_string(), to: t.to_string() };
        GraphDocument {
            notes: self.notes.clone(),
            parents: self
                .parents
                .iter()
                .map(|p| ParentDocument {
                    id: p.id.to_string(),
                    leaves: p
                        .leaves
                        .iter()
                        .map(|l| LeafDocument {
                            id: l.id.to_string(),
                            quiz: (!l.quiz.is_empty()).then(|| l.quiz.clone()),
                        })
                        .collect(),
                })
                .collect(),
            prerequisites: self.prerequisites.iter().map(edge).collect(),
            progression: self.progression.iter().map(edge).collect(),
            aliases: self.aliases.iter().map(|(a, t)| (a.clone(), t.to_string())).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("graph document serializes")
    }

    /// Parent ids in declaration order.
    pub fn parents(&self) -> impl Iterator<Item = &NodeId> {
        self.parents.iter().map(|p| &p.id)
    }

    pub fn is_parent(&self, id: &str) -> bool {
        self.parent_index.contains_key(id)
    }

    pub fn is_leaf(&self, id: &str) -> bool {
        self.leaf_owner.contains_key(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.is_parent(id) || self.is_leaf(id)
    }

    /// Owning parent of a leaf.
    pub fn parent_of(&self, leaf: &str) -> Option<&NodeId> {
        self.leaf_owner.get(leaf).map(|&(pi, _)| &self.parents[pi].id)
    }

    pub fn leaf(&self, leaf: &str) -> Option<&LeafNode> {
        self.leaf_owner.get(leaf).map(|&(pi, li)| &self.parents[pi].leaves[li])
    }

    /// Quiz items of a leaf; empty when the leaf has none.
    pub fn quiz(&self, leaf: &str) -> Option<&[QuizItem]> {
        self.leaf(leaf).map(|l| l.quiz.as_slice())
    }

    pub fn has_quiz(&self, leaf: &str) -> bool {
        self.has_quiz.contains(leaf)
    }

    /// Maps an abbreviation (e.g. `SOB`) or a full leaf id to the leaf id.
    pub fn resolve_leaf(&self, name: &str) -> Option<&NodeId> {
        if let Some(&(pi, li)) = self.leaf_owner.get(name) {
            return Some(&self.parents[pi].leaves[li].id);
        }
        self.aliases.get(name)
    }

    pub fn aliases(&self) -> &BTreeMap<String, NodeId> {
        &self.aliases
    }

    pub fn prerequisite_edges(&self) -> &[(NodeId, NodeId)] {
        &self.prerequisites
    }

    pub fn progression_edges(&self) -> &[(NodeId, NodeId)] {
        &self.progression
    }

    fn parent_node(&self, id: &str) -> Result<&ParentNode, GraphError> {
        self.parent_index
            .get(id)
            .map(|&i| &self.parents[i])
            .ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    /// All transitive prerequisites of `desired`, in topological order with lexicographic
    /// tie-breaking. `desired` itself is excluded.
    pub fn prerequisites_of(&self, desired: &str) -> Result<Vec<NodeId>, GraphError> {
        let target = self.parent_node(desired)?.id.clone();

        let mut ancestors: BTreeSet<NodeId> = BTreeSet::new();
        let mut stack = vec![target.clone()];
        while let Some(node) = stack.pop() {
            for (from, to) in &self.prerequisites {
                if *to == node && ancestors.insert(from.clone()) {
                    stack.push(from.clone());
                }
            }
        }
        ancestors.remove(&target);

        // Kahn's algorithm over the induced subgraph.
        let mut indegree: BTreeMap<&NodeId, usize> = ancestors.iter().map(|n| (n, 0)).collect();
        for (from, to) in &self.prerequisites {
            if ancestors.contains(from) && ancestors.contains(to) {
                *indegree.get_mut(to).expect("ancestor present") += 1;
            }
        }
        let mut ready: BTreeSet<&NodeId> =
            indegree.iter().filter(|(_, &d)| d == 0).map(|(n, _)| *n).collect();
        let mut order = Vec::with_capacity(ancestors.len());
        while let Some(node) = ready.pop_first() {
            order.push(node.clone());
            for (from, to) in &self.prerequisites {
                if from == node {
                    if let Some(d) = indegree.get_mut(to) {
                        *d -= 1;
                        if *d == 0 {
                            ready.insert(to);
                        }
                    }
                }
            }
        }
        Ok(order)
    }

    /// Leaves owned by `parent`, in declaration order.
    pub fn leaves_under(&self, parent: &str) -> Result<Vec<NodeId>, GraphError> {
        Ok(self.parent_node(parent)?.leaves.iter().map(|l| l.id.clone()).collect())
    }

    /// The progression successor of `parent`, or `None` when it is terminal.
    pub fn next_higher(&self, parent: &str) -> Result<Option<NodeId>, GraphError> {
        self.parent_node(parent)?;
        Ok(self.next.get(parent).cloned())
    }
}

fn validate_quiz_item(leaf: &str, index: usize, item: &QuizItem) -> Result<(), ValidationError> {
    let reason = if item.choices.len() < 2 {
        Some(format!("needs at least 2 choices, has {}", item.choices.len()))
    } else if item.correct_index >= item.choices.len() {
        Some(format!(
            "correct_index {} out of range for {} choices",
            item.correct_index,
            item.choices.len()
        ))
    } else {
        None
    };
    match reason {
        Some(reason) => Err(ValidationError::InvalidQuiz { leaf: leaf.to_string(), index, reason }),
        None => Ok(()),
    }
}

fn resolve_edges(
    kind: &'static str,
    edges: &[EdgeDocument],
    parent_index: &HashMap<NodeId, usize>,
) -> Result<Vec<(NodeId, NodeId)>, ValidationError> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(edges.len());
    for e in edges {
        for end in [&e.from, &e.to] {
            if !parent_index.contains_key(end.as_str()) {
                return Err(ValidationError::EdgeEndpointNotParent {
                    kind,
                    from: e.from.clone(),
                    to: e.to.clone(),
                    missing: end.clone(),
                });
            }
        }
        if !seen.insert((e.from.clone(), e.to.clone())) {
            return Err(ValidationError::DuplicateEdge { kind, from: e.from.clone(), to: e.to.clone() });
        }
        out.push((NodeId(e.from.clone()), NodeId(e.to.clone())));
    }
    Ok(out)
}

/// Returns one cycle (closed path of ids) if the edge set has any.
fn find_cycle(parents: &[ParentNode], edges: &[(NodeId, NodeId)]) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }

    let index: HashMap<&NodeId, usize> = parents.iter().enumerate().map(|(i, p)| (&p.id, i)).collect();
    let mut adj = vec![Vec::new(); parents.len()];
    for (from, to) in edges {
        adj[index[from]].push(index[to]);
    }

    let mut marks = vec![Mark::New; parents.len()];
    for start in 0..parents.len() {
        if marks[start] != Mark::New {
            continue;
        }
        // Iterative DFS; `path` mirrors the active stack.
        let mut path: Vec<(usize, usize)> = vec![(start, 0)];
        marks[start] = Mark::Active;
        while let Some(&mut (node, ref mut next_child)) = path.last_mut() {
            if let Some(&child) = adj[node].get(*next_child) {
                *next_child += 1;
                match marks[child] {
                    Mark::New => {
                        marks[child] = Mark::Active;
                        path.push((child, 0));
                    }
                    Mark::Active => {
                        let pos = path.iter().position(|&(n, _)| n == child).expect("on path");
                        let mut cycle: Vec<String> =
                            path[pos..].iter().map(|&(n, _)| parents[n].id.to_string()).collect();
                        cycle.push(parents[child].id.to_string());
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                marks[node] = Mark::Done;
                path.pop();
            }
        }
    }
    None
}
