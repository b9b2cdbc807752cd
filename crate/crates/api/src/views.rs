//! Response bodies. Quiz answers never leave the server.

use chrono::{DateTime, Utc};
use preassess_core::graph::{KnowledgeGraph, NodeId};
use preassess_core::probability::Recommendation;
use preassess_core::session::{AssessmentMode, AssessmentSession, QuizGrade, SessionId, SessionStatus};
use preassess_core::Outcome;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct QuizItemView {
    pub prompt: String,
    pub choices: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct LeafView {
    pub id: NodeId,
    pub quiz: Vec<QuizItemView>,
}

impl LeafView {
    pub fn new(g: &KnowledgeGraph, leaf: &NodeId) -> Self {
        let quiz = g
            .quiz(leaf.as_str())
            .unwrap_or_default()
            .iter()
            .map(|q| QuizItemView { prompt: q.prompt.clone(), choices: q.choices.clone() })
            .collect();
        LeafView { id: leaf.clone(), quiz }
    }
}

#[derive(Debug, Serialize)]
pub struct ParentView {
    pub id: NodeId,
    pub leaves: Vec<NodeId>,
    /// Transitive prerequisites, in assessment order.
    pub prerequisites: Vec<NodeId>,
    pub next_higher: Option<NodeId>,
}

#[derive(Debug, Serialize)]
pub struct GraphView {
    pub parents: Vec<ParentView>,
    pub prerequisite_edges: Vec<(NodeId, NodeId)>,
    pub progression_edges: Vec<(NodeId, NodeId)>,
}

impl GraphView {
    pub fn new(g: &KnowledgeGraph) -> Self {
        let parents = g
            .parents()
            .map(|p| ParentView {
                id: p.clone(),
                leaves: g.leaves_under(p.as_str()).unwrap_or_default(),
                prerequisites: g.prerequisites_of(p.as_str()).unwrap_or_default(),
                next_higher: g.next_higher(p.as_str()).unwrap_or_default(),
            })
            .collect();
        GraphView {
            parents,
            prerequisite_edges: g.prerequisite_edges().to_vec(),
            progression_edges: g.progression_edges().to_vec(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct QueueEntryView {
    pub parent: NodeId,
    pub leaf: NodeId,
    pub outcome: Option<Outcome>,
}

#[derive(Debug, Serialize)]
pub struct PendingView {
    pub parent: NodeId,
    pub leaf: LeafView,
}

#[derive(Debug, Serialize)]
pub struct SessionView {
    pub id: SessionId,
    pub desired: NodeId,
    pub mode: AssessmentMode,
    pub status: SessionStatus,
    pub queue: Vec<QueueEntryView>,
    pub answered: usize,
    pub total: usize,
    pub pending: Option<PendingView>,
    pub recommendation: Option<Recommendation>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl SessionView {
    pub fn new(g: &KnowledgeGraph, s: &AssessmentSession) -> Self {
        SessionView {
            id: s.id,
            desired: s.desired.clone(),
            mode: s.mode,
            status: s.status,
            queue: s
                .queue
                .iter()
                .map(|q| QueueEntryView {
                    parent: q.parent.clone(),
                    leaf: q.leaf.clone(),
                    outcome: s.outcomes.get(&q.leaf).copied(),
                })
                .collect(),
            answered: s.answered(),
            total: s.queue.len(),
            pending: s.pending_leaf().map(|q| PendingView { parent: q.parent.clone(), leaf: LeafView::new(g, &q.leaf) }),
            recommendation: s.recommendation.clone(),
            created_at: s.created_at,
            updated_at: s.updated_at,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OutcomeResponse {
    pub session: SessionView,
    /// Present when the outcome came from grading submitted answers.
    pub grade: Option<QuizGrade>,
    /// False when the identical outcome had already been recorded.
    pub recorded: bool,
}
