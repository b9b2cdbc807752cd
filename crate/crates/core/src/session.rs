//! Assessment sessions.
//!
//! A student picks a desired concept; the session queues the leaves to pre-assess (the leaves of
//! every prerequisite parent, or the concept's own leaves in direct mode), collects one Pass/Fail
//! outcome per queued leaf and, once complete, yields a [`Recommendation`].
//!
//! Sessions are event sourced. Every state change is a [`SessionEvent`]; commands validate against
//! the current state and return the event to persist, and [`AssessmentSession::apply`] is the only
//! transition function. Replaying a session's events always rebuilds the same state.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use crate::graph::{GraphError, KnowledgeGraph, NodeId};
use crate::probability::{fail_weight, ParentWeight, PerformanceVector, Recommendation};
use crate::{ErrorCode, Outcome};

pub use crate::probability::Recommendation as SessionRecommendation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("{0} is a leaf, not a parent concept")]
    NotAParent(String),
    #[error("session is already complete")]
    SessionComplete,
    #[error("session is not complete yet")]
    SessionNotComplete,
    #[error("leaf {0} is not queued in this session")]
    LeafNotQueued(String),
    #[error("leaf {leaf} was already recorded as {recorded}")]
    AlreadyRecordedDifferently { leaf: String, recorded: Outcome },
    #[error("leaf {0} has no quiz")]
    NoQuizDefined(String),
    #[error("expected {expected} answers, got {got}")]
    AnswerCountMismatch { expected: usize, got: usize },
    #[error("answer {index} chooses option {choice}, but the item has {choices} choices")]
    IndexOutOfRange { index: usize, choice: usize, choices: usize },
    #[error("invalid event for session {session}: {reason}")]
    InvalidEvent { session: String, reason: String },
}

impl ErrorCode for SessionError {
    fn code(&self) -> &'static str {
        match self {
            SessionError::UnknownNode(_) => "UNKNOWN_NODE",
            SessionError::NotAParent(_) => "NOT_A_PARENT",
            SessionError::SessionComplete => "SESSION_COMPLETE",
            SessionError::SessionNotComplete => "SESSION_NOT_COMPLETE",
            SessionError::LeafNotQueued(_) => "LEAF_NOT_QUEUED",
            SessionError::AlreadyRecordedDifferently { .. } => "ALREADY_RECORDED_DIFFERENTLY",
            SessionError::NoQuizDefined(_) => "NO_QUIZ_DEFINED",
            SessionError::AnswerCountMismatch { .. } => "ANSWER_COUNT_MISMATCH",
            SessionError::IndexOutOfRange { .. } => "INDEX_OUT_OF_RANGE",
            SessionError::InvalidEvent { .. } => "INVALID_EVENT",
        }
    }
}

impl From<GraphError> for SessionError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::UnknownNode(n) => SessionError::UnknownNode(n),
            other => SessionError::InvalidEvent { session: String::new(), reason: other.to_string() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub Uuid);

impl SessionId {
    pub fn random() -> Self {
        SessionId(Uuid::new_v4())
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for SessionId {
    type Err = uuid::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Uuid::parse_str(s).map(SessionId)
    }
}

/// Which leaves a session assesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssessmentMode {
    /// The leaves of every transitive prerequisite of the desired concept.
    #[default]
    Prerequisite,
    /// The desired concept's own leaves.
    Direct,
}

impl FromStr for AssessmentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prerequisite" => Ok(AssessmentMode::Prerequisite),
            "direct" => Ok(AssessmentMode::Direct),
            other => Err(format!("unknown mode {other:?} (expected prerequisite or direct)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueuedLeaf {
    pub parent: NodeId,
    pub leaf: NodeId,
}

/// Kind-specific payload of a session event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    Created { desired: NodeId, mode: AssessmentMode, queue: Vec<QueuedLeaf> },
    OutcomeRecorded { leaf: NodeId, outcome: Outcome },
    Finalized { recommendation: Recommendation },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::Created { .. } => "created",
            EventBody::OutcomeRecorded { .. } => "outcome_recorded",
            EventBody::Finalized { .. } => "finalized",
        }
    }
}

/// One line of the session log. `seq` starts at 1 (the `created` event) and is gapless.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub session_id: SessionId,
    pub seq: u64,
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub body: EventBody,
}

/// Current UTC time at millisecond precision.
pub fn now_millis() -> DateTime<Utc> {
    Utc::now().trunc_subsecs(3)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentSession {
    pub id: SessionId,
    pub desired: NodeId,
    pub mode: AssessmentMode,
    pub queue: Vec<QueuedLeaf>,
    pub outcomes: BTreeMap<NodeId, Outcome>,
    pub status: SessionStatus,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    /// Set once the finalized event has been applied.
    pub recommendation: Option<Recommendation>,
    /// Sequence number of the last applied event.
    pub seq: u64,
}

/// Outcome of grading one leaf's quiz.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizGrade {
    pub leaf: NodeId,
    pub answers: Vec<usize>,
    pub outcome: Outcome,
}

/// Builds the leaf queue for a new session.
pub fn session_queue(g: &KnowledgeGraph, desired: &str, mode: AssessmentMode) -> Result<Vec<QueuedLeaf>, SessionError> {
    if g.is_leaf(desired) {
        return Err(SessionError::NotAParent(desired.to_string()));
    }
    let parents = match mode {
        AssessmentMode::Prerequisite => g.prerequisites_of(desired)?,
        AssessmentMode::Direct => {
            g.leaves_under(desired)?;
            vec![NodeId::new(desired).expect("known parent id")]
        }
    };
    let mut queue = Vec::new();
    for parent in parents {
        for leaf in g.leaves_under(parent.as_str())? {
            queue.push(QueuedLeaf { parent: parent.clone(), leaf });
        }
    }
    Ok(queue)
}

/// Starts a session with a fresh id at the current time. Returns the session and the events to
/// persist (`created`, plus `finalized` when there is nothing to assess).
pub fn start_session(
    g: &KnowledgeGraph,
    desired: &str,
    mode: AssessmentMode,
) -> Result<(AssessmentSession, Vec<SessionEvent>), SessionError> {
    start_session_at(g, desired, mode, SessionId::random(), now_millis())
}

pub fn start_session_at(
    g: &KnowledgeGraph,
    desired: &str,
    mode: AssessmentMode,
    id: SessionId,
    at: DateTime<Utc>,
) -> Result<(AssessmentSession, Vec<SessionEvent>), SessionError> {
    let queue = session_queue(g, desired, mode)?;
    let created = SessionEvent {
        session_id: id,
        seq: 1,
        at,
        body: EventBody::Created { desired: NodeId::new(desired).expect("known parent id"), mode, queue },
    };
    let mut session = AssessmentSession::from_created(&created)?;
    let mut events = vec![created];
    if session.status == SessionStatus::Complete {
        let fin = session.finalized_event(g, at)?;
        session.apply(&fin)?;
        events.push(fin);
    }
    Ok((session, events))
}

/// Grades a quiz: Pass iff every answer is correct.
pub fn grade_quiz(g: &KnowledgeGraph, leaf: &str, answers: &[usize]) -> Result<QuizGrade, SessionError> {
    let node = g.leaf(leaf).ok_or_else(|| {
        if g.is_parent(leaf) {
            SessionError::NoQuizDefined(leaf.to_string())
        } else {
            SessionError::UnknownNode(leaf.to_string())
        }
    })?;
    if node.quiz.is_empty() {
        return Err(SessionError::NoQuizDefined(leaf.to_string()));
    }
    if answers.len() != node.quiz.len() {
        return Err(SessionError::AnswerCountMismatch { expected: node.quiz.len(), got: answers.len() });
    }
    let mut all_correct = true;
    for (index, (item, &choice)) in node.quiz.iter().zip(answers).enumerate() {
        if choice >= item.choices.len() {
            return Err(SessionError::IndexOutOfRange { index, choice, choices: item.choices.len() });
        }
        all_correct &= choice == item.correct_index;
    }
    Ok(QuizGrade {
        leaf: node.id.clone(),
        answers: answers.to_vec(),
        outcome: if all_correct { Outcome::Pass } else { Outcome::Fail },
    })
}

/// Recommendation for a completed session. The headline weight pools every queued outcome; each
/// parent's own fail weight is reported alongside.
pub fn finalize(g: &KnowledgeGraph, s: &AssessmentSession) -> Result<Recommendation, SessionError> {
    if s.status != SessionStatus::Complete {
        return Err(SessionError::SessionNotComplete);
    }
    let pooled = s.queue.iter().map(|q| s.outcomes[&q.leaf]);
    let weight = match fail_weight(pooled) {
        Ok(w) => w,
        // Nothing queued: nothing to relearn.
        Err(_) => return Ok(Recommendation::progress(Some(s.desired.clone()))),
    };
    if weight.is_zero() {
        let target = match s.mode {
            AssessmentMode::Prerequisite => Some(s.desired.clone()),
            AssessmentMode::Direct => g.next_higher(s.desired.as_str())?,
        };
        return Ok(Recommendation::progress(target));
    }
    let leaves = s.queue.iter().filter(|q| s.outcomes[&q.leaf].is_fail()).map(|q| q.leaf.clone()).collect();
    let per_parent = s
        .performance_by_parent()
        .into_iter()
        .map(|(parent, perf)| ParentWeight { parent, weight: perf.fail_weight() })
        .collect();
    Ok(Recommendation::Relearn { leaves, weight, per_parent })
}

impl AssessmentSession {
    fn from_created(event: &SessionEvent) -> Result<Self, SessionError> {
        let EventBody::Created { desired, mode, queue } = &event.body else {
            return Err(invalid(event, "first event must be created"));
        };
        if event.seq != 1 {
            return Err(invalid(event, "created event must have seq 1"));
        }
        Ok(AssessmentSession {
            id: event.session_id,
            desired: desired.clone(),
            mode: *mode,
            queue: queue.clone(),
            outcomes: BTreeMap::new(),
            status: if queue.is_empty() { SessionStatus::Complete } else { SessionStatus::Active },
            created_at: event.at,
            updated_at: event.at,
            recommendation: None,
            seq: 1,
        })
    }

    /// Rebuilds a session from its ordered events.
    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a SessionEvent>) -> Result<Self, SessionError> {
        let mut events = events.into_iter();
        let first = events.next().ok_or_else(|| SessionError::InvalidEvent {
            session: String::new(),
            reason: "no events".into(),
        })?;
        let mut session = Self::from_created(first)?;
        for e in events {
            session.apply(e)?;
        }
        Ok(session)
    }

    pub fn is_complete(&self) -> bool {
        self.status == SessionStatus::Complete
    }

    pub fn is_queued(&self, leaf: &str) -> bool {
        self.queue.iter().any(|q| q.leaf == leaf)
    }

    /// The next queued leaf without an outcome.
    pub fn pending_leaf(&self) -> Option<&QueuedLeaf> {
        self.queue.iter().find(|q| !self.outcomes.contains_key(&q.leaf))
    }

    pub fn answered(&self) -> usize {
        self.outcomes.len()
    }

    /// Validates an outcome against the current state. `Ok(None)` means the identical outcome is
    /// already recorded and nothing needs to be persisted.
    pub fn plan_outcome(
        &self,
        leaf: &str,
        outcome: Outcome,
        at: DateTime<Utc>,
    ) -> Result<Option<SessionEvent>, SessionError> {
        if self.is_complete() {
            return Err(SessionError::SessionComplete);
        }
        let queued = self
            .queue
            .iter()
            .find(|q| q.leaf == leaf)
            .ok_or_else(|| SessionError::LeafNotQueued(leaf.to_string()))?;
        match self.outcomes.get(leaf) {
            Some(&recorded) if recorded == outcome => Ok(None),
            Some(&recorded) => Err(SessionError::AlreadyRecordedDifferently { leaf: leaf.to_string(), recorded }),
            None => Ok(Some(SessionEvent {
                session_id: self.id,
                seq: self.seq + 1,
                at,
                body: EventBody::OutcomeRecorded { leaf: queued.leaf.clone(), outcome },
            })),
        }
    }

    /// Records an outcome in place, returning the event to persist (if any).
    pub fn record_outcome(
        &mut self,
        leaf: &str,
        outcome: Outcome,
        at: DateTime<Utc>,
    ) -> Result<Option<SessionEvent>, SessionError> {
        let event = self.plan_outcome(leaf, outcome, at)?;
        if let Some(e) = &event {
            self.apply(e)?;
        }
        Ok(event)
    }

    /// The `finalized` event for a complete session.
    pub fn finalized_event(&self, g: &KnowledgeGraph, at: DateTime<Utc>) -> Result<SessionEvent, SessionError> {
        Ok(SessionEvent {
            session_id: self.id,
            seq: self.seq + 1,
            at,
            body: EventBody::Finalized { recommendation: finalize(g, self)? },
        })
    }

    /// Applies one event. Events must arrive in sequence and describe a legal transition.
    pub fn apply(&mut self, event: &SessionEvent) -> Result<(), SessionError> {
        if event.session_id != self.id {
            return Err(invalid(event, "event belongs to another session"));
        }
        if event.seq != self.seq + 1 {
            return Err(invalid(event, &format!("expected seq {}, got {}", self.seq + 1, event.seq)));
        }
        match &event.body {
            EventBody::Created { .. } => return Err(invalid(event, "duplicate created event")),
            EventBody::OutcomeRecorded { leaf, outcome } => {
                if self.is_complete() {
                    return Err(invalid(event, "outcome after completion"));
                }
                if !self.is_queued(leaf.as_str()) {
                    return Err(invalid(event, &format!("leaf {leaf} not queued")));
                }
                if self.outcomes.contains_key(leaf) {
                    return Err(invalid(event, &format!("leaf {leaf} recorded twice")));
                }
                self.outcomes.insert(leaf.clone(), *outcome);
                if self.outcomes.len() == self.queue.len() {
                    self.status = SessionStatus::Complete;
                }
            }
            EventBody::Finalized { recommendation } => {
                if !self.is_complete() {
                    return Err(invalid(event, "finalized before completion"));
                }
                if self.recommendation.is_some() {
                    return Err(invalid(event, "finalized twice"));
                }
                self.recommendation = Some(recommendation.clone());
            }
        }
        self.seq = event.seq;
        self.updated_at = event.at;
        Ok(())
    }

    /// Recorded outcomes grouped by parent, in queue order. Parents with no outcomes are omitted.
    pub fn performance_by_parent(&self) -> Vec<(NodeId, PerformanceVector)> {
        let mut groups: Vec<(NodeId, Vec<(NodeId, Outcome)>)> = Vec::new();
        for q in &self.queue {
            let Some(&o) = self.outcomes.get(&q.leaf) else { continue };
            match groups.last_mut() {
                Some((p, entries)) if *p == q.parent => entries.push((q.leaf.clone(), o)),
                _ => groups.push((q.parent.clone(), vec![(q.leaf.clone(), o)])),
            }
        }
        groups
            .into_iter()
            .map(|(p, entries)| (p, PerformanceVector::new(entries).expect("non-empty, distinct leaves")))
            .collect()
    }

    /// All recorded outcomes in queue order.
    pub fn pooled_performance(&self) -> Option<PerformanceVector> {
        let entries: Vec<_> = self
            .queue
            .iter()
            .filter_map(|q| self.outcomes.get(&q.leaf).map(|&o| (q.leaf.clone(), o)))
            .collect();
        PerformanceVector::new(entries).ok()
    }
}

fn invalid(event: &SessionEvent, reason: &str) -> SessionError {
    SessionError::InvalidEvent { session: event.session_id.to_string(), reason: reason.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_graph;
    use crate::probability::Probability;
    use chrono::TimeZone;

    fn fixture() -> KnowledgeGraph {
        load_graph(include_str!("../fixtures/sql_ontology.graph.json")).unwrap()
    }

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
    }

    fn sid() -> SessionId {
        SessionId(Uuid::from_u128(7))
    }

    fn leaves(s: &AssessmentSession) -> Vec<&str> {
        s.queue.iter().map(|q| q.leaf.as_str()).collect()
    }

    fn answer_all(s: &mut AssessmentSession, perf: &str) -> Vec<SessionEvent> {
        let queue: Vec<NodeId> = s.queue.iter().map(|q| q.leaf.clone()).collect();
        queue
            .iter()
            .zip(perf.chars())
            .filter_map(|(leaf, c)| s.record_outcome(leaf.as_str(), Outcome::from_char(c).unwrap(), t0()).unwrap())
            .collect()
    }

    #[test]
    fn prerequisite_queue_is_parent_major() {
        let g = fixture();
        let (s, events) = start_session_at(&g, "delete", AssessmentMode::Prerequisite, sid(), t0()).unwrap();
        assert_eq!(
            leaves(&s),
            ["selectOrderBy", "selectDistinct", "selectWhere", "selectAll", "insertInto", "insertSelect"]
        );
        assert_eq!(events.len(), 1);
        assert_eq!(s.status, SessionStatus::Active);
    }

    #[test]
    fn direct_queue_is_own_leaves() {
        let g = fixture();
        let (s, _) = start_session_at(&g, "delete", AssessmentMode::Direct, sid(), t0()).unwrap();
        assert_eq!(leaves(&s), ["truncateTable", "deleteSelect", "deleteWhere"]);
    }

    #[test]
    fn empty_queue_completes_immediately() {
        let g = fixture();
        let (s, events) = start_session_at(&g, "select", AssessmentMode::Prerequisite, sid(), t0()).unwrap();
        assert!(s.is_complete());
        assert_eq!(events.len(), 2);
        assert_eq!(
            s.recommendation,
            Some(Recommendation::Progress { target: Some(NodeId::new("select").unwrap()), curriculum_complete: false })
        );
    }

    #[test]
    fn start_errors() {
        let g = fixture();
        assert_eq!(
            start_session_at(&g, "selectAll", AssessmentMode::Direct, sid(), t0()).unwrap_err(),
            SessionError::NotAParent("selectAll".into())
        );
        assert_eq!(
            start_session_at(&g, "nosuch", AssessmentMode::Direct, sid(), t0()).unwrap_err(),
            SessionError::UnknownNode("nosuch".into())
        );
    }

    #[test]
    fn recording_outcomes() {
        let g = fixture();
        let (mut s, _) = start_session_at(&g, "insert", AssessmentMode::Prerequisite, sid(), t0()).unwrap();
        answer_all(&mut s, "FPPP");
        assert!(s.is_complete());
        let groups = s.performance_by_parent();
        assert_eq!(groups[0].1.to_performance_string(), "FPPP");

        assert_eq!(s.record_outcome("selectAll", Outcome::Pass, t0()), Err(SessionError::SessionComplete));
    }

    #[test]
    fn replay_and_conflict_rules() {
        let g = fixture();
        let (mut s, _) = start_session_at(&g, "delete", AssessmentMode::Direct, sid(), t0()).unwrap();
        assert!(s.record_outcome("deleteWhere", Outcome::Pass, t0()).unwrap().is_some());
        assert_eq!(s.record_outcome("deleteWhere", Outcome::Pass, t0()).unwrap(), None);
        assert_eq!(
            s.record_outcome("deleteWhere", Outcome::Fail, t0()),
            Err(SessionError::AlreadyRecordedDifferently { leaf: "deleteWhere".into(), recorded: Outcome::Pass })
        );
        assert_eq!(s.record_outcome("selectAll", Outcome::Pass, t0()), Err(SessionError::LeafNotQueued("selectAll".into())));
        assert_eq!(s.seq, 2);
    }

    #[test]
    fn finalize_pools_and_reports_per_parent() {
        // Queue select then delete; outcomes FPPP and PFF.
        let g = fixture();
        let queue: Vec<QueuedLeaf> = ["select", "delete"]
            .iter()
            .flat_map(|p| {
                g.leaves_under(p)
                    .unwrap()
                    .into_iter()
                    .map(move |leaf| QueuedLeaf { parent: NodeId::new(*p).unwrap(), leaf })
            })
            .collect();
        let created = SessionEvent {
            session_id: sid(),
            seq: 1,
            at: t0(),
            body: EventBody::Created { desired: NodeId::new("update").unwrap(), mode: AssessmentMode::Prerequisite, queue },
        };
        let mut s = AssessmentSession::from_events([&created]).unwrap();
        answer_all(&mut s, "FPPPPFF");
        match finalize(&g, &s).unwrap() {
            Recommendation::Relearn { leaves, weight, per_parent } => {
                assert_eq!(weight, Probability::from_ratio(3, 7));
                let names: Vec<&str> = leaves.iter().map(NodeId::as_str).collect();
                assert_eq!(names, ["selectOrderBy", "deleteSelect", "deleteWhere"]);
                assert_eq!(per_parent[0].weight, Probability::from_ratio(1, 4));
                assert_eq!(per_parent[1].weight, Probability::from_ratio(2, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn finalize_progress_and_total_failure() {
        let g = fixture();
        let (mut s, _) = start_session_at(&g, "delete", AssessmentMode::Direct, sid(), t0()).unwrap();
        assert_eq!(finalize(&g, &s), Err(SessionError::SessionNotComplete));
        answer_all(&mut s, "PPP");
        assert_eq!(finalize(&g, &s).unwrap(), Recommendation::progress(Some(NodeId::new("update").unwrap())));

        let (mut s, _) = start_session_at(&g, "delete", AssessmentMode::Prerequisite, sid(), t0()).unwrap();
        answer_all(&mut s, "FFFFFF");
        assert_eq!(finalize(&g, &s).unwrap().weight(), Probability::one());

        let (mut s, _) = start_session_at(&g, "join", AssessmentMode::Direct, sid(), t0()).unwrap();
        answer_all(&mut s, "PPP");
        assert_eq!(finalize(&g, &s).unwrap(), Recommendation::Progress { target: None, curriculum_complete: true });
    }

    #[test]
    fn grading() {
        let g = fixture();
        assert_eq!(grade_quiz(&g, "selectOrderBy", &[1]).unwrap().outcome, Outcome::Pass);
        assert_eq!(grade_quiz(&g, "selectOrderBy", &[0]).unwrap().outcome, Outcome::Fail);
        assert_eq!(
            grade_quiz(&g, "selectOrderBy", &[1, 1]),
            Err(SessionError::AnswerCountMismatch { expected: 1, got: 2 })
        );
        assert!(matches!(grade_quiz(&g, "selectOrderBy", &[9]), Err(SessionError::IndexOutOfRange { .. })));
        assert_eq!(grade_quiz(&g, "selectJoin", &[0]), Err(SessionError::NoQuizDefined("selectJoin".into())));
        assert_eq!(grade_quiz(&g, "nosuch", &[0]), Err(SessionError::UnknownNode("nosuch".into())));
    }

    #[test]
    fn replay_rebuilds_state() {
        let g = fixture();
        let (mut s, mut events) = start_session_at(&g, "delete", AssessmentMode::Direct, sid(), t0()).unwrap();
        events.extend(answer_all(&mut s, "PFF"));
        let fin = s.finalized_event(&g, t0()).unwrap();
        s.apply(&fin).unwrap();
        events.push(fin);
        assert_eq!(AssessmentSession::from_events(&events).unwrap(), s);
    }

    #[test]
    fn apply_rejects_out_of_order_events() {
        let g = fixture();
        let (s, events) = start_session_at(&g, "delete", AssessmentMode::Direct, sid(), t0()).unwrap();
        let mut bad = s.plan_outcome("deleteWhere", Outcome::Pass, t0()).unwrap().unwrap();
        bad.seq = 5;
        let mut replay = AssessmentSession::from_events(&events).unwrap();
        assert!(matches!(replay.apply(&bad), Err(SessionError::InvalidEvent { .. })));
    }

    #[test]
    fn event_wire_format() {
        let e = SessionEvent {
            session_id: sid(),
            seq: 2,
            at: t0(),
            body: EventBody::OutcomeRecorded { leaf: NodeId::new("deleteWhere").unwrap(), outcome: Outcome::Fail },
        };
        let json = serde_json::to_value(&e).unwrap();
        assert_eq!(json["kind"], "outcome_recorded");
        assert_eq!(json["payload"]["outcome"], "Fail");
        assert_eq!(json["seq"], 2);
        let back: SessionEvent = serde_json::from_value(json).unwrap();
        assert_eq!(back, e);
    }
}
