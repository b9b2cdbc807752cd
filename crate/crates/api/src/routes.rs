use std::collections::BTreeMap;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use preassess_core::dtree::{build_tree, evaluate, split_dataset, ConfusionMatrix, Criterion, DecisionTree, SplitSpec, TrainConfig};
use preassess_core::graph::NodeId;
use preassess_core::infotheory::{gain_report, GainReport};
use preassess_core::probability::{
    aggregate_scheme_posterior, bayes_fail_posterior, fail_weight, parse_performance_string, uniform_scheme_joints,
    AggregateCounts, AggregateScheme, CountRow, ExactValue, GroupPerformance, PerformanceVector, Probability,
    WeightTableRow,
};
use preassess_core::session::{grade_quiz, now_millis, start_session, AssessmentMode, SessionId};
use preassess_core::store::{parse_counts_csv, parse_episodes_csv};
use preassess_core::Outcome;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::views::{GraphView, LeafView, OutcomeResponse, SessionView};
use crate::AppState;

type ApiResult<T> = Result<T, ApiError>;

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/health", get(health))
        .route("/graph", get(graph))
        .route("/graph/parents/{id}/leaves", get(parent_leaves))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/outcomes", post(post_outcome))
        .route("/sessions/{id}/recommendation", get(get_recommendation))
        .route("/analytics/fail-weight", post(analytics_fail_weight))
        .route("/analytics/bayes", post(analytics_bayes))
        .route("/analytics/entropy", post(analytics_entropy))
        .route("/analytics/tree", post(analytics_tree))
        .route("/analytics/weight-table", get(analytics_weight_table))
}

fn json_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid_request(format!("invalid JSON body: {e}")))
}

fn text_body(body: &Bytes) -> ApiResult<&str> {
    std::str::from_utf8(body).map_err(|_| ApiError::invalid_request("body is not UTF-8"))
}

fn session_id(raw: &str) -> ApiResult<SessionId> {
    raw.parse().map_err(|_| ApiError::session_not_found(raw))
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn graph(State(state): State<AppState>) -> Json<GraphView> {
    Json(GraphView::new(&state.graph))
}

#[derive(Serialize)]
struct ParentLeaves {
    parent: NodeId,
    leaves: Vec<LeafView>,
}

async fn parent_leaves(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ParentLeaves>> {
    let g = &state.graph;
    if g.is_leaf(&id) {
        return Err(ApiError::new("NOT_A_PARENT", format!("{id} is a leaf, not a parent concept")));
    }
    let leaves = g.leaves_under(&id)?;
    Ok(Json(ParentLeaves {
        parent: NodeId::new(id).expect("known parent id"),
        leaves: leaves.iter().map(|l| LeafView::new(g, l)).collect(),
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    desired: String,
    #[serde(default)]
    mode: AssessmentMode,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: CreateSession = json_body(&body)?;
    let (session, events) = start_session(&state.graph, &req.desired, req.mode)?;
    let mut log = state.log();
    log.append_all(events)?;
    Ok((StatusCode::CREATED, Json(SessionView::new(&state.graph, &session))))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let sid = session_id(&id)?;
    let log = state.log();
    let s = log.session(&sid).ok_or_else(|| ApiError::session_not_found(&id))?;
    Ok(Json(SessionView::new(&state.graph, s)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeRequest {
    leaf: String,
    outcome: Option<Outcome>,
    answers: Option<Vec<usize>>,
}

async fn post_outcome(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<OutcomeResponse>> {
    let sid = session_id(&id)?;
    let req: OutcomeRequest = json_body(&body)?;
    let g = &state.graph;
    let leaf = g.resolve_leaf(&req.leaf).map_or(req.leaf.as_str(), NodeId::as_str);
    let (outcome, grade) = match (req.outcome, req.answers) {
        (Some(o), None) => (o, None),
        (None, Some(answers)) => {
            let grade = grade_quiz(g, leaf, &answers)?;
            (grade.outcome, Some(grade))
        }
        _ => return Err(ApiError::invalid_request("supply exactly one of outcome or answers")),
    };

    // The lock spans validation and append, so writes to a session are serialized.
    let mut log = state.log();
    let s = log.session(&sid).ok_or_else(|| ApiError::session_not_found(&id))?;
    let now = now_millis();
    let recorded = match s.plan_outcome(leaf, outcome, now)? {
        Some(event) => {
            log.append(event)?;
            let s = log.session(&sid).expect("session exists");
            if s.is_complete() && s.recommendation.is_none() {
                let fin = s.finalized_event(g, now)?;
                log.append(fin)?;
            }
            true
        }
        None => false,
    };
    let s = log.session(&sid).expect("session exists");
    Ok(Json(OutcomeResponse { session: SessionView::new(g, s), grade, recorded }))
}

async fn get_recommendation(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<preassess_core::probability::Recommendation>> {
    let sid = session_id(&id)?;
    let log = state.log();
    let s = log.session(&sid).ok_or_else(|| ApiError::session_not_found(&id))?;
    match &s.recommendation {
        Some(r) => Ok(Json(r.clone())),
        // A crash between the last outcome and its finalized event leaves this gap; finalize is pure.
        None => Ok(Json(preassess_core::session::finalize(&state.graph, s)?)),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FailWeightRequest {
    performance: String,
}

#[derive(Serialize)]
struct FailWeightResponse {
    performance: String,
    n: usize,
    fails: usize,
    weight: Probability,
    pass_weight: Probability,
}

async fn analytics_fail_weight(body: Bytes) -> ApiResult<Json<FailWeightResponse>> {
    let req: FailWeightRequest = json_body(&body)?;
    let outcomes = parse_performance_string(&req.performance)?;
    let weight = fail_weight(outcomes.iter().copied())?;
    Ok(Json(FailWeightResponse {
        n: outcomes.len(),
        fails: outcomes.iter().filter(|o| o.is_fail()).count(),
        pass_weight: weight.complement(),
        weight,
        performance: req.performance,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BayesRequest {
    scheme: BayesScheme,
    payload: serde_json::Value,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
enum BayesScheme {
    /// Uniform prior over the parents of one student's grouped performance.
    Uniform,
    /// Cohort counts, published arithmetic.
    Paper,
    /// Cohort counts, likelihoods normalized by all fails.
    Consistent,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupInput {
    parent: String,
    performance: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UniformPayload {
    groups: Vec<GroupInput>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CountsInput {
    Csv(String),
    Rows(Vec<CountRow>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AggregatePayload {
    counts: CountsInput,
    leaf: Option<String>,
}

#[derive(Serialize)]
struct PosteriorEntry {
    target: NodeId,
    posterior: ExactValue,
}

#[derive(Serialize)]
struct BayesResponse {
    scheme: BayesScheme,
    posteriors: Vec<PosteriorEntry>,
    total: ExactValue,
}

async fn analytics_bayes(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<BayesResponse>> {
    let req: BayesRequest = json_body(&body)?;
    let payload_err = |e: serde_json::Error| ApiError::invalid_request(format!("invalid payload: {e}"));
    let entries: Vec<(NodeId, num_rational::BigRational)> = match req.scheme {
        BayesScheme::Uniform => {
            let p: UniformPayload = serde_json::from_value(req.payload).map_err(payload_err)?;
            let mut groups = Vec::with_capacity(p.groups.len());
            for gi in &p.groups {
                let perf = PerformanceVector::from_string(&state.graph, &gi.parent, &gi.performance)?;
                groups.push((NodeId::new(gi.parent.as_str()).map_err(|e| ApiError::invalid_request(e.to_string()))?, perf));
            }
            let table = bayes_fail_posterior(&uniform_scheme_joints(&GroupPerformance::new(groups)?))?;
            table.entries.into_iter().map(|p| (p.target, p.posterior.into_ratio())).collect()
        }
        BayesScheme::Paper | BayesScheme::Consistent => {
            let scheme = match req.scheme {
                BayesScheme::Paper => AggregateScheme::Paper,
                _ => AggregateScheme::Consistent,
            };
            let p: AggregatePayload = serde_json::from_value(req.payload).map_err(payload_err)?;
            let counts = match p.counts {
                CountsInput::Csv(text) => parse_counts_csv(&text)?,
                CountsInput::Rows(rows) => AggregateCounts::new(rows)?,
            };
            let targets: Vec<NodeId> = match &p.leaf {
                Some(l) => {
                    let id = state.graph.resolve_leaf(l).cloned();
                    vec![id.unwrap_or(NodeId::new(l.as_str()).map_err(|e| ApiError::invalid_request(e.to_string()))?)]
                }
                None => counts.rows().iter().map(|r| r.leaf.clone()).collect(),
            };
            let mut out = Vec::with_capacity(targets.len());
            for t in targets {
                let v = aggregate_scheme_posterior(&counts, t.as_str(), scheme)?;
                out.push((t, v));
            }
            out
        }
    };
    let total: num_rational::BigRational = entries.iter().map(|(_, v)| v.clone()).sum();
    Ok(Json(BayesResponse {
        scheme: req.scheme,
        posteriors: entries.iter().map(|(t, v)| PosteriorEntry { target: t.clone(), posterior: v.into() }).collect(),
        total: (&total).into(),
    }))
}

async fn analytics_entropy(body: Bytes) -> ApiResult<Json<GainReport>> {
    let d = parse_episodes_csv(text_body(&body)?)?;
    Ok(Json(gain_report(&d)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeParams {
    criterion: Option<Criterion>,
    min_leaf: Option<usize>,
    min_admissible_branches: Option<usize>,
    split: Option<f64>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct TreeResponse {
    config: TrainConfig,
    tree: DecisionTree,
    text: String,
    train: ConfusionMatrix,
    test: Option<ConfusionMatrix>,
    train_records: usize,
    test_records: usize,
}

async fn analytics_tree(
    params: Result<Query<TreeParams>, QueryRejection>,
    body: Bytes,
) -> ApiResult<Json<TreeResponse>> {
    let Query(params) = params.map_err(|e| ApiError::invalid_request(e.body_text()))?;
    let d = parse_episodes_csv(text_body(&body)?)?;
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        criterion: params.criterion.unwrap_or(defaults.criterion),
        min_leaf: params.min_leaf.unwrap_or(defaults.min_leaf),
        min_admissible_branches: params.min_admissible_branches.unwrap_or(defaults.min_admissible_branches),
    };
    let (train, test) = match params.split {
        Some(f) => {
            let (a, b) = split_dataset(&d, &SplitSpec { train_fraction: f, seed: params.seed.unwrap_or(0) })?;
            (a, Some(b))
        }
        None => (d, None),
    };
    let tree = build_tree(&train, &config)?;
    Ok(Json(TreeResponse {
        config,
        text: tree.render_text(),
        train: evaluate(&tree, &train)?,
        test: test.as_ref().map(|t| evaluate(&tree, t)).transpose()?,
        train_records: train.len(),
        test_records: test.as_ref().map_or(0, |t| t.len()),
        tree,
    }))
}

#[derive(Serialize)]
struct WeightPair {
    failures: u32,
    pass: Probability,
    fail: Probability,
}

#[derive(Serialize)]
struct WeightTableResponse {
    n: u32,
    pairs: Vec<WeightPair>,
}

async fn analytics_weight_table(Query(q): Query<BTreeMap<String, String>>) -> ApiResult<Json<WeightTableResponse>> {
    let raw = q.get("n").ok_or_else(|| ApiError::invalid_request("missing query parameter n"))?;
    let n: u32 = raw.parse().map_err(|_| ApiError::invalid_request(format!("n must be a positive integer, got {raw:?}")))?;
    let row = WeightTableRow::new(n)?;
    let pairs = (0..=n)
        .map(|j| {
            let (pass, fail) = row.pair(j).expect("j within row");
            WeightPair { failures: j, pass, fail }
        })
        .collect();
    Ok(Json(WeightTableResponse { n, pairs }))
}
