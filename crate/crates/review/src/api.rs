//! HTTP routes over the session store.

use std::io::BufReader;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use techstop::rank::CandidateSet;
use techstop::review::{Event, Label, ReviewError, ReviewItem, SessionExport};

use crate::store::{Store, StoreError};

pub type AppState = Arc<Store>;

pub fn router(store: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(export))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/labels", post(label))
        .route("/sessions/{id}/discrepancies", get(discrepancies))
        .route("/sessions/{id}/consensus", post(consensus))
        .route("/sessions/{id}/alpha", get(alpha))
        .route("/sessions/{id}/finalize", post(finalize))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn bad_request(msg: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": msg.into() }),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        let msg = err.to_string();
        let status = match &err {
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::List(_) => StatusCode::BAD_REQUEST,
            StoreError::Log { .. } | StoreError::Corrupt { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            StoreError::Review(e) => match e {
                ReviewError::UnknownRater(_) | ReviewError::UnknownTerm(_) => StatusCode::NOT_FOUND,
                ReviewError::Finalized
                | ReviewError::Incomplete { .. }
                | ReviewError::NotDisputed(_)
                | ReviewError::Unresolved(_)
                | ReviewError::TooFewTerms
                | ReviewError::NoVariance => StatusCode::CONFLICT,
                _ => StatusCode::BAD_REQUEST,
            },
        };
        let mut body = json!({ "error": msg });
        match &err {
            StoreError::Review(ReviewError::Incomplete { missing }) => {
                let pairs: Vec<_> = missing.iter().map(|(r, t)| json!({ "rater": r, "term": t })).collect();
                body["missing"] = json!(pairs);
            }
            StoreError::Review(ReviewError::Unresolved(terms)) => body["unresolved"] = json!(terms),
            _ => {}
        }
        ApiError { status, body }
    }
}

impl From<ReviewError> for ApiError {
    fn from(err: ReviewError) -> Self {
        StoreError::Review(err).into()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

/// Candidates come from exactly one of: inline `terms`, inline candidate
/// TSV text, or a candidate TSV path readable by the server.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub raters: Vec<String>,
    #[serde(default)]
    pub terms: Option<Vec<String>>,
    #[serde(default)]
    pub candidates_tsv: Option<String>,
    #[serde(default)]
    pub candidates_path: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub candidates: usize,
    pub expected_labels: usize,
}

fn candidates_from(req: &CreateRequest) -> ApiResult<Vec<ReviewItem>> {
    let parse = |set: std::io::Result<CandidateSet>| {
        set.map(|s| ReviewItem::from_candidates(&s))
            .map_err(|e| ApiError::bad_request(format!("candidate TSV: {e}")))
    };
    match (&req.terms, &req.candidates_tsv, &req.candidates_path) {
        (Some(terms), None, None) => Ok(terms.iter().map(ReviewItem::bare).collect()),
        (None, Some(text), None) => parse(CandidateSet::read_tsv(text.as_bytes())),
        (None, None, Some(path)) => {
            let file = std::fs::File::open(path).map_err(|e| ApiError::bad_request(format!("{path}: {e}")))?;
            parse(CandidateSet::read_tsv(BufReader::new(file)))
        }
        _ => Err(ApiError::bad_request(
            "give exactly one of terms, candidates_tsv or candidates_path",
        )),
    }
}

async fn create(State(store): State<AppState>, Json(req): Json<CreateRequest>) -> ApiResult<(StatusCode, Json<Created>)> {
    let candidates = candidates_from(&req)?;
    let n = candidates.len();
    let raters = req.raters.len();
    let session_id = store.create(candidates, req.raters).await?;
    Ok((
        StatusCode::CREATED,
        Json(Created {
            session_id,
            candidates: n,
            expected_labels: n * raters,
        }),
    ))
}

async fn list(State(store): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "sessions": store.ids().await }))
}

async fn export(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionExport>> {
    let entry = store.get(&id).await?;
    let entry = entry.lock().await;
    Ok(Json(entry.session.export()))
}

#[derive(Debug, Deserialize)]
pub struct RaterQuery {
    pub rater: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NextTerm {
    /// `None` once the rater has labeled every candidate.
    pub item: Option<ReviewItem>,
    pub labeled: usize,
    pub total: usize,
}

async fn next(State(store): State<AppState>, Path(id): Path<String>, Query(q): Query<RaterQuery>) -> ApiResult<Json<NextTerm>> {
    let entry = store.get(&id).await?;
    let entry = entry.lock().await;
    let s = &entry.session;
    Ok(Json(NextTerm {
        item: s.next_unlabeled(&q.rater)?.cloned(),
        labeled: s.rater_progress(&q.rater)?,
        total: s.candidates().len(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LabelRequest {
    pub rater: String,
    pub term: String,
    pub label: Label,
}

async fn label(State(store): State<AppState>, Path(id): Path<String>, Json(req): Json<LabelRequest>) -> ApiResult<StatusCode> {
    let entry = store.get(&id).await?;
    entry.lock().await.commit(Event::Label {
        rater: req.rater,
        term: req.term,
        label: req.label,
    })?;
    Ok(StatusCode::NO_CONTENT)
}

async fn discrepancies(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let entry = store.get(&id).await?;
    let entry = entry.lock().await;
    let list = entry.session.discrepancies()?;
    let unresolved = entry.session.unresolved()?;
    Ok(Json(json!({ "discrepancies": list, "unresolved": unresolved })))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConsensusRequest {
    pub term: String,
    pub label: Label,
}

async fn consensus(State(store): State<AppState>, Path(id): Path<String>, Json(req): Json<ConsensusRequest>) -> ApiResult<StatusCode> {
    let entry = store.get(&id).await?;
    entry.lock().await.commit(Event::Consensus {
        term: req.term,
        label: req.label,
    })?;
    Ok(StatusCode::NO_CONTENT)
}

async fn alpha(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let entry = store.get(&id).await?;
    let alpha = entry.lock().await.session.cronbach_alpha()?;
    Ok(Json(json!({ "alpha": alpha })))
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct FinalizeRequest {
    #[serde(default)]
    pub priors: Vec<String>,
}

async fn finalize(State(store): State<AppState>, Path(id): Path<String>, body: Option<Json<FinalizeRequest>>) -> ApiResult<Response> {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    crate::store::resolve_priors(&req.priors)?;
    let entry = store.get(&id).await?;
    let mut entry = entry.lock().await;
    entry.commit(Event::Finalize { priors: req.priors })?;
    let list = entry.final_list()?;
    Ok((
        [
            (header::CONTENT_TYPE, "text/plain; charset=utf-8".to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"stopwords-{id}.txt\"")),
        ],
        list.to_text(),
    )
        .into_response())
}
