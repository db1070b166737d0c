//! Local JSON API for pair review and inconsistency triage.
//!
//! Reads take a shared lock on the review state. Verdicts are serialized
//! through the write lock: validated, appended to the log file, then applied,
//! so the log never lags the served state.

use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Map, Value};

use rulediff_core::diff::{InconsistencyRecord, Location};
use rulediff_core::mapping::PairCandidate;
use rulediff_core::triage::{
    Consensus, LabelState, Subject, SubjectKind, TriageError, TriageVerdict,
};
use rulediff_core::{BugPattern, RuleDescriptor, RuleRef, Verdict};

use crate::formats;
use crate::review::ReviewState;

pub const DEFAULT_PAGE_SIZE: usize = 50;
pub const MAX_PAGE_SIZE: usize = 500;
const CONTEXT_LINES: u32 = 3;
const MAX_CONTEXT: u32 = 60;

pub type Clock = Box<dyn Fn() -> u64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Box::new(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    })
}

pub struct App {
    pub state: RwLock<ReviewState>,
    pub log_path: PathBuf,
    pub rules: BTreeMap<RuleRef, RuleDescriptor>,
    pub source_root: Option<PathBuf>,
    /// Rewritten after every pair verdict with the current confirmed pairs.
    pub confirmed_out: Option<PathBuf>,
    pub clock: Clock,
}

impl App {
    pub fn new(state: ReviewState, log_path: PathBuf) -> Self {
        Self {
            state: RwLock::new(state),
            log_path,
            rules: BTreeMap::new(),
            source_root: None,
            confirmed_out: None,
            clock: system_clock(),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    fields: Vec<FieldError>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            fields: Vec::new(),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("unknown {what} {id:?}"),
        )
    }

    fn invalid(fields: Vec<FieldError>) -> Self {
        Self {
            fields,
            ..Self::new(
                StatusCode::BAD_REQUEST,
                "invalid_request",
                "request failed validation",
            )
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body =
            json!({"error": {"code": self.code, "message": self.message, "fields": self.fields}});
        (self.status, Json(body)).into_response()
    }
}

fn field(field: &str, message: impl Into<String>) -> FieldError {
    FieldError {
        field: field.into(),
        message: message.into(),
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(app: Arc<App>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/candidates", get(list_candidates))
        .route("/candidates/{id}", get(get_candidate))
        .route("/candidates/{id}/verdict", post(post_pair_verdict))
        .route("/inconsistencies", get(list_inconsistencies))
        .route("/inconsistencies/{id}", get(get_inconsistency))
        .route("/inconsistencies/{id}/label", post(post_label))
        .route("/report", get(report))
        .route("/progress", get(progress))
        .route("/patterns", get(patterns))
        .route("/confirmed", get(confirmed))
        .fallback(|| async {
            ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
        })
        .with_state(app)
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok", "version": env!("CARGO_PKG_VERSION")}))
}

fn read(app: &App) -> std::sync::RwLockReadGuard<'_, ReviewState> {
    app.state.read().unwrap_or_else(|e| e.into_inner())
}

#[derive(Debug, Serialize)]
struct Page<T> {
    page: usize,
    size: usize,
    total: usize,
    pages: usize,
    items: Vec<T>,
}

fn paging(q: &BTreeMap<String, String>) -> Result<(usize, usize), ApiError> {
    let mut errors = Vec::new();
    let mut num = |name: &str, default: usize, max: usize| match q.get(name) {
        None => default,
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 && n <= max => n,
            _ => {
                errors.push(field(name, format!("must be an integer in 1..={max}")));
                default
            }
        },
    };
    let page = num("page", 1, usize::MAX);
    let size = num("size", DEFAULT_PAGE_SIZE, MAX_PAGE_SIZE);
    if errors.is_empty() {
        Ok((page, size))
    } else {
        Err(ApiError::invalid(errors))
    }
}

fn paginate<T>(items: Vec<T>, page: usize, size: usize) -> Page<T> {
    let total = items.len();
    let items = items
        .into_iter()
        .skip((page - 1).saturating_mul(size))
        .take(size)
        .collect();
    Page {
        page,
        size,
        total,
        pages: total.div_ceil(size),
        items,
    }
}

#[derive(Debug, Serialize)]
struct RulePair<'a> {
    a: Option<&'a RuleDescriptor>,
    b: Option<&'a RuleDescriptor>,
}

#[derive(Debug, Serialize)]
struct CandidateView<'a> {
    #[serde(flatten)]
    candidate: &'a PairCandidate,
    consensus: Consensus,
    votes: BTreeMap<String, Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rules: Option<RulePair<'a>>,
}

fn candidate_view<'a>(
    app: &'a App,
    state: &ReviewState,
    c: &'a PairCandidate,
) -> CandidateView<'a> {
    CandidateView {
        candidate: c,
        consensus: state.consensus(c.id.as_str()),
        votes: state.votes(&Subject::pair(c.id.as_str())),
        rules: (!app.rules.is_empty()).then(|| RulePair {
            a: app.rules.get(&c.rule_a),
            b: app.rules.get(&c.rule_b),
        }),
    }
}

fn parse_consensus(v: &str) -> Option<Consensus> {
    serde_json::from_value(Value::String(v.into())).ok()
}

async fn list_candidates(
    State(app): State<Arc<App>>,
    Query(q): Query<BTreeMap<String, String>>,
) -> Result<Response, ApiError> {
    let (page, size) = paging(&q)?;
    let filter = match q.get("status") {
        None => None,
        Some(s) => Some(parse_consensus(s).ok_or_else(|| {
            ApiError::invalid(vec![field(
                "status",
                "one of pending, confirmed, rejected, needs_discussion",
            )])
        })?),
    };
    let state = read(&app);
    let items: Vec<CandidateView> = state
        .candidates
        .iter()
        .map(|c| candidate_view(&app, &state, c))
        .filter(|v| filter.is_none_or(|f| v.consensus == f))
        .collect();
    Ok(Json(paginate(items, page, size)).into_response())
}

async fn get_candidate(
    State(app): State<Arc<App>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let state = read(&app);
    let c = state
        .candidate(&id)
        .ok_or_else(|| ApiError::not_found("candidate", &id))?;
    Ok(Json(candidate_view(&app, &state, c)).into_response())
}

#[derive(Debug, Serialize)]
struct Context {
    start: u32,
    lines: Vec<String>,
}

#[derive(Debug, Serialize)]
struct LabelView {
    state: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pattern: Option<BugPattern>,
}

#[derive(Debug, Serialize)]
struct InconsistencyView<'a> {
    #[serde(flatten)]
    record: &'a InconsistencyRecord,
    warning_rule: &'a RuleRef,
    silent_rule: &'a RuleRef,
    label: LabelView,
    votes: BTreeMap<String, Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    context: Option<Context>,
}

fn label_view(state: LabelState) -> LabelView {
    match state {
        LabelState::Unlabeled => LabelView {
            state: "unlabeled",
            verdict: None,
            pattern: None,
        },
        LabelState::Agreed(verdict, pattern) => LabelView {
            state: "agreed",
            verdict: Some(verdict),
            pattern,
        },
        LabelState::Disputed => LabelView {
            state: "disputed",
            verdict: None,
            pattern: None,
        },
    }
}

/// Only plain relative paths may be resolved under the source root.
fn safe_join(root: &Path, project: &str, file: &str) -> Option<PathBuf> {
    let rel = Path::new(project).join(file);
    rel.components()
        .all(|c| matches!(c, Component::Normal(_)))
        .then(|| root.join(rel))
}

fn context(root: &Path, r: &InconsistencyRecord) -> Option<Context> {
    let path = safe_join(root, &r.project, &r.file)?;
    let text = std::fs::read_to_string(path).ok()?;
    let (lo, hi) = match &r.location {
        Location::Line { line } => (*line, *line),
        Location::Method { start, end, .. } => (*start, *end),
    };
    let start = lo.saturating_sub(CONTEXT_LINES).max(1);
    let end = (hi + CONTEXT_LINES).min(start + MAX_CONTEXT - 1);
    let lines = text
        .lines()
        .skip(start as usize - 1)
        .take((end - start + 1) as usize)
        .map(str::to_string)
        .collect();
    Some(Context { start, lines })
}

fn inconsistency_view<'a>(
    app: &App,
    state: &ReviewState,
    r: &'a InconsistencyRecord,
) -> InconsistencyView<'a> {
    InconsistencyView {
        record: r,
        warning_rule: r.warning_rule(),
        silent_rule: r.silent_rule(),
        label: label_view(state.store.inconsistency_label(r.id.as_str())),
        votes: state.votes(&Subject::inconsistency(r.id.as_str())),
        context: app.source_root.as_deref().and_then(|root| context(root, r)),
    }
}

async fn list_inconsistencies(
    State(app): State<Arc<App>>,
    Query(q): Query<BTreeMap<String, String>>,
) -> Result<Response, ApiError> {
    let (page, size) = paging(&q)?;
    let state = read(&app);
    let pair = q.get("pair");
    if let Some(p) = pair {
        let known = state.candidate(p).is_some()
            || state.inconsistencies.iter().any(|i| i.pair.as_str() == p);
        if !known {
            return Err(ApiError::not_found("pair", p));
        }
    }
    let items: Vec<InconsistencyView> = state
        .inconsistencies
        .iter()
        .filter(|r| pair.is_none_or(|p| r.pair.as_str() == p))
        .map(|r| inconsistency_view(&app, &state, r))
        .collect();
    Ok(Json(paginate(items, page, size)).into_response())
}

async fn get_inconsistency(
    State(app): State<Arc<App>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let state = read(&app);
    let r = state
        .inconsistency(&id)
        .ok_or_else(|| ApiError::not_found("inconsistency", &id))?;
    Ok(Json(inconsistency_view(&app, &state, r)).into_response())
}

/// Parses and checks a verdict body, collecting every field error.
fn parse_verdict(kind: SubjectKind, id: &str, body: &[u8]) -> Result<TriageVerdict, ApiError> {
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| ApiError::invalid(vec![field("body", format!("invalid JSON: {e}"))]))?;
    let Value::Object(obj) = value else {
        return Err(ApiError::invalid(vec![field(
            "body",
            "expected a JSON object",
        )]));
    };
    let mut errors = Vec::new();
    let string =
        |obj: &Map<String, Value>, name: &str, errors: &mut Vec<FieldError>| match obj.get(name) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                errors.push(field(name, "must be a string"));
                None
            }
        };
    let reviewer = string(&obj, "reviewer", &mut errors);
    if reviewer.as_deref().is_none_or(|r| r.trim().is_empty())
        && !errors.iter().any(|e| e.field == "reviewer")
    {
        errors.push(field("reviewer", "required"));
    }
    let allowed: &[&str] = match kind {
        SubjectKind::Pair => &["accept", "reject"],
        SubjectKind::Inconsistency => &[
            "false_negative_impl",
            "false_negative_def",
            "false_positive",
            "not_a_bug",
            "undecided",
        ],
    };
    let verdict = match string(&obj, "verdict", &mut errors) {
        None if !errors.iter().any(|e| e.field == "verdict") => {
            errors.push(field("verdict", "required"));
            None
        }
        None => None,
        Some(v) if allowed.contains(&v.as_str()) => {
            serde_json::from_value::<Verdict>(Value::String(v)).ok()
        }
        Some(_) => {
            errors.push(field("verdict", format!("one of {}", allowed.join(", "))));
            None
        }
    };
    let pattern = match string(&obj, "pattern", &mut errors) {
        None => None,
        Some(p) => match BugPattern::parse(&p) {
            Some(p) => Some(p),
            None => {
                errors.push(field("pattern", "one of P1..P13 or other"));
                None
            }
        },
    };
    if pattern.is_some() && kind == SubjectKind::Pair {
        errors.push(field("pattern", "not allowed on pair verdicts"));
    } else if let (Some(_), Some(v)) = (pattern, verdict) {
        if !v.admits_pattern() {
            errors.push(field(
                "pattern",
                format!("not allowed with verdict {}", allowed_name(v)),
            ));
        }
    }
    let note = string(&obj, "note", &mut errors).unwrap_or_default();
    for key in obj.keys() {
        if !["reviewer", "verdict", "pattern", "note"].contains(&key.as_str()) {
            errors.push(field(key, "unknown field"));
        }
    }
    if !errors.is_empty() {
        return Err(ApiError::invalid(errors));
    }
    Ok(TriageVerdict {
        subject: Subject {
            kind,
            id: id.to_string(),
        },
        reviewer: reviewer.expect("checked"),
        verdict: verdict.expect("checked"),
        pattern,
        note,
    })
}

fn allowed_name(v: Verdict) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn submit(app: &App, verdict: TriageVerdict) -> Result<(u64, bool), ApiError> {
    let mut state = app.state.write().unwrap_or_else(|e| e.into_inner());
    let subject = verdict.subject.clone();
    let reviewer = verdict.reviewer.clone();
    let prepared = state
        .store
        .prepare(verdict, (app.clock)())
        .map_err(|e| match e {
            TriageError::NotFound { kind, id } => ApiError::not_found(&kind.to_string(), &id),
            other => ApiError::invalid(vec![field("verdict", other.to_string())]),
        })?;
    let Some(entry) = prepared else {
        let seq = state
            .store
            .history()
            .iter()
            .rev()
            .find(|e| e.verdict.subject == subject && e.verdict.reviewer == reviewer)
            .map_or(0, |e| e.seq);
        return Ok((seq, true));
    };
    let seq = entry.seq;
    formats::append_jsonl(&app.log_path, &entry).map_err(|e| ApiError::internal(e.to_string()))?;
    state
        .store
        .restore(entry)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    if subject.kind == SubjectKind::Pair {
        if let Some(path) = &app.confirmed_out {
            formats::write_json(path, &state.confirmed())
                .map_err(|e| ApiError::internal(e.to_string()))?;
        }
    }
    Ok((seq, false))
}

async fn post_pair_verdict(
    State(app): State<Arc<App>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Value> {
    if read(&app).candidate(&id).is_none() {
        return Err(ApiError::not_found("candidate", &id));
    }
    let verdict = parse_verdict(SubjectKind::Pair, &id, &body)?;
    let (seq, duplicate) = submit(&app, verdict)?;
    let consensus = read(&app).consensus(&id);
    Ok(Json(
        json!({"id": id, "seq": seq, "duplicate": duplicate, "consensus": consensus}),
    ))
}

async fn post_label(
    State(app): State<Arc<App>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Value> {
    if read(&app).inconsistency(&id).is_none() {
        return Err(ApiError::not_found("inconsistency", &id));
    }
    let verdict = parse_verdict(SubjectKind::Inconsistency, &id, &body)?;
    let (seq, duplicate) = submit(&app, verdict)?;
    let label = label_view(read(&app).store.inconsistency_label(&id));
    Ok(Json(
        json!({"id": id, "seq": seq, "duplicate": duplicate, "label": label}),
    ))
}

async fn report(State(app): State<Arc<App>>) -> Response {
    Json(read(&app).report()).into_response()
}

async fn progress(State(app): State<Arc<App>>) -> Response {
    Json(read(&app).progress()).into_response()
}

async fn confirmed(State(app): State<Arc<App>>) -> Response {
    Json(read(&app).confirmed()).into_response()
}

#[derive(Debug, Serialize)]
struct PatternInfo {
    code: &'static str,
    name: &'static str,
    description: &'static str,
    category: Option<rulediff_core::BugCategory>,
}

async fn patterns() -> Json<Vec<PatternInfo>> {
    Json(
        BugPattern::ALL
            .iter()
            .map(|p| PatternInfo {
                code: p.code(),
                name: p.name(),
                description: p.description(),
                category: p.category(),
            })
            .collect(),
    )
}

/// Binds and serves until the process is stopped.
pub async fn serve(app: Arc<App>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(app)).await
}
