//! HTTP endpoints over one session. Every mutating endpoint turns its JSON
//! body into a [`UserAction`] and answers with the log sequence number
//! plus the action's output; reads never wait for agents.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use covermine::blackboard::{BoardError, Direction, FrontEntry};
use covermine::eval::TargetFunction;
use covermine::explore::{self, FeatureStats};
use covermine::expr::ExprError;
use covermine::feedback::{FeedbackError, UserAction};
use covermine::model::{ModelError, Record, RuleList, RuleSet};
use covermine::persist::{export_front, LogEntry};
use covermine::session::{Applied, Session, SessionError, SessionStatus};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

/// Longest accepted long-poll wait on `GET /log`.
const MAX_WAIT_MS: u64 = 30_000;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    /// Character offset of a syntax error in the submitted text.
    pub position: Option<usize>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            position: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(p) = self.position {
            body["position"] = p.into();
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        let position = match &e {
            ModelError::Syntax { position, .. } => Some(*position),
            _ => None,
        };
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            message: e.to_string(),
            position,
        }
    }
}

impl From<ExprError> for ApiError {
    fn from(e: ExprError) -> Self {
        let position = match &e {
            ExprError::Syntax { position, .. } => Some(*position),
            _ => None,
        };
        let status = match e {
            ExprError::NameCollision(_) => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError {
            status,
            message: e.to_string(),
            position,
        }
    }
}

impl From<BoardError> for ApiError {
    fn from(e: BoardError) -> Self {
        let status = match &e {
            BoardError::Model(m) => return m.clone().into(),
            BoardError::Conflict(_) | BoardError::NothingToUndo => StatusCode::CONFLICT,
            BoardError::UnknownAction(_) | BoardError::UnknownRule(_) | BoardError::UnknownEntry(_) => {
                StatusCode::NOT_FOUND
            }
            BoardError::Eval(_) | BoardError::InvalidArgument(_) => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Feedback(f) => match f {
                FeedbackError::Board(b) => b.into(),
                FeedbackError::Model(m) => m.into(),
                FeedbackError::Expr(x) => x.into(),
                FeedbackError::Eval(_) | FeedbackError::Invalid(_) => {
                    ApiError::new(StatusCode::BAD_REQUEST, f.to_string())
                }
                FeedbackError::UnknownRecord(_) => ApiError::new(StatusCode::NOT_FOUND, f.to_string()),
                FeedbackError::AgentsRunning => ApiError::new(StatusCode::CONFLICT, f.to_string()),
            },
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Clone)]
struct AppState {
    session: Arc<Session>,
}

/// All endpoints, plus the UI from `ui` (or a placeholder page) on
/// every other path.
pub fn router(session: Arc<Session>, ui: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/front", get(front))
        .route("/front/navigate", get(navigate))
        .route("/front/best", get(best))
        .route("/front/trim", post(|s, b| act("trim", s, b)))
        .route("/front/{digest}", get(entry))
        .route("/rulesets", post(|s, b| act("submitRuleset", s, b)))
        .route("/feedback/reject", post(|s, b| act("reject", s, b)))
        .route("/feedback/accept", post(|s, b| act("accept", s, b)))
        .route("/feedback/undo", post(|s, b| act("undo", s, b)))
        .route("/feedback/visited", post(|s, b| act("markVisited", s, b)))
        .route("/target-function", post(|s, b| act("setTarget", s, b)))
        .route("/bounds", post(|s, b| act("setBounds", s, b)))
        .route("/stats", get(stats))
        .route("/records/sample", get(sample))
        .route("/records/misclassified", get(misclassified))
        .route("/records/default-branch", get(default_branch))
        .route("/features/computed", post(|s, b| act("addComputedFeature", s, b)))
        .route("/records/remove", post(|s, b| act("removeRecords", s, b)))
        .route("/records/relabel", post(|s, b| act("relabel", s, b)))
        .route("/agents/start", post(|s, b| act("startAgents", s, b)))
        .route("/agents/stop", post(|s, b| act("stopAgents", s, b)))
        .route("/status", get(status))
        .route("/log", get(log))
        .with_state(AppState { session });
    match ui {
        Some(dir) => api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

const PLACEHOLDER: &str = "<!doctype html><title>covermine</title>\
<p>covermine is running. Start the service with <code>--ui &lt;dir&gt;</code> to serve the web UI; \
the JSON API is under <a href=\"/status\">/status</a>, <a href=\"/front\">/front</a> and friends.";

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

/// Reads `body` as the fields of the action `kind`; an empty body means no
/// fields.
fn parse_action(kind: &str, body: &[u8]) -> Result<UserAction, ApiError> {
    let mut fields: Value = if body.iter().all(u8::is_ascii_whitespace) {
        json!({})
    } else {
        serde_json::from_slice(body)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?
    };
    let obj = fields
        .as_object_mut()
        .ok_or_else(|| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "body must be a JSON object"))?;
    obj.insert("kind".into(), kind.into());
    serde_json::from_value(fields).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))
}

async fn act(kind: &'static str, State(st): State<AppState>, body: Bytes) -> ApiResult<Applied> {
    let action = parse_action(kind, &body)?;
    let applied = blocking(move || Ok(st.session.apply(action)?)).await?;
    Ok(Json(applied))
}

// --- front ---------------------------------------------------------------

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RuleMark {
    list: RuleList,
    rule: String,
    visited: bool,
    accepted: bool,
}

/// A front entry as the UI shows it.
#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntryView {
    #[serde(flatten)]
    entry: FrontEntry,
    /// Thresholds rounded to short numbers with the same matches.
    display: String,
    rules: Vec<RuleMark>,
}

fn entry_view(session: &Session, entry: FrontEntry) -> EntryView {
    let board = session.board();
    let (data, visited, restrictions) = (board.data(), board.visited(), board.restrictions());
    let rules = entry
        .ruleset
        .rules()
        .map(|(list, r)| RuleMark {
            list,
            rule: r.to_string(),
            visited: visited.contains(r),
            accepted: restrictions.is_accepted(r),
        })
        .collect();
    EntryView {
        display: explore::format_ruleset(&data, &entry.ruleset),
        rules,
        entry,
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FrontView {
    digest: String,
    objectives: Vec<&'static str>,
    data_version: u64,
    target: TargetFunction,
    bounds: covermine::blackboard::Bounds,
    /// Id of the best in-bounds entry under the target function.
    best: Option<String>,
    entries: Vec<FrontEntry>,
}

async fn front(State(st): State<AppState>) -> ApiResult<FrontView> {
    let board = st.session.board();
    let export = export_front(board);
    let (target, bounds) = (board.target(), board.bounds());
    Ok(Json(FrontView {
        digest: export.digest,
        objectives: export.objectives,
        data_version: board.data_version(),
        best: board.best(&target, &bounds).map(|e| e.id),
        target,
        bounds,
        entries: export.entries,
    }))
}

async fn entry(State(st): State<AppState>, Path(digest): Path<String>) -> ApiResult<EntryView> {
    let e = st
        .session
        .board()
        .entry(&digest)
        .ok_or_else(|| ApiError::from(BoardError::UnknownEntry(digest)))?;
    Ok(Json(entry_view(&st.session, e)))
}

/// A dimension given by index or objective name.
fn dimension(session: &Session, dim: &str) -> Result<usize, ApiError> {
    let objectives = session.board().objectives();
    dim.parse::<usize>()
        .ok()
        .filter(|&d| d < objectives.len())
        .or_else(|| objectives.index_of(dim))
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, format!("no dimension `{dim}`")))
}

#[derive(Deserialize)]
struct NavigateQuery {
    from: String,
    dim: String,
    dir: Direction,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Navigated {
    entry: EntryView,
    /// `from` is already the last entry in that direction.
    at_boundary: bool,
}

async fn navigate(State(st): State<AppState>, Query(q): Query<NavigateQuery>) -> ApiResult<Navigated> {
    let dim = dimension(&st.session, &q.dim)?;
    let (e, at_boundary) = st.session.board().navigate(&q.from, dim, q.dir)?;
    Ok(Json(Navigated {
        entry: entry_view(&st.session, e),
        at_boundary,
    }))
}

#[derive(Deserialize)]
struct BestQuery {
    dim: Option<String>,
}

async fn best(State(st): State<AppState>, Query(q): Query<BestQuery>) -> ApiResult<EntryView> {
    let board = st.session.board();
    let found = match q.dim {
        Some(d) => board.best_in_dim(dimension(&st.session, &d)?)?,
        None => board.best(&board.target(), &board.bounds()),
    };
    let e = found.ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no entry within bounds"))?;
    Ok(Json(entry_view(&st.session, e)))
}

// --- data exploration ----------------------------------------------------

#[derive(Deserialize)]
struct RecordQuery {
    ruleset: Option<String>,
    n: Option<usize>,
    seed: Option<u64>,
}

impl RecordQuery {
    fn ruleset(&self, session: &Session) -> Result<Option<RuleSet>, ApiError> {
        self.ruleset
            .as_deref()
            .map(|t| RuleSet::parse(t, session.board().data().features()))
            .transpose()
            .map_err(ApiError::from)
    }

    fn required(&self, session: &Session) -> Result<RuleSet, ApiError> {
        self.ruleset(session)?
            .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "missing `ruleset`"))
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct StatsView {
    data_version: u64,
    records: usize,
    features: Vec<FeatureStats>,
}

async fn stats(State(st): State<AppState>, Query(q): Query<RecordQuery>) -> ApiResult<StatsView> {
    let rs = q.ruleset(&st.session)?;
    let board = st.session.board();
    let (data, data_version) = (board.data(), board.data_version());
    let subset = explore::subset(&data, rs.as_ref())?;
    Ok(Json(StatsView {
        data_version,
        records: subset.count_ones(..),
        features: explore::stats(&data, &subset),
    }))
}

async fn sample(State(st): State<AppState>, Query(q): Query<RecordQuery>) -> ApiResult<Vec<Record>> {
    let rs = q.ruleset(&st.session)?;
    let data = st.session.board().data();
    let subset = explore::subset(&data, rs.as_ref())?;
    Ok(Json(explore::sample_records(
        &data,
        &subset,
        q.n.unwrap_or(20),
        q.seed.unwrap_or(0),
    )))
}

async fn misclassified(
    State(st): State<AppState>,
    Query(q): Query<RecordQuery>,
) -> ApiResult<explore::Misclassified> {
    let rs = q.required(&st.session)?;
    Ok(Json(explore::misclassified(&st.session.board().data(), &rs)?))
}

async fn default_branch(State(st): State<AppState>, Query(q): Query<RecordQuery>) -> ApiResult<Vec<Record>> {
    let rs = q.required(&st.session)?;
    Ok(Json(explore::default_branch(
        &st.session.board().data(),
        &rs,
        q.n.unwrap_or(20),
        q.seed.unwrap_or(0),
    )?))
}

// --- session -------------------------------------------------------------

async fn status(State(st): State<AppState>) -> ApiResult<SessionStatus> {
    Ok(Json(st.session.status()))
}

#[derive(Deserialize)]
struct LogQuery {
    #[serde(default)]
    since: u64,
    /// Milliseconds to wait for new entries when there are none yet.
    #[serde(default)]
    wait: u64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct LogPage {
    /// Pass back as `since` to continue.
    position: u64,
    entries: Vec<LogEntry>,
}

async fn log(State(st): State<AppState>, Query(q): Query<LogQuery>) -> ApiResult<LogPage> {
    let log = st.session.log().clone();
    let entries = if q.wait == 0 {
        log.since(q.since)
    } else {
        let wait = Duration::from_millis(q.wait.min(MAX_WAIT_MS));
        let waiter = log.clone();
        blocking(move || Ok(waiter.wait_since(q.since, wait))).await?
    };
    // sequence numbers start at 1, so the position is the last seq seen
    let position = entries
        .last()
        .map_or_else(|| q.since.min(log.position()), |e| e.seq);
    Ok(Json(LogPage { position, entries }))
}
