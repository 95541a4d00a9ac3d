use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::analytics::{self, weekly_entropy};
use crate::reflexion::{decide_adr, list_adrs, load_constitution, verdicts};
use crate::vault::{Author, DocKind, MarkdownDoc, ReadWindow, VaultError};
use crate::week::{IsoWeek, WeekRange};
use crate::Error;

use super::listen::ChatRequest;
use super::Runtime;

type Shared = Arc<Runtime>;

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl From<VaultError> for ApiError {
    fn from(e: VaultError) -> Self {
        ApiError(e.into())
    }
}

fn status_of(e: &Error) -> StatusCode {
    match e {
        Error::Invalid(_) | Error::Parse { .. } | Error::NotInvocable(_) => StatusCode::BAD_REQUEST,
        Error::Vault(VaultError::Authorship(_)) => StatusCode::CONFLICT,
        Error::Vault(
            VaultError::UnknownStream(_)
            | VaultError::PathEscape(_)
            | VaultError::KindMismatch { .. }
            | VaultError::Frontmatter { .. }
            | VaultError::Schema { .. },
        ) => StatusCode::BAD_REQUEST,
        Error::NotFound(_) => StatusCode::NOT_FOUND,
        Error::Conflict(_) | Error::ImproveInProgress(_) | Error::RevisionBlocked(_) => StatusCode::CONFLICT,
        Error::Precondition(_) | Error::NoEpisodes(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Error::Gateway(_) => StatusCode::BAD_GATEWAY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = status_of(&self.0);
        (status, Json(json!({"error": self.0.to_string()}))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn bad(msg: impl Into<String>) -> ApiError {
    ApiError(Error::Invalid(msg.into()))
}

/// Run blocking vault work off the async executor.
async fn blocking<T, F>(rt: &Shared, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Runtime) -> crate::Result<T> + Send + 'static,
{
    let rt = rt.clone();
    tokio::task::spawn_blocking(move || f(&rt))
        .await
        .map_err(|e| ApiError(Error::Invalid(format!("worker failed: {e}"))))?
        .map_err(ApiError)
}

fn parse_week(s: &str) -> ApiResult<IsoWeek> {
    s.parse().map_err(|e: crate::week::ParseWeekError| bad(e.to_string()))
}

fn week_range(from: Option<&str>, to: Option<&str>) -> ApiResult<Option<WeekRange>> {
    Ok(match (from, to) {
        (None, None) => None,
        (Some(a), None) => Some(WeekRange::single(parse_week(a)?)),
        (None, Some(b)) => Some(WeekRange::single(parse_week(b)?)),
        (Some(a), Some(b)) => Some(WeekRange::new(parse_week(a)?, parse_week(b)?)),
    })
}

async fn chat(State(rt): State<Shared>, Json(req): Json<ChatRequest>) -> ApiResult<Response> {
    let rec = blocking(&rt, move |rt| rt.handle_message(&req)).await?;
    let status = if rec.error.is_some() {
        StatusCode::BAD_GATEWAY
    } else {
        StatusCode::OK
    };
    Ok((status, Json(rec)).into_response())
}

#[derive(Deserialize)]
struct StreamQuery {
    from_seq: Option<u64>,
    to_seq: Option<u64>,
    from: Option<String>,
    to: Option<String>,
}

async fn stream(State(rt): State<Shared>, Path(name): Path<String>, Query(q): Query<StreamQuery>) -> ApiResult<Json<Value>> {
    let window = match (q.from_seq, q.to_seq, q.from.as_deref(), q.to.as_deref()) {
        (None, None, None, None) => ReadWindow::All,
        (a, b, None, None) => ReadWindow::Seq {
            from: a.unwrap_or(1),
            to: b.unwrap_or(u64::MAX),
        },
        (None, None, a, b) => {
            let ts = |s: Option<&str>, dflt| match s {
                None => Ok(dflt),
                Some(s) => crate::clock::parse_ts(s).ok_or_else(|| bad(format!("bad timestamp `{s}`"))),
            };
            ReadWindow::Time {
                from: ts(a, chrono::DateTime::<chrono::Utc>::MIN_UTC)?,
                to: ts(b, chrono::DateTime::<chrono::Utc>::MAX_UTC)?,
            }
        }
        _ => return Err(bad("use either a seq window or a time window")),
    };
    let read = blocking(&rt, move |rt| Ok(rt.harness.vault.read_stream(&name, window)?)).await?;
    let diagnostics: Vec<Value> = read
        .diagnostics
        .iter()
        .map(|d| json!({"line": d.line, "message": d.message}))
        .collect();
    Ok(Json(json!({"records": read.records, "diagnostics": diagnostics})))
}

#[derive(Deserialize)]
struct DocsQuery {
    kind: Option<String>,
    week: Option<String>,
}

async fn docs(State(rt): State<Shared>, Query(q): Query<DocsQuery>) -> ApiResult<Json<Vec<MarkdownDoc>>> {
    let kind = q.kind.as_deref().map(str::parse::<DocKind>).transpose().map_err(bad)?;
    let range = q.week.as_deref().map(parse_week).transpose()?.map(WeekRange::single);
    let docs = blocking(&rt, move |rt| {
        let v = &rt.harness.vault;
        let mut out = match kind {
            Some(k) => v.query_docs(k, range)?,
            None => v.all_docs()?,
        };
        if let Some(r) = range {
            out.retain(|d| d.iso_week().is_some_and(|w| r.contains(w)));
        }
        Ok(out)
    })
    .await?;
    Ok(Json(docs))
}

#[derive(Deserialize)]
struct NewDoc {
    kind: DocKind,
    /// File name inside the kind's root.
    name: String,
    body: String,
    week: Option<String>,
}

/// Documents written through the API are authored by the human partner.
async fn post_doc(State(rt): State<Shared>, Json(d): Json<NewDoc>) -> ApiResult<Json<Value>> {
    if d.name.contains('/') || d.name.contains('\\') || !d.name.ends_with(".md") {
        return Err(bad("name must be a bare `.md` file name"));
    }
    let week = d.week.as_deref().map(parse_week).transpose()?;
    let path = blocking(&rt, move |rt| {
        let v = &rt.harness.vault;
        let now = v.now();
        let path = v.layout().doc_root(d.kind).join(&d.name);
        let doc = MarkdownDoc::new(
            d.kind,
            path,
            Author::Human,
            week.unwrap_or_else(|| IsoWeek::of(now)),
            now,
            "api",
            d.body,
        );
        Ok(v.write_doc(&doc)?)
    })
    .await?;
    Ok(Json(json!({"path": path})))
}

#[derive(Deserialize)]
struct JournalEntry {
    text: String,
    #[serde(default)]
    title: Option<String>,
}

async fn journal(State(rt): State<Shared>, Json(j): Json<JournalEntry>) -> ApiResult<Json<MarkdownDoc>> {
    let doc = blocking(&rt, move |rt| rt.write_journal(&j.text, j.title.as_deref())).await?;
    Ok(Json(doc))
}

#[derive(Deserialize)]
struct WeeksQuery {
    from: Option<String>,
    to: Option<String>,
}

async fn entropy(State(rt): State<Shared>, Query(q): Query<WeeksQuery>) -> ApiResult<Json<Value>> {
    let range = week_range(q.from.as_deref(), q.to.as_deref())?;
    let series = blocking(&rt, move |rt| weekly_entropy(&rt.harness.vault, range)).await?;
    Ok(Json(serde_json::to_value(series).expect("serializable")))
}

async fn conformance(State(rt): State<Shared>) -> ApiResult<Json<Value>> {
    let report = blocking(&rt, |rt| analytics::conformance(&rt.harness)).await?;
    Ok(Json(serde_json::to_value(report).expect("serializable")))
}

async fn honesty(State(rt): State<Shared>, Query(q): Query<WeeksQuery>) -> ApiResult<Json<Value>> {
    let range = week_range(q.from.as_deref(), q.to.as_deref())?;
    let report = blocking(&rt, move |rt| analytics::honesty(&rt.harness, range)).await?;
    Ok(Json(serde_json::to_value(report).expect("serializable")))
}

async fn uptake(State(rt): State<Shared>) -> ApiResult<Json<Value>> {
    let chains = blocking(&rt, |rt| analytics::uptake(&rt.harness)).await?;
    Ok(Json(serde_json::to_value(chains).expect("serializable")))
}

async fn lock_in(State(rt): State<Shared>, Query(q): Query<WeeksQuery>) -> ApiResult<Json<Value>> {
    let range = week_range(q.from.as_deref(), q.to.as_deref())?;
    let report = blocking(&rt, move |rt| analytics::lock_in(&rt.harness, range)).await?;
    Ok(Json(serde_json::to_value(report).expect("serializable")))
}

async fn verdict_list(State(rt): State<Shared>) -> ApiResult<Json<Value>> {
    let v = blocking(&rt, |rt| verdicts(&rt.harness)).await?;
    let rows: Vec<Value> = v
        .into_iter()
        .map(|(ts, ep)| {
            let mut row = serde_json::to_value(ep).expect("serializable");
            row["ts"] = json!(crate::clock::format_ts(ts));
            row
        })
        .collect();
    Ok(Json(Value::Array(rows)))
}

async fn adrs(State(rt): State<Shared>) -> ApiResult<Json<Value>> {
    let list = blocking(&rt, |rt| list_adrs(&rt.harness)).await?;
    Ok(Json(serde_json::to_value(list).expect("serializable")))
}

async fn adopt(State(rt): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let d = blocking(&rt, move |rt| decide_adr(&rt.harness, &id, true)).await?;
    Ok(Json(serde_json::to_value(d).expect("serializable")))
}

async fn reject(State(rt): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let d = blocking(&rt, move |rt| decide_adr(&rt.harness, &id, false)).await?;
    Ok(Json(serde_json::to_value(d).expect("serializable")))
}

async fn constitution(State(rt): State<Shared>) -> ApiResult<Json<Value>> {
    let c = blocking(&rt, |rt| load_constitution(&rt.harness.vault)).await?;
    Ok(Json(json!({"version": c.version, "principles": c.principles})))
}

/// Every record appended to any stream, as it lands.
async fn events(State(rt): State<Shared>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = rt.harness.vault.subscribe();
    let (tx, rx_async) = tokio::sync::mpsc::channel(256);
    std::thread::spawn(move || {
        while let Ok(rec) = rx.recv() {
            if tx.blocking_send(rec).is_err() {
                break;
            }
        }
    });
    let stream = futures::stream::unfold(rx_async, |mut rx| async move {
        let rec = rx.recv().await?;
        let ev = Event::default()
            .event(rec.stream.clone())
            .id(format!("{}:{}", rec.stream, rec.seq))
            .json_data(&rec)
            .unwrap_or_else(|_| Event::default().comment("unserializable record"));
        Some((Ok(ev), rx))
    });
    Sse::new(stream).keep_alive(KeepAlive::default())
}

async fn health(State(rt): State<Shared>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "vault": rt.harness.vault.root(),
        "now": crate::clock::format_ts(rt.harness.now()),
    }))
}

pub fn router(rt: Arc<Runtime>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/chat", post(chat))
        .route("/streams/{name}", get(stream))
        .route("/docs", get(docs).post(post_doc))
        .route("/journal", post(journal))
        .route("/analytics/entropy", get(entropy))
        .route("/analytics/conformance", get(conformance))
        .route("/analytics/honesty", get(honesty))
        .route("/analytics/uptake", get(uptake))
        .route("/analytics/lock-in", get(lock_in))
        .route("/analytics/verdicts", get(verdict_list))
        .route("/events", get(events))
        .route("/adr", get(adrs))
        .route("/adr/{id}/adopt", post(adopt))
        .route("/adr/{id}/reject", post(reject))
        .route("/constitution", get(constitution))
        .with_state(rt)
}

/// Bind and serve until the future is dropped or the process is stopped.
pub async fn serve(rt: Arc<Runtime>, bind: &str) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| Error::Invalid(format!("cannot bind {bind}: {e}")))?;
    tracing::info!("listening on {bind}");
    axum::serve(listener, router(rt))
        .await
        .map_err(|e| Error::Invalid(format!("server stopped: {e}")))
}
