//! HTTP planning service.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/scenarios` | scenario text, or JSON `{"generate": {...}}` / `{"text": "..."}` | `201 {"id", "version", "name"}` |
//! | GET | `/scenarios/{id}` | `?from=&count=` row page, `?format=text` | metadata and grids |
//! | PUT | `/scenarios/{id}` | as POST | new version; `409` while jobs are pending |
//! | POST | `/scenarios/{id}/plan` | plan request JSON | `202` job |
//! | POST | `/scenarios/{id}/refine` | refine request JSON | `202` job |
//! | GET | `/scenarios/{id}/coverage` | `?cells=r,c;r,c` | covered cell indices |
//! | GET | `/jobs/{id}` | | job with state and round progress |
//! | GET | `/jobs/{id}/result` | | result JSON; `404` until done |
//! | GET | `/healthz` | | `ok` |
//!
//! Errors are JSON `{"error", "status"}`: `400` malformed bodies, `404`
//! unknown ids, `409` edits racing pending jobs, `422` requests that parse
//! but fail validation. Plan results are byte-identical to the CLI's
//! `plan --out` files for the same scenario and request.

mod error;
mod store;

use std::collections::BTreeMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use facplan::algorithms::Progress;
use facplan::pipeline::{self, PlanRequest, RefineRequest};
use facplan::scenario::{generate_synthetic_region, Candidates, Scenario, ScenarioFile, SyntheticConfig};
use facplan::Cell;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::{OwnedSemaphorePermit, Semaphore};
use tower_http::cors::CorsLayer;

pub use error::ApiError;
pub use store::{Job, JobKind, JobProgress, JobState};
use store::{Store, StoredScenario};

pub const API_VERSION: u32 = 1;
const DEFAULT_PAGE_ROWS: usize = 64;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Jobs executed at once.
    pub workers: usize,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            data_dir: data_dir.into(),
            workers: std::thread::available_parallelism().map_or(2, |n| n.get()),
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    store: Arc<Mutex<Store>>,
    workers: Arc<Semaphore>,
    worker_count: u32,
}

/// Holds every worker slot; queued jobs start once it is dropped.
pub struct Paused {
    _permit: OwnedSemaphorePermit,
}

impl AppState {
    pub fn open(config: &ServiceConfig) -> Result<Self, ApiError> {
        let worker_count = config.workers.clamp(1, Semaphore::MAX_PERMITS) as u32;
        Ok(AppState {
            store: Arc::new(Mutex::new(Store::open(&config.data_dir)?)),
            workers: Arc::new(Semaphore::new(worker_count as usize)),
            worker_count,
        })
    }

    /// Stops starting new jobs until the returned guard is dropped. Running
    /// jobs finish normally.
    pub async fn pause(&self) -> Paused {
        let permit = self
            .workers
            .clone()
            .acquire_many_owned(self.worker_count)
            .await
            .expect("worker semaphore is never closed");
        Paused { _permit: permit }
    }

    fn lock(&self) -> MutexGuard<'_, Store> {
        self.store.lock().unwrap_or_else(|p| p.into_inner())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/scenarios", post(create_scenario))
        .route("/scenarios/{id}", get(get_scenario).put(put_scenario))
        .route("/scenarios/{id}/plan", post(start_plan))
        .route("/scenarios/{id}/refine", post(start_refine))
        .route("/scenarios/{id}/coverage", get(coverage))
        .route("/jobs/{id}", get(get_job))
        .route("/jobs/{id}/result", get(get_result))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(listener: TcpListener, state: AppState, shutdown: impl Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

async fn healthz() -> &'static str {
    "ok"
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateScenario {
    generate: Option<SyntheticConfig>,
    text: Option<String>,
}

fn is_json(headers: &HeaderMap) -> bool {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"))
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let body = if body.iter().all(u8::is_ascii_whitespace) { b"{}".as_slice() } else { body };
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid request body: {e}")))
}

/// Parses an upload into a scenario file. Building isochrones happens in
/// [`build_scenario`].
fn scenario_file(headers: &HeaderMap, body: &[u8]) -> Result<ScenarioFile, ApiError> {
    if is_json(headers) {
        let request: CreateScenario = parse_json(body)?;
        match (request.generate, request.text) {
            (Some(config), None) => Ok(generate_synthetic_region(&config)?),
            (None, Some(text)) => Ok(ScenarioFile::parse(&text)?),
            _ => Err(ApiError::BadRequest("give exactly one of `generate` or `text`".into())),
        }
    } else {
        let text = std::str::from_utf8(body).map_err(|_| ApiError::BadRequest("scenario text is not UTF-8".into()))?;
        Ok(ScenarioFile::parse(text)?)
    }
}

async fn build_scenario(file: ScenarioFile) -> Result<Scenario, ApiError> {
    tokio::task::spawn_blocking(move || Scenario::build(file))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(ApiError::from)
}

fn created(stored: &StoredScenario) -> Json<serde_json::Value> {
    Json(json!({
        "id": stored.id,
        "version": stored.version,
        "name": stored.scenario.file.name,
    }))
}

async fn create_scenario(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    let scenario = build_scenario(scenario_file(&headers, &body)?).await?;
    let stored = state.lock().insert_scenario(scenario)?;
    Ok((StatusCode::CREATED, created(&stored)).into_response())
}

async fn put_scenario(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    state.lock().scenario(&id)?;
    let scenario = build_scenario(scenario_file(&headers, &body)?).await?;
    let stored = state.lock().replace_scenario(&id, scenario)?;
    Ok(created(&stored).into_response())
}

#[derive(Deserialize)]
struct PageQuery {
    from: Option<usize>,
    count: Option<usize>,
    format: Option<String>,
}

#[derive(Serialize)]
struct Page {
    from: usize,
    count: usize,
    total_rows: usize,
}

#[derive(Serialize)]
struct Grids {
    friction: Vec<Vec<Option<f64>>>,
    districts: Vec<Vec<usize>>,
    population: Vec<Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct ScenarioView<'a> {
    api_version: u32,
    id: &'a str,
    version: u32,
    name: &'a str,
    rows: usize,
    cols: usize,
    years: usize,
    districts: usize,
    cell_size_km: f64,
    threshold_minutes: f64,
    budgets: &'a [usize],
    policy: &'a facplan::scenario::PolicyBlock,
    existing: &'a [Cell],
    candidates: &'a Candidates,
    candidate_count: usize,
    advice: &'a BTreeMap<usize, Vec<Cell>>,
    baseline: f64,
    warnings: &'a [String],
    page: Page,
    grids: Grids,
}

fn rows_of<T: Clone>(cells: &[T], cols: usize, from: usize, count: usize) -> Vec<Vec<T>> {
    cells.chunks(cols).skip(from).take(count).map(<[T]>::to_vec).collect()
}

async fn get_scenario(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<PageQuery>,
) -> Result<Response, ApiError> {
    let stored = state.lock().scenario(&id)?;
    let s = &stored.scenario;
    let f = &s.file;
    match query.format.as_deref() {
        None | Some("json") => {}
        Some("text") => return Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], f.to_text()).into_response()),
        Some(other) => return Err(ApiError::BadRequest(format!("unknown format `{other}` (json or text)"))),
    }
    let from = query.from.unwrap_or(0).min(f.rows);
    let count = query.count.unwrap_or(DEFAULT_PAGE_ROWS).min(f.rows - from);
    let view = ScenarioView {
        api_version: API_VERSION,
        id: &stored.id,
        version: stored.version,
        name: &f.name,
        rows: f.rows,
        cols: f.cols,
        years: f.years,
        districts: f.districts,
        cell_size_km: f.cell_size_km,
        threshold_minutes: f.threshold_minutes,
        budgets: &f.budgets,
        policy: &f.policy,
        existing: &f.existing,
        candidates: &f.candidates,
        candidate_count: s.model.candidates().len(),
        advice: &f.advice,
        baseline: s.objective.baseline(),
        warnings: s.warnings(),
        page: Page {
            from,
            count,
            total_rows: f.rows,
        },
        grids: Grids {
            friction: rows_of(&f.friction, f.cols, from, count),
            districts: rows_of(&f.district_grid, f.cols, from, count),
            population: f.population.iter().map(|y| rows_of(y, f.cols, from, count)).collect(),
        },
    };
    Ok(Json(view).into_response())
}

fn spawn_job<W>(state: &AppState, job_id: String, scenario: Arc<Scenario>, work: W)
where
    W: FnOnce(&Scenario, Progress<'_>) -> facplan::Result<String> + Send + 'static,
{
    let state = state.clone();
    tokio::spawn(async move {
        let Ok(_permit) = state.workers.clone().acquire_owned().await else {
            return;
        };
        if let Err(e) = state.lock().advance(&job_id, JobState::Running) {
            tracing::error!("{e}");
            return;
        }
        let inner = state.clone();
        let id = job_id.clone();
        let outcome = tokio::task::spawn_blocking(move || {
            let mut progress = |done: usize, _total: usize| inner.lock().set_progress(&id, done);
            work(&scenario, &mut progress)
        })
        .await;
        let outcome = match outcome {
            Ok(Ok(body)) => Ok(body),
            Ok(Err(e)) => Err(e.to_string()),
            Err(e) => Err(format!("job aborted: {e}")),
        };
        if let Err(e) = state.lock().finish(&job_id, outcome) {
            tracing::error!("{e}");
        }
    });
}

fn accepted(job: &Job) -> Response {
    (StatusCode::ACCEPTED, Json(job)).into_response()
}

async fn start_plan(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let request: PlanRequest = parse_json(&body)?;
    let stored = state.lock().scenario(&id)?;
    pipeline::validate_plan_request(&stored.scenario, &request)?;
    let echo = serde_json::to_value(&request).map_err(|e| ApiError::Internal(e.to_string()))?;
    let job = state
        .lock()
        .create_job(&stored, JobKind::Plan, echo, stored.scenario.file.years);
    spawn_job(&state, job.id.clone(), stored.scenario.clone(), move |scenario, progress| {
        pipeline::plan(scenario, &request, Some(progress)).map(|r| r.to_json())
    });
    Ok(accepted(&job))
}

async fn start_refine(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let request: RefineRequest = parse_json(&body)?;
    let stored = state.lock().scenario(&id)?;
    pipeline::validate_refine_request(&stored.scenario, &request)?;
    let echo = serde_json::to_value(&request).map_err(|e| ApiError::Internal(e.to_string()))?;
    let job = state.lock().create_job(&stored, JobKind::Refine, echo, 1);
    spawn_job(&state, job.id.clone(), stored.scenario.clone(), move |scenario, progress| {
        let result = pipeline::refine(scenario, &request)?;
        progress(1, 1);
        Ok(result.to_json())
    });
    Ok(accepted(&job))
}

async fn get_job(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let store = state.lock();
    Ok(Json(store.job(&id)?).into_response())
}

async fn get_result(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let store = state.lock();
    let job = store.job(&id)?;
    match (job.state, &job.result) {
        (JobState::Done, Some(body)) => Ok(([(header::CONTENT_TYPE, "application/json")], body.clone()).into_response()),
        (JobState::Failed, _) => Err(ApiError::Unprocessable(format!(
            "job {id} failed: {}",
            job.error.as_deref().unwrap_or("unknown error")
        ))),
        _ => Err(ApiError::NotFound(format!("job {id} has no result yet (state {:?})", job.state))),
    }
}

#[derive(Deserialize)]
struct CoverageQuery {
    cells: Option<String>,
}

#[derive(Serialize)]
struct CoveredSet {
    cell: Cell,
    covered: Vec<usize>,
}

#[derive(Serialize)]
struct CoverageView {
    scenario_id: String,
    version: u32,
    rows: usize,
    cols: usize,
    /// Row-major indices covered by existing facilities.
    existing: Vec<usize>,
    sites: Vec<CoveredSet>,
    /// Union of `existing` and every site.
    union: Vec<usize>,
}

fn parse_cells(text: &str) -> Result<Vec<Cell>, ApiError> {
    text.split([';', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (r, c) = t
                .split_once(',')
                .ok_or_else(|| ApiError::BadRequest(format!("expected `row,col`, found `{t}`")))?;
            match (r.trim().parse(), c.trim().parse()) {
                (Ok(r), Ok(c)) => Ok(Cell::new(r, c)),
                _ => Err(ApiError::BadRequest(format!("expected `row,col`, found `{t}`"))),
            }
        })
        .collect()
}

async fn coverage(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<CoverageQuery>,
) -> Result<Response, ApiError> {
    let stored = state.lock().scenario(&id)?;
    let model = &stored.scenario.model;
    let cells = parse_cells(query.cells.as_deref().unwrap_or(""))?;
    let mut union = model.existing().clone();
    let mut sites = Vec::with_capacity(cells.len());
    for cell in cells {
        let covered = model
            .covered_by_cell(cell)
            .ok_or_else(|| ApiError::Unprocessable(format!("cell {cell} is not a candidate site")))?;
        union.union_with(covered);
        sites.push(CoveredSet {
            cell,
            covered: covered.ones().collect(),
        });
    }
    Ok(Json(CoverageView {
        scenario_id: stored.id.clone(),
        version: stored.version,
        rows: model.rows,
        cols: model.cols,
        existing: model.existing().ones().collect(),
        sites,
        union: union.ones().collect(),
    })
    .into_response())
}
