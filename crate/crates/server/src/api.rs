//! Request handlers. Exploration handlers hold the session read lock for their
//! whole (synchronous) body, so each one either completes before inference is
//! entered or observes the lock.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use multiverse_core::spec::SensitivityMethod;
use multiverse_core::{DecisionKind, Edge};
use multiverse_runner::Status;
use multiverse_stats::{
    cdf_curve, density_grid, option_ratios, pdf_curve, point_density, prune, quantile_sample, sensitivity_report,
    similar_universes, DecisionRatios, DensityCurve, SensitivityReport, DEFAULT_GRID_SIZE,
};
use serde::{Deserialize, Serialize};

use crate::inference::{self, InferenceBundle, InferenceRequest};
use crate::{ApiError, AppState};

/// Predictive-check arrays longer than this are quantile sampled.
pub const MAX_CHECK_POINTS: usize = 200;
const DEFAULT_SIMILAR: usize = 5;

type ApiResult<T> = Result<Json<T>, ApiError>;

fn body<T>(b: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    b.map(|Json(t)| t).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(t)| t).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn method_or_default(state: &AppState, method: Option<&str>) -> Result<SensitivityMethod, ApiError> {
    match method {
        None => Ok(state.artifacts.overview.sensitivity_method),
        Some(m) => m.parse().map_err(ApiError::bad_request),
    }
}

fn sensitivity(state: &AppState, method: SensitivityMethod) -> SensitivityReport {
    sensitivity_report(&state.artifacts.summary, &state.artifacts.estimates(), method)
}

/// A score as JSON: infinite F statistics become `null` with `maximal: true`.
fn finite(score: Option<f64>) -> (Option<f64>, bool) {
    match score {
        Some(s) if s.is_infinite() => (None, true),
        s => (s, false),
    }
}

#[derive(Serialize)]
pub struct GraphNode {
    name: String,
    kind: DecisionKind,
    options: Vec<String>,
    cardinality: usize,
    sensitivity: Option<f64>,
    maximal: bool,
}

#[derive(Serialize)]
pub struct GraphResponse {
    nodes: Vec<GraphNode>,
    temporal_edges: Vec<Edge>,
    dependency_edges: Vec<Edge>,
    sensitivity_method: SensitivityMethod,
    sensitivity_min: Option<f64>,
    sensitivity_max: Option<f64>,
    universe_count: usize,
    succeeded: usize,
}

pub async fn graph(State(state): State<Arc<AppState>>) -> ApiResult<GraphResponse> {
    let a = &state.artifacts;
    let report = sensitivity(&state, a.overview.sensitivity_method);
    let g = &a.overview.graph;
    Ok(Json(GraphResponse {
        nodes: g
            .nodes
            .iter()
            .map(|n| {
                let (sensitivity, maximal) = finite(report.score(&n.name));
                GraphNode {
                    name: n.name.clone(),
                    kind: n.kind,
                    options: n.options.clone(),
                    cardinality: n.options.len(),
                    sensitivity,
                    maximal,
                }
            })
            .collect(),
        temporal_edges: g.temporal_edges.clone(),
        dependency_edges: g.dependency_edges.clone(),
        sensitivity_method: report.method,
        sensitivity_min: report.min,
        sensitivity_max: report.max,
        universe_count: a.results.len(),
        succeeded: a.estimates().len(),
    }))
}

#[derive(Serialize)]
pub struct Outcome {
    uid: usize,
    estimate: Option<f64>,
    p: Option<f64>,
    fit: Option<f64>,
    status: Status,
    /// False when the current prune cutoff hides this universe.
    kept: bool,
    decisions: BTreeMap<String, String>,
}

pub async fn outcomes(State(state): State<Arc<AppState>>) -> ApiResult<Vec<Outcome>> {
    let session = state.explore()?;
    let a = &state.artifacts;
    Ok(Json(
        a.results
            .iter()
            .map(|r| Outcome {
                uid: r.uid,
                estimate: r.estimate_value(),
                p: r.p_value(),
                fit: r.fit_value(),
                status: r.status,
                kept: match (session.cutoff, r.fit_value()) {
                    (Some(c), Some(f)) => f <= c,
                    _ => true,
                },
                decisions: a.choices(r.uid),
            })
            .collect(),
    ))
}

#[derive(Serialize)]
pub struct DensityResponse {
    /// `draws` when every successful universe wrote draws, else `estimates`.
    source: &'static str,
    universes: Vec<usize>,
    #[serde(flatten)]
    curve: DensityCurve,
}

pub async fn density(State(state): State<Arc<AppState>>) -> ApiResult<DensityResponse> {
    let a = &state.artifacts;
    let est = a.estimates();
    if est.is_empty() {
        return Err(ApiError::unprocessable("no-estimates", "no universe produced an estimate"));
    }
    let universes: Vec<usize> = est.keys().copied().collect();
    let (source, curve) = if universes.iter().all(|u| a.draws.contains_key(u)) {
        let sets: Vec<Vec<f64>> = universes.iter().map(|u| a.draws[u].clone()).collect();
        ("draws", multiverse_stats::aggregate_density(&sets, DEFAULT_GRID_SIZE)?)
    } else {
        let pts: Vec<f64> = est.values().copied().collect();
        ("estimates", point_density(&pts, None, DEFAULT_GRID_SIZE)?)
    };
    Ok(Json(DensityResponse {
        source,
        universes,
        curve,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesQuery {
    kind: Option<String>,
}

#[derive(Serialize)]
pub struct UniverseCurve {
    uid: usize,
    values: Vec<f64>,
}

#[derive(Serialize)]
pub struct CurvesResponse {
    kind: String,
    grid: Vec<f64>,
    curves: Vec<UniverseCurve>,
}

pub async fn curves(
    State(state): State<Arc<AppState>>,
    q: Result<Query<CurvesQuery>, QueryRejection>,
) -> ApiResult<CurvesResponse> {
    let q = query(q)?;
    let kind = q.kind.unwrap_or_else(|| "pdf".into());
    let f: fn(&[f64], &[f64]) -> Vec<f64> = match kind.as_str() {
        "pdf" => pdf_curve,
        "cdf" => cdf_curve,
        other => return Err(ApiError::bad_request(format!("kind must be pdf or cdf, got `{other}`"))),
    };
    let draws = &state.artifacts.draws;
    let sets: Vec<Vec<f64>> = draws.values().cloned().collect();
    let grid = density_grid(&sets, DEFAULT_GRID_SIZE)?;
    let curves = draws
        .iter()
        .map(|(&uid, d)| UniverseCurve {
            uid,
            values: f(d, &grid),
        })
        .collect();
    Ok(Json(CurvesResponse { kind, grid, curves }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetQuery {
    d1: String,
    d2: Option<String>,
}

#[derive(Serialize)]
pub struct FacetGroup {
    /// Decision name to option for this cell.
    key: BTreeMap<String, String>,
    uids: Vec<usize>,
    estimates: Vec<f64>,
}

#[derive(Serialize)]
pub struct FacetResponse {
    decisions: Vec<String>,
    groups: Vec<FacetGroup>,
}

fn column(state: &AppState, name: &str) -> Result<usize, ApiError> {
    state
        .artifacts
        .summary
        .column(name)
        .ok_or_else(|| ApiError::bad_request(format!("unknown decision `{name}`")))
}

/// One group per option combination (including empty ones), in option order;
/// universes where a faceted decision is inactive are left out.
pub async fn facet(
    State(state): State<Arc<AppState>>,
    q: Result<Query<FacetQuery>, QueryRejection>,
) -> ApiResult<FacetResponse> {
    let _session = state.explore()?;
    let q = query(q)?;
    let mut names = vec![q.d1];
    if let Some(d2) = q.d2.filter(|d| !d.is_empty()) {
        if d2 == names[0] {
            return Err(ApiError::bad_request("d1 and d2 must differ"));
        }
        names.push(d2);
    }
    let cols: Vec<usize> = names.iter().map(|n| column(&state, n)).collect::<Result<_, _>>()?;
    let table = &state.artifacts.summary;
    let sizes: Vec<usize> = cols.iter().map(|&c| table.decisions[c].options.len()).collect();
    let mut cells: BTreeMap<Vec<usize>, (Vec<usize>, Vec<f64>)> = BTreeMap::new();
    let mut combo = vec![0; cols.len()];
    loop {
        cells.insert(combo.clone(), (Vec::new(), Vec::new()));
        let Some(i) = (0..combo.len()).rev().find(|&i| combo[i] + 1 < sizes[i]) else {
            break;
        };
        combo[i] += 1;
        combo[i + 1..].fill(0);
    }
    for (uid, e) in state.artifacts.estimates() {
        let row = table.row(uid).expect("checked at load");
        let Some(key) = cols.iter().map(|&c| row.choices[c]).collect::<Option<Vec<usize>>>() else {
            continue;
        };
        let cell = cells.get_mut(&key).expect("every combination is present");
        cell.0.push(uid);
        cell.1.push(e);
    }
    let groups = cells
        .into_iter()
        .map(|(key, (uids, estimates))| FacetGroup {
            key: cols
                .iter()
                .zip(&key)
                .map(|(&c, &o)| (table.decisions[c].name.clone(), table.decisions[c].options[o].clone()))
                .collect(),
            uids,
            estimates,
        })
        .collect();
    Ok(Json(FacetResponse { decisions: names, groups }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniverseQuery {
    k: Option<usize>,
}

#[derive(Serialize)]
pub struct PredictiveCheck {
    observed: Vec<f64>,
    predicted: Vec<f64>,
    /// Number of pairs before sampling.
    n: usize,
    sampled: bool,
}

#[derive(Serialize)]
pub struct UniverseDetail {
    uid: usize,
    estimate: Option<f64>,
    p: Option<f64>,
    fit: Option<f64>,
    status: Status,
    decisions: BTreeMap<String, String>,
    similar: Vec<usize>,
    predictions: Option<PredictiveCheck>,
    draws: Option<Vec<f64>>,
}

pub async fn universe(
    State(state): State<Arc<AppState>>,
    Path(uid): Path<usize>,
    q: Result<Query<UniverseQuery>, QueryRejection>,
) -> ApiResult<UniverseDetail> {
    let _session = state.explore()?;
    let q = query(q)?;
    let a = &state.artifacts;
    let r = a
        .result(uid)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown-universe", format!("no universe {uid}")))?;
    let est: Vec<(usize, f64)> = a.estimates().into_iter().collect();
    let similar = if r.status == Status::Ok {
        similar_universes(uid, &est, q.k.unwrap_or(DEFAULT_SIMILAR))?
    } else {
        Vec::new()
    };
    let predictions = a.predictions.get(&uid).map(|pairs| {
        let (obs, pred): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        PredictiveCheck {
            observed: quantile_sample(&obs, MAX_CHECK_POINTS),
            predicted: quantile_sample(&pred, MAX_CHECK_POINTS),
            n: pairs.len(),
            sampled: pairs.len() > MAX_CHECK_POINTS,
        }
    });
    Ok(Json(UniverseDetail {
        uid,
        estimate: r.estimate_value(),
        p: r.p_value(),
        fit: r.fit_value(),
        status: r.status,
        decisions: a.choices(uid),
        similar,
        predictions,
        draws: a.draws.get(&uid).map(|d| quantile_sample(d, MAX_CHECK_POINTS)),
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityQuery {
    method: Option<String>,
}

#[derive(Serialize)]
pub struct ScoreEntry {
    decision: String,
    score: Option<f64>,
    maximal: bool,
    group_sizes: Vec<usize>,
}

#[derive(Serialize)]
pub struct SensitivityResponse {
    method: SensitivityMethod,
    scores: Vec<ScoreEntry>,
    min: Option<f64>,
    max: Option<f64>,
}

pub async fn sensitivity_scores(
    State(state): State<Arc<AppState>>,
    q: Result<Query<SensitivityQuery>, QueryRejection>,
) -> ApiResult<SensitivityResponse> {
    let q = query(q)?;
    let report = sensitivity(&state, method_or_default(&state, q.method.as_deref())?);
    Ok(Json(SensitivityResponse {
        method: report.method,
        scores: report
            .scores
            .into_iter()
            .map(|s| {
                let (score, maximal) = finite(s.score);
                ScoreEntry {
                    decision: s.decision,
                    score,
                    maximal,
                    group_sizes: s.group_sizes,
                }
            })
            .collect(),
        min: report.min,
        max: report.max,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrushRequest {
    lo: f64,
    hi: f64,
    /// Restricts the selection to one facet cell: decision name to option.
    facet: Option<BTreeMap<String, String>>,
}

#[derive(Serialize)]
pub struct BrushResponse {
    uids: Vec<usize>,
    ratios: Vec<DecisionRatios>,
}

/// Successful universes with `lo <= estimate <= hi`, excluding those hidden
/// by the prune cutoff, and their option ratios.
pub async fn brush(
    State(state): State<Arc<AppState>>,
    b: Result<Json<BrushRequest>, JsonRejection>,
) -> ApiResult<BrushResponse> {
    let session = state.explore()?;
    let req = body(b)?;
    if !(req.lo.is_finite() && req.hi.is_finite() && req.lo <= req.hi) {
        return Err(ApiError::bad_request("brush needs finite lo <= hi"));
    }
    let table = &state.artifacts.summary;
    let mut filter = Vec::new();
    for (name, option) in req.facet.iter().flatten() {
        let c = column(&state, name)?;
        let o = table.decisions[c]
            .options
            .iter()
            .position(|x| x == option)
            .ok_or_else(|| ApiError::bad_request(format!("`{option}` is not an option of `{name}`")))?;
        filter.push((c, o));
    }
    let fits: BTreeMap<usize, Option<f64>> = state.artifacts.fits().into_iter().collect();
    let uids: Vec<usize> = state
        .artifacts
        .estimates()
        .into_iter()
        .filter(|&(_, e)| req.lo <= e && e <= req.hi)
        .filter(|(u, _)| match (session.cutoff, fits[u]) {
            (Some(c), Some(f)) => f <= c,
            _ => true,
        })
        .filter(|(u, _)| {
            let row = table.row(*u).expect("checked at load");
            filter.iter().all(|&(c, o)| row.choices[c] == Some(o))
        })
        .map(|(u, _)| u)
        .collect();
    let ratios = if uids.is_empty() { Vec::new() } else { option_ratios(table, &uids)? };
    Ok(Json(BrushResponse { uids, ratios }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PruneRequest {
    /// `null` clears the cutoff.
    cutoff: Option<f64>,
}

#[derive(Serialize)]
pub struct PruneResponse {
    cutoff: Option<f64>,
    kept: Vec<usize>,
    unscored: Vec<usize>,
    removed: Vec<usize>,
}

/// Sets the session cutoff (last writer wins). A cutoff that would remove
/// every universe is rejected and leaves the previous one in place.
pub async fn prune_cutoff(
    State(state): State<Arc<AppState>>,
    b: Result<Json<PruneRequest>, JsonRejection>,
) -> ApiResult<PruneResponse> {
    let mut session = state.session_mut();
    if session.inference_entered {
        return Err(ApiError::locked());
    }
    let req = body(b)?;
    let fits = state.artifacts.fits();
    let resp = match req.cutoff {
        None => PruneResponse {
            cutoff: None,
            kept: fits.iter().map(|f| f.0).collect(),
            unscored: fits.iter().filter(|f| f.1.is_none()).map(|f| f.0).collect(),
            removed: Vec::new(),
        },
        Some(c) => {
            let p = prune(&fits, c).map_err(|e| match e {
                multiverse_stats::StatsError::InvalidInput(m) => ApiError::bad_request(m),
                e => e.into(),
            })?;
            PruneResponse {
                cutoff: Some(c),
                kept: p.kept,
                unscored: p.unscored,
                removed: p.removed,
            }
        }
    };
    session.cutoff = req.cutoff;
    Ok(Json(resp))
}

/// Enters inference (first writer wins). The bundle is computed under the
/// write lock; a failed computation leaves the session in exploration.
pub async fn enter_inference(
    State(state): State<Arc<AppState>>,
    b: Result<Json<InferenceRequest>, JsonRejection>,
) -> ApiResult<InferenceBundle> {
    let mut session = state.session_mut();
    if session.inference_entered {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "inference-entered",
            "inference has already been entered in this session",
        ));
    }
    let req = body(b)?;
    let bundle = inference::build(&state.artifacts, &req, session.cutoff)?;
    session.inference_entered = true;
    Ok(Json(bundle))
}

#[derive(Serialize)]
pub struct SessionResponse {
    cutoff: Option<f64>,
    inference_entered: bool,
}

pub async fn session(State(state): State<Arc<AppState>>) -> Json<SessionResponse> {
    let s = state.session();
    Json(SessionResponse {
        cutoff: s.cutoff,
        inference_entered: s.inference_entered,
    })
}

pub async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such endpoint")
}
