//! JSON-over-HTTP facade for the `perflaw` predictor.
//!
//! Every response is an envelope `{"ok": true, "result": ...}` or
//! `{"ok": false, "error": {"code": ..., "message": ...}}`. Bodies that are
//! not valid JSON for the endpoint get a 400; inputs the law rejects get a
//! 422 carrying the library's error code. State is an immutable snapshot of
//! weights and the reference zoo taken at startup.

pub mod api;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tower_http::cors::CorsLayer;

use perflaw::calibration::{build_sample, contamination_check, fit, infer_gamma, FitReport};
use perflaw::planner::{
    optimize_expansion_split, predict_expanded, search_architectures, sweep, ExpansionPlan,
    SearchConstraints, SplitOptimum, SweepSpec,
};
use perflaw::zoo::{evaluate_zoo, ModelRecord, ZooReport};
use perflaw::{predict_dense, predict_moe, LawError, RegressionWeights};

use api::*;

/// Snapshot served by every handler.
#[derive(Debug, Clone)]
pub struct AppState {
    pub weights: RegressionWeights,
    pub zoo: Vec<ModelRecord>,
    pub report: ZooReport,
}

impl AppState {
    pub fn new(weights: RegressionWeights, zoo: Vec<ModelRecord>) -> perflaw::Result<Self> {
        weights.validate()?;
        let report = evaluate_zoo(&zoo, &weights)?;
        Ok(AppState { weights, zoo, report })
    }
}

#[derive(Debug, Serialize)]
struct Envelope<T> {
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorBody>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    code: &'static str,
    message: String,
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound,
    Law(LawError),
}

impl From<LawError> for ApiError {
    fn from(e: LawError) -> Self {
        ApiError::Law(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, message) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "BAD_REQUEST", m),
            ApiError::NotFound => (StatusCode::NOT_FOUND, "NOT_FOUND", "no such endpoint".to_string()),
            ApiError::Law(e) => (StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string()),
        };
        let body = Envelope::<()> {
            ok: false,
            result: None,
            error: Some(ErrorBody { code, message }),
        };
        (status, Json(body)).into_response()
    }
}

type Reply<T> = Result<Json<Envelope<T>>, ApiError>;

fn ok<T>(result: T) -> Reply<T> {
    Ok(Json(Envelope {
        ok: true,
        result: Some(result),
        error: None,
    }))
}

// Decoded by hand so that every malformed body, including missing fields,
// comes back as a 400 envelope.
fn decode<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(e.to_string()))
}

pub fn router(state: Arc<AppState>, cors: bool) -> Router {
    let app = Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/weights", get(weights))
        .route("/v1/zoo", get(zoo))
        .route("/v1/zoo/report", get(zoo_report))
        .route("/v1/predict/dense", post(predict_dense_h))
        .route("/v1/predict/moe", post(predict_moe_h))
        .route("/v1/sweep", post(sweep_h))
        .route("/v1/search", post(search_h))
        .route("/v1/expand/predict", post(expand_predict_h))
        .route("/v1/expand/optimize", post(expand_optimize_h))
        .route("/v1/fit", post(fit_h))
        .route("/v1/gamma/infer", post(gamma_h))
        .route("/v1/contamination", post(contamination_h))
        .fallback(|| async { ApiError::NotFound })
        .with_state(state);
    if cors {
        app.layer(CorsLayer::permissive())
    } else {
        app
    }
}

/// Binds `addr` and serves until the listener fails.
pub async fn serve(addr: SocketAddr, state: AppState, cors: bool) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state), cors)).await
}

async fn healthz() -> Reply<&'static str> {
    ok("ok")
}

async fn weights(State(s): State<Arc<AppState>>) -> Reply<RegressionWeights> {
    ok(s.weights)
}

async fn zoo(State(s): State<Arc<AppState>>) -> Reply<Vec<ModelRecord>> {
    ok(s.zoo.clone())
}

async fn zoo_report(State(s): State<Arc<AppState>>) -> Reply<ZooReport> {
    ok(s.report.clone())
}

async fn predict_dense_h(State(s): State<Arc<AppState>>, body: Bytes) -> Reply<PredictionView> {
    let req: PredictDenseRequest = decode(&body)?;
    let p = predict_dense(&req.shape().arch()?, &training(req.tokens)?, &s.weights)?;
    ok(p.into())
}

async fn predict_moe_h(State(s): State<Arc<AppState>>, body: Bytes) -> Reply<PredictionView> {
    let req: PredictMoeRequest = decode(&body)?;
    let p = predict_moe(&req.shape().arch()?, &training(req.tokens)?, &s.weights)?;
    ok(p.into())
}

async fn sweep_h(State(s): State<Arc<AppState>>, body: Bytes) -> Reply<SweepView> {
    let req: SweepRequest = decode(&body)?;
    let spec = SweepSpec {
        variable: req.variable,
        min: req.min,
        max: req.max,
        steps: req.steps,
        base: req.arch.arch()?,
        train: training(req.tokens)?,
    };
    ok(SweepView {
        variable: req.variable,
        points: sweep(&spec, &s.weights)?,
    })
}

async fn search_h(State(s): State<Arc<AppState>>, body: Bytes) -> Reply<Vec<SearchHitView>> {
    let req: SearchRequest = decode(&body)?;
    let constraints = SearchConstraints {
        max_params: req.max_params,
        token_budget: req.tokens,
        gamma: req.gamma,
        layers: req.layers,
        hidden: req.hidden,
        ffn: req.ffn,
        vocab_size: req.vocab_size,
        moe: req.moe,
    };
    let hits = search_architectures(&constraints, &s.weights, req.top_k)?;
    ok(hits.into_iter().map(Into::into).collect())
}

async fn expand_predict_h(State(s): State<Arc<AppState>>, body: Bytes) -> Reply<ExpansionView> {
    let req: ExpandPredictRequest = decode(&body)?;
    let mut plan = ExpansionPlan::new(req.small.arch()?, req.small_tokens, req.large.arch()?, req.large_tokens)?;
    plan.recovery_scale = req.recovery_scale;
    ok(predict_expanded(&plan, &s.weights)?.into())
}

async fn expand_optimize_h(State(s): State<Arc<AppState>>, body: Bytes) -> Reply<SplitOptimum> {
    let req: ExpandOptimizeRequest = decode(&body)?;
    let best = optimize_expansion_split(
        &req.small.arch()?,
        &req.large.arch()?,
        req.total_tokens,
        &s.weights,
        req.grid,
        req.budget,
    )?;
    ok(best)
}

async fn fit_h(body: Bytes) -> Reply<FitReport> {
    let req: FitRequest = decode(&body)?;
    let mut samples = req.samples;
    for o in &req.observations {
        samples.push(build_sample(&o.arch.arch()?, &training(o.tokens)?, o.observed, o.weight)?);
    }
    ok(fit(&samples)?)
}

async fn gamma_h(State(s): State<Arc<AppState>>, body: Bytes) -> Reply<GammaView> {
    let req: GammaRequest = decode(&body)?;
    let arch = DenseShape {
        layers: req.layers,
        hidden: req.hidden,
        ffn: req.ffn,
        size: req.size,
        gamma: 1.0,
    }
    .arch()?;
    let est = infer_gamma(&arch, &training(req.tokens)?, &s.weights, req.observed)?;
    ok(GammaView {
        gamma: est.gamma,
        feasible: est.feasible,
        health: est.health(req.healthy_max),
    })
}

async fn contamination_h(body: Bytes) -> Reply<ContaminationView> {
    let req: ContaminationRequest = decode(&body)?;
    for (name, v) in [("predicted", req.predicted), ("observed", req.observed), ("threshold", req.threshold)] {
        if !v.is_finite() {
            return Err(LawError::InvalidInput(format!("{name} must be finite")).into());
        }
    }
    ok(ContaminationView {
        gap: req.observed - req.predicted,
        flag: contamination_check(req.predicted, req.observed, req.threshold),
    })
}
