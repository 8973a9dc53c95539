use std::sync::Arc;

use arcast::cashflow::{forecast, CashFlowError, ForecastRequest, ForecastResult};
use arcast::classifier::{
    predict_invoices, train_for_business, ClassifierConfig, DelayPrediction, Hyperparameters,
    TrainError, TrainingMetadata,
};
use arcast::ingest::ingest_json_rows;
use arcast::types::Invoice;
use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::Next;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::store::{ModelRecord, ModelStore};

pub struct AppState {
    pub store: ModelStore,
    pub grace_days: u32,
    pub token: Option<String>,
}

type Shared = State<Arc<AppState>>;

fn parse_body<T: DeserializeOwned>(body: Result<Bytes, BytesRejection>) -> Result<T, ApiError> {
    let bytes = body.map_err(|r| {
        let status = r.status();
        let code = if status == StatusCode::PAYLOAD_TOO_LARGE {
            "payload_too_large"
        } else {
            "invalid_request"
        };
        ApiError::new(status, code, r.body_text())
    })?;
    serde_json::from_slice(&bytes).map_err(|e| ApiError::schema(e.to_string()))
}

fn invoices_from_rows(rows: &[serde_json::Value]) -> Result<Vec<Invoice>, ApiError> {
    let report = ingest_json_rows(rows);
    match report.errors.first() {
        Some(e) => Err(ApiError::schema_row(e.row, format!("invoices[{}]: {}", e.row, e.message))),
        None => Ok(report.invoices),
    }
}

fn check_business_id(id: &str) -> Result<(), ApiError> {
    if id.trim().is_empty() {
        return Err(ApiError::schema("business_id must not be empty"));
    }
    Ok(())
}

fn load(state: &AppState, business_id: &str) -> Result<Arc<ModelRecord>, ApiError> {
    state
        .store
        .get(business_id)
        .map_err(|e| ApiError::internal(e.to_string()))?
        .ok_or_else(|| ApiError::model_not_found(business_id))
}

pub async fn require_token(State(state): Shared, req: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return ApiError::unauthorized().into_response();
        }
    }
    next.run(req).await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

pub async fn health(State(state): Shared) -> Result<Json<Health>, ApiError> {
    state.store.probe().map_err(|e| {
        ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "store_unavailable",
            format!("model store {}: {e}", state.store.dir().display()),
        )
    })?;
    Ok(Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainBody {
    pub business_id: String,
    pub invoices: Vec<serde_json::Value>,
    #[serde(default)]
    pub hyperparameters: Option<Hyperparameters>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainResponse {
    pub model_id: String,
    pub metadata: TrainingMetadata,
}

pub async fn train(State(state): Shared, body: Result<Bytes, BytesRejection>) -> Result<Json<TrainResponse>, ApiError> {
    let body: TrainBody = parse_body(body)?;
    check_business_id(&body.business_id)?;
    let invoices = invoices_from_rows(&body.invoices)?;
    let config = ClassifierConfig {
        hyper: body.hyperparameters.unwrap_or_default(),
        grace_days: state.grace_days,
        seed: body.seed,
    };
    let state2 = Arc::clone(&state);
    let record = tokio::task::spawn_blocking(move || {
        let model = train_for_business(&invoices, &body.business_id, &config).map_err(|e| match e {
            TrainError::InsufficientData(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "insufficient_data", e.to_string())
            }
            other => ApiError::invalid(other.to_string()),
        })?;
        state2
            .store
            .put(ModelRecord::new(&body.business_id, model, invoices))
            .map_err(|e| ApiError::internal(e.to_string()))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    tracing::info!(business_id = %record.business_id, model_id = %record.model_id, "model trained");
    Ok(Json(TrainResponse {
        model_id: record.model_id.clone(),
        metadata: record.model.metadata.clone(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictBody {
    pub business_id: String,
    pub invoices: Vec<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictResponse {
    pub model_id: String,
    pub predictions: Vec<DelayPrediction>,
}

pub async fn predict_ar(State(state): Shared, body: Result<Bytes, BytesRejection>) -> Result<Json<PredictResponse>, ApiError> {
    let body: PredictBody = parse_body(body)?;
    check_business_id(&body.business_id)?;
    let record = load(&state, &body.business_id)?;
    let invoices = invoices_from_rows(&body.invoices)?;
    if let Some(row) = invoices.iter().position(Invoice::is_paid) {
        return Err(ApiError::schema_row(
            row,
            format!("invoices[{row}]: only unpaid invoices can be predicted"),
        ));
    }
    let predictions = predict_invoices(&record.model, &record.history, &invoices, state.grace_days);
    Ok(Json(PredictResponse {
        model_id: record.model_id.clone(),
        predictions,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ForecastBody {
    /// Business whose stored model shifts the open invoices; required when
    /// `integrate_ar` is set.
    #[serde(default)]
    pub business_id: Option<String>,
    #[serde(flatten)]
    pub request: ForecastRequest,
}

pub async fn forecast_cashflow(State(state): Shared, body: Result<Bytes, BytesRejection>) -> Result<Json<ForecastResult>, ApiError> {
    let body: ForecastBody = parse_body(body)?;
    let record = match (&body.business_id, body.request.integrate_ar) {
        (Some(id), true) => Some(load(&state, id)?),
        (None, true) => {
            return Err(ApiError::invalid("integrate_ar requires business_id"));
        }
        (_, false) => None,
    };
    let result = tokio::task::spawn_blocking(move || {
        forecast(&body.request, record.as_deref().map(|r| &r.model))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?;
    result.map(Json).map_err(|e| match e {
        CashFlowError::EmptyWorkingHistory => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_working_history", e.to_string())
        }
        other => ApiError::invalid(other.to_string()),
    })
}
