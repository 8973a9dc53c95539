//! HTTP front end for the delay classifier and the cash-flow forecaster.
//!
//! | route | body | response |
//! |---|---|---|
//! | `POST /v1/train` | `{business_id, invoices[]}` | `{model_id, metadata}` |
//! | `POST /v1/predict/ar` | `{business_id, invoices[]}` (unpaid) | `{model_id, predictions[]}` |
//! | `POST /v1/forecast/cashflow` | forecast request, plus `business_id` when `integrate_ar` | forecast result |
//! | `GET /v1/health` | | `{status, version}` |
//!
//! Errors are `{error_code, detail}` with an optional `row` for invalid
//! invoice rows.

pub mod config;
pub mod error;
pub mod routes;
pub mod store;

use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::middleware;
use axum::routing::{get, post};
use axum::Router;

pub use config::ServiceConfig;
pub use error::{ApiError, ErrorBody};
pub use store::{ModelRecord, ModelStore};

use routes::AppState;

pub fn app(config: &ServiceConfig) -> Router {
    let state = Arc::new(AppState {
        store: ModelStore::new(&config.model_dir),
        grace_days: config.grace_days,
        token: config.token.clone(),
    });
    let protected = Router::new()
        .route("/v1/train", post(routes::train))
        .route("/v1/predict/ar", post(routes::predict_ar))
        .route("/v1/forecast/cashflow", post(routes::forecast_cashflow))
        .route_layer(middleware::from_fn_with_state(Arc::clone(&state), routes::require_token));
    Router::new()
        .route("/v1/health", get(routes::health))
        .merge(protected)
        .layer(DefaultBodyLimit::max(config.body_limit))
        .with_state(state)
}

/// Binds `listener` and serves until the future is dropped or ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, config: &ServiceConfig) -> std::io::Result<()> {
    axum::serve(listener, app(config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
