#![allow(dead_code)]

use std::path::PathBuf;

use arcast_service::ServiceConfig;
use serde_json::Value;

pub struct Server {
    pub base: String,
    pub dir: tempfile::TempDir,
}

/// Starts the service on an ephemeral port in a background runtime.
pub fn spawn(token: Option<&str>) -> Server {
    let dir = tempfile::tempdir().unwrap();
    spawn_with(ServiceConfig {
        model_dir: dir.path().join("models"),
        token: token.map(str::to_owned),
        ..ServiceConfig::default()
    }, dir)
}

pub fn spawn_with(config: ServiceConfig, dir: tempfile::TempDir) -> Server {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, arcast_service::app(&config)).await.unwrap();
        });
    });
    let addr = rx.recv().unwrap();
    Server {
        base: format!("http://{addr}"),
        dir,
    }
}

pub fn model_dir(server: &Server) -> PathBuf {
    server.dir.path().join("models")
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into()
}

pub struct Reply {
    pub status: u16,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

pub fn post(server: &Server, path: &str, body: &Value, token: Option<&str>) -> Reply {
    post_raw(server, path, &serde_json::to_string(body).unwrap(), token)
}

pub fn post_raw(server: &Server, path: &str, body: &str, token: Option<&str>) -> Reply {
    let mut req = agent()
        .post(format!("{}{path}", server.base))
        .header("content-type", "application/json");
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let mut resp = req.send(body).unwrap();
    Reply {
        status: resp.status().as_u16(),
        text: resp.body_mut().read_to_string().unwrap(),
    }
}

pub fn get(server: &Server, path: &str) -> Reply {
    let mut resp = agent().get(format!("{}{path}", server.base)).call().unwrap();
    Reply {
        status: resp.status().as_u16(),
        text: resp.body_mut().read_to_string().unwrap(),
    }
}
