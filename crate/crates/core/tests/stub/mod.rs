//! In-process model service speaking the classify wire protocol.
#![allow(dead_code)]

use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::Router;
use serde_json::{json, Value};

pub struct Reply {
    pub status: u16,
    pub body: String,
    pub delay_ms: u64,
}

impl Reply {
    pub fn ok(body: Value) -> Self {
        Reply { status: 200, body: body.to_string(), delay_ms: 0 }
    }

    pub fn status(status: u16) -> Self {
        Reply { status, body: "unavailable".into(), delay_ms: 0 }
    }
}

/// Called with the zero-based request number and the decoded request body.
pub type Handler = dyn Fn(usize, &Value) -> Reply + Send + Sync;

struct Inner {
    handler: Box<Handler>,
    seen: Mutex<Vec<Value>>,
}

pub struct Stub {
    pub url: String,
    inner: Arc<Inner>,
}

impl Stub {
    pub fn requests(&self) -> Vec<Value> {
        self.inner.seen.lock().unwrap().clone()
    }
}

async fn classify(State(inner): State<Arc<Inner>>, body: String) -> (StatusCode, String) {
    let value: Value = serde_json::from_str(&body).unwrap_or(Value::Null);
    let reply = {
        let mut seen = inner.seen.lock().unwrap();
        let n = seen.len();
        seen.push(value.clone());
        (inner.handler)(n, &value)
    };
    if reply.delay_ms > 0 {
        tokio::time::sleep(Duration::from_millis(reply.delay_ms)).await;
    }
    (StatusCode::from_u16(reply.status).unwrap(), reply.body)
}

pub fn serve(handler: impl Fn(usize, &Value) -> Reply + Send + Sync + 'static) -> Stub {
    let inner = Arc::new(Inner {
        handler: Box::new(handler),
        seen: Mutex::new(Vec::new()),
    });
    let state = inner.clone();
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            let app = Router::new().route("/classify", post(classify)).with_state(state);
            axum::serve(listener, app).await.unwrap();
        });
    });
    let addr = rx.recv().unwrap();
    Stub {
        url: format!("http://{addr}"),
        inner,
    }
}

/// Verdict a toy model gives a premise: "YES" supports, "NO" refutes.
pub fn toy_verdict(premise: &str) -> Value {
    if premise.contains("YES") {
        json!({"label": "SUPPORTS", "scores": [0.7, 0.2, 0.1]})
    } else if premise.contains("NO") {
        json!({"label": "REFUTES", "scores": [0.2, 0.7, 0.1]})
    } else {
        json!({"label": "NEUTRAL", "scores": [0.1, 0.2, 0.7]})
    }
}

pub fn toy_reply(request: &Value) -> Reply {
    let verdicts: Vec<Value> = request["pairs"]
        .as_array()
        .map(|pairs| pairs.iter().map(|p| toy_verdict(p["premise"].as_str().unwrap_or(""))).collect())
        .unwrap_or_default();
    Reply::ok(json!({ "verdicts": verdicts }))
}
