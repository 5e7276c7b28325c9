//! In-process model endpoint for client tests.
//!
//! Replies are scripted per request by a closure over the sample_id and the
//! 1-based attempt number for that sample. A probe records the peak number
//! of requests being handled at once.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
pub enum Reply {
    Text(String),
    Status(u16),
    Malformed,
    After(Duration, Box<Reply>),
}

impl Reply {
    pub fn text(s: impl Into<String>) -> Self {
        Reply::Text(s.into())
    }

    pub fn after_ms(ms: u64, r: Reply) -> Self {
        Reply::After(Duration::from_millis(ms), Box::new(r))
    }
}

pub type Script = Arc<dyn Fn(&str, u32) -> Reply + Send + Sync>;

struct Shared {
    script: Script,
    attempts: Mutex<HashMap<String, u32>>,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
    total: AtomicUsize,
    last_auth: Mutex<Option<String>>,
    bodies: Mutex<Vec<Value>>,
}

pub struct Stub {
    pub addr: SocketAddr,
    shared: Arc<Shared>,
}

struct InFlight<'a>(&'a Shared);

impl<'a> InFlight<'a> {
    fn enter(s: &'a Shared) -> Self {
        let now = s.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        s.peak.fetch_max(now, Ordering::SeqCst);
        InFlight(s)
    }
}

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
    }
}

async fn predict(State(s): State<Arc<Shared>>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    let _guard = InFlight::enter(&s);
    s.total.fetch_add(1, Ordering::SeqCst);
    if let Some(v) = headers.get("authorization") {
        *s.last_auth.lock().unwrap() = v.to_str().ok().map(str::to_string);
    }
    let id = body["sample_id"].as_str().unwrap_or_default().to_string();
    s.bodies.lock().unwrap().push(body);
    let attempt = {
        let mut a = s.attempts.lock().unwrap();
        let n = a.entry(id.clone()).or_default();
        *n += 1;
        *n
    };
    let mut reply = (s.script)(&id, attempt);
    loop {
        match reply {
            Reply::After(d, next) => {
                tokio::time::sleep(d).await;
                reply = *next;
            }
            Reply::Text(t) => return Json(json!({ "text": t })).into_response(),
            Reply::Status(code) => {
                let code = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
                return (code, "scripted failure").into_response();
            }
            Reply::Malformed => return (StatusCode::OK, "{\"txt\": 1").into_response(),
        }
    }
}

impl Stub {
    pub async fn start(script: impl Fn(&str, u32) -> Reply + Send + Sync + 'static) -> Stub {
        let shared = Arc::new(Shared {
            script: Arc::new(script),
            attempts: Mutex::new(HashMap::new()),
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            total: AtomicUsize::new(0),
            last_auth: Mutex::new(None),
            bodies: Mutex::new(Vec::new()),
        });
        let app = Router::new().route("/predict", post(predict)).with_state(shared.clone());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind stub");
        let addr = listener.local_addr().expect("stub address");
        tokio::spawn(async move {
            axum::serve(listener, app).await.expect("stub server");
        });
        Stub { addr, shared }
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn peak_in_flight(&self) -> usize {
        self.shared.peak.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> usize {
        self.shared.total.load(Ordering::SeqCst)
    }

    pub fn attempts(&self, sample_id: &str) -> u32 {
        self.shared.attempts.lock().unwrap().get(sample_id).copied().unwrap_or(0)
    }

    pub fn last_auth(&self) -> Option<String> {
        self.shared.last_auth.lock().unwrap().clone()
    }

    pub fn bodies(&self) -> Vec<Value> {
        self.shared.bodies.lock().unwrap().clone()
    }
}
