#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use humorph::fixtures::{basic_scenario, ts};
use humorph::runtime::{router, Runtime};
use humorph::Settings;

/// A scripted runtime with its clock pinned at Monday 2026-04-20 09:00.
pub fn runtime(dir: &Path) -> Runtime {
    Runtime::scripted(dir, basic_scenario(), ts("2026-04-20T09:00:00Z"), Settings::default()).expect("runtime")
}

/// Serve `rt` on an ephemeral port; returns the base URL.
pub fn serve(rt: Arc<Runtime>) -> (String, tokio::runtime::Runtime) {
    let tokio = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .expect("tokio");
    let listener = tokio
        .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
        .expect("bind");
    let addr = listener.local_addr().expect("addr");
    tokio.spawn(async move {
        axum::serve(listener, router(rt)).await.expect("serve");
    });
    (format!("http://{addr}"), tokio)
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into()
}

pub fn get(url: &str) -> (u16, serde_json::Value) {
    let mut r = agent().get(url).call().expect("request");
    let status = r.status().as_u16();
    (status, r.body_mut().read_json().unwrap_or(serde_json::Value::Null))
}

pub fn post(url: &str, body: serde_json::Value) -> (u16, serde_json::Value) {
    let mut r = agent().post(url).send_json(&body).expect("request");
    let status = r.status().as_u16();
    (status, r.body_mut().read_json().unwrap_or(serde_json::Value::Null))
}

pub fn post_empty(url: &str) -> (u16, serde_json::Value) {
    let mut r = agent().post(url).send_empty().expect("request");
    let status = r.status().as_u16();
    (status, r.body_mut().read_json().unwrap_or(serde_json::Value::Null))
}

/// Every file under `root` with its bytes, sorted by path.
pub fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in std::fs::read_dir(dir).expect("read dir") {
            let p = e.expect("entry").path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).expect("under base").display().to_string();
                out.push((rel, std::fs::read(&p).expect("read")));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}
