//! Serve the HTTP API over a scripted runtime and call a few endpoints.
//! Pass `--hold` to keep serving on 127.0.0.1:7878 afterwards.
//!
//!     cargo run --example api_server

use std::sync::Arc;

use humorph::fixtures::{basic_scenario, ts};
use humorph::runtime::{router, Runtime};
use humorph::Settings;
use serde_json::{json, Value};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hold = std::env::args().any(|a| a == "--hold");
    let dir = tempfile::tempdir()?;
    let rt = Arc::new(Runtime::scripted(dir.path(), basic_scenario(), ts("2026-04-20T09:00:00Z"), Settings::default())?);

    let tokio = tokio::runtime::Runtime::new()?;
    let listener = tokio.block_on(tokio::net::TcpListener::bind(if hold { "127.0.0.1:7878" } else { "127.0.0.1:0" }))?;
    let base = format!("http://{}", listener.local_addr()?);
    let server = tokio.spawn(async move { axum::serve(listener, router(rt)).await });
    println!("serving {base}");

    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let mut r = agent.post(&format!("{base}/chat")).send_json(json!({"text": "Slept badly, still went running."}))?;
    println!("POST /chat {} {}", r.status(), r.body_mut().read_json::<Value>()?);
    let mut r = agent.post(&format!("{base}/journal")).send_json(json!({"text": "Running clears my head."}))?;
    println!("POST /journal {} {}", r.status(), r.body_mut().read_json::<Value>()?);
    for path in ["/health", "/streams/interactions", "/analytics/entropy", "/constitution"] {
        let mut r = agent.get(&format!("{base}{path}")).call()?;
        let body: Value = r.body_mut().read_json()?;
        let text = body.to_string();
        println!("GET {path} {} {}", r.status(), &text[..text.len().min(160)]);
    }

    if hold {
        tokio.block_on(server)??;
    }
    Ok(())
}
