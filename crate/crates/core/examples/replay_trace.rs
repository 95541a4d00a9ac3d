//! Replay a scripted trace into a fresh vault and run every audit on it.
//!
//!     cargo run --release --example replay_trace -- [trace.json] [out-dir]

use std::path::PathBuf;
use std::sync::Arc;

use humorph::analytics::{run_audits, AuditKind};
use humorph::gateway::Gateway;
use humorph::runtime::{replay, ReplayScript};
use humorph::{Harness, Vault};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let trace = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/partnership_trace.json"));
    let tmp = tempfile::tempdir()?;
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| tmp.path().join("vault"));

    let t = std::time::Instant::now();
    let outcome = replay(&ReplayScript::load(&trace)?, &out)?;
    println!(
        "{} events, {} messages, {} errors in {:.2}s",
        outcome.events,
        outcome.messages,
        outcome.errors.len(),
        t.elapsed().as_secs_f64()
    );
    for n in &outcome.notes {
        println!("note: {n}");
    }

    let h = Harness::new(Arc::new(Vault::open(&out)?), Arc::new(Gateway::new(&out)), "none");
    for r in run_audits(&h, &AuditKind::ALL)? {
        println!("{} {:?}: {}", if r.passed { "PASS" } else { "FAIL" }, r.kind, r.summary);
    }
    Ok(())
}
