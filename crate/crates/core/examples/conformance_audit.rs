//! Replay the bundled trace, check the six conditions, then break each one
//! on its own copy of the vault.
//!
//!     cargo run --release --example conformance_audit

use std::path::Path;

use humorph::analytics::{conformance_check, ConformanceParams};
use humorph::fixtures::{copy_vault, mutate, Mutation};
use humorph::runtime::{replay, ReplayScript};
use humorph::Vault;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let full = dir.path().join("full");
    let trace = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/partnership_trace.json");
    replay(&ReplayScript::load(&trace)?, &full)?;

    let params = ConformanceParams::default();
    let report = conformance_check(&Vault::open(&full)?, &params)?;
    print!("{}", report.to_markdown());

    println!("\nmutation                     target  failing");
    for m in Mutation::all() {
        let copy = dir.path().join(m.target());
        copy_vault(&full, &copy)?;
        let v = Vault::open(&copy)?;
        let changed = mutate(&v, m)?;
        let r = conformance_check(&v, &params)?;
        let name = format!("{m:?}");
        println!("{:<28} {:<7} {:?} ({changed} edits)", name.split('(').next().unwrap_or(&name), m.target(), r.failing());
    }
    Ok(())
}
