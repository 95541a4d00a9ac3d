//! Notice depth self-improvement. The validator refuses to call 41
//! unpaired runs anything but insufficient data, the honesty audit catches a
//! fabricated positive, and a history-dropping revision needs an explicit
//! force.
//!
//!     cargo run --example improve_loop

use humorph::analytics::honesty;
use humorph::fixtures::{inject_fabricated_positive, reset_guard_runtime, validator_runtime, SKILL};
use humorph::reflexion::{apply_revision, load_skill, run_improve, verdicts};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;

    let rt = validator_runtime(&dir.path().join("validator"))?;
    let h = &rt.harness;
    let v = verdicts(h)?;
    let mut tally = std::collections::BTreeMap::new();
    for (_, e) in &v {
        *tally.entry(e.assessment.as_str()).or_insert(0) += 1;
    }
    println!("{} verdicts: {:?}", v.len(), tally);
    println!("honesty findings: {}", honesty(h, None)?.findings.len());
    inject_fabricated_positive(&h.vault)?;
    for f in honesty(h, None)?.findings {
        println!("after injection: {f:?}");
    }

    let rt = reset_guard_runtime(&dir.path().join("reset"))?;
    let h = &rt.harness;
    let rev = run_improve(h, SKILL, false)?;
    println!("\nunforced revision: blocked = {} ({})", rev.blocked, rev.reason.as_deref().unwrap_or(""));
    if let Err(e) = apply_revision(h, &rev.run_id) {
        println!("apply refused: {e}");
    }
    println!("episodes kept: {}", load_skill(h, SKILL)?.episode_count);

    let forced = run_improve(h, SKILL, true)?;
    let skill = apply_revision(h, &forced.run_id)?;
    println!("forced reset: {} -> {} episodes", forced.episodes_before, skill.episode_count);
    Ok(())
}
