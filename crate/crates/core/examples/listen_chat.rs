//! Listen depth: a few messages through a scripted runtime, then the
//! interaction and archetype logs they produced.
//!
//!     cargo run --example listen_chat

use humorph::fixtures::{basic_scenario, ts};
use humorph::runtime::{ChatRequest, Runtime};
use humorph::vault::streams;
use humorph::Settings;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let rt = Runtime::scripted(dir.path(), basic_scenario(), ts("2026-04-20T09:00:00Z"), Settings::default())?;

    let mut asked = ChatRequest::new("Can Beatrice take this one?");
    asked.archetype = Some("Beatrice".into());
    for req in [ChatRequest::new("Walked by the river before work."), asked] {
        let rec = rt.handle_message(&req)?;
        println!(
            "{} [{}] {} -> {} ({} scores)",
            rec.interaction_id,
            rec.archetype.as_deref().unwrap_or("-"),
            rec.human_text,
            rec.agent_text,
            rec.scores
        );
    }

    let mut sylph = ChatRequest::new("Sylph, are you there?");
    sylph.archetype = Some("Sylph".into());
    if let Err(e) = rt.handle_message(&sylph) {
        println!("refused: {e}");
    }

    let v = &rt.harness.vault;
    for stream in [streams::INTERACTIONS, streams::ARCHETYPE_LOG] {
        println!("\n{stream}:");
        for r in v.records(stream)? {
            println!("  {}", serde_json::to_string(&r)?);
        }
    }
    Ok(())
}
