//! Know depth: a week of messages, then the Sunday run that writes the
//! partner profile, agent profile, portrait, delta, digest and meta entry.
//! A second run for the same week changes nothing.
//!
//!     cargo run --example weekly_triad

use chrono::Duration;
use humorph::fixtures::{basic_scenario, ts};
use humorph::runtime::{ChatRequest, Runtime};
use humorph::vault::DocKind;
use humorph::{IsoWeek, Settings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let start = ts("2026-04-20T08:00:00Z");
    let rt = Runtime::scripted(dir.path(), basic_scenario(), start, Settings::default())?;
    for day in 0..5 {
        rt.set_time(start + Duration::days(day));
        rt.handle_message(&ChatRequest::new(format!("Day {day}: long walk, then the workshop.")))?;
    }
    rt.set_time(ts("2026-04-20T21:00:00Z"));
    rt.write_journal("Noticed I think better while walking.", Some("Walking"))?;

    let week: IsoWeek = "2026-W17".parse()?;
    match rt.know_tick(week, false) {
        Err(e) => println!("before the anchor: {e}"),
        Ok(_) => println!("ran early?"),
    }

    rt.set_time(ts("2026-04-26T03:04:00Z"));
    for pass in 1..=2 {
        println!("\nrun {pass}:");
        for o in rt.know_tick(week, false)?.stages {
            println!("  {:<15} {:?} {}", o.stage.as_str(), o.status, o.detail);
        }
    }

    let v = &rt.harness.vault;
    if let Some(d) = v.query_docs(DocKind::Delta, None)?.first() {
        println!("\n{}\n{}", d.path.display(), d.render());
    }
    Ok(())
}
