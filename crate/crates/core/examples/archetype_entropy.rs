//! Weekly archetype entropy, combined share, and lock-in detection on the
//! fixture vaults.
//!
//!     cargo run --example archetype_entropy

use std::sync::Arc;

use humorph::analytics::{archetype_share_in, lock_in, weekly_entropy};
use humorph::fixtures::{entropy_vault, lock_in_vault, share_vault};
use humorph::gateway::Gateway;
use humorph::vault::ReadWindow;
use humorph::{Harness, IsoWeek, WeekRange};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;

    let v = entropy_vault(&dir.path().join("entropy"))?;
    let series = weekly_entropy(&v, None)?;
    for p in &series.points {
        println!("{}  H = {:.3} bits over {} events", p.week, p.entropy_bits, p.event_count);
    }
    let (a, b): (IsoWeek, IsoWeek) = ("2026-W17".parse()?, "2026-W20".parse()?);
    if let Some(r) = series.reduction(a, b) {
        println!("reduction {a} -> {b}: {:.1}%", r * 100.0);
    }

    let v = share_vault(&dir.path().join("share"))?;
    let share = archetype_share_in(&v, ReadWindow::All, &["Beatrice", "Muse"])?;
    println!("\nBeatrice + Muse share: {:.3}", share);

    let range = Some(WeekRange::new("2026-W17".parse()?, "2026-W19".parse()?));
    for uniform in [false, true] {
        let root = dir.path().join(if uniform { "uniform" } else { "locked" });
        let h = Harness::new(Arc::new(lock_in_vault(&root, uniform)?), Arc::new(Gateway::new(&root)), "none");
        let r = lock_in(&h, range)?;
        println!(
            "\nlock-in ({}): triggered = {}, dominant = {:?}, starved = {:?}",
            if uniform { "uniform" } else { "skewed" },
            r.triggered,
            r.dominant,
            r.starved
        );
    }
    Ok(())
}
