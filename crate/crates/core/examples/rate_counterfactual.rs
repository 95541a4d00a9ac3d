//! Interaction rate before and after a boundary, as daily averages.
//!
//!     cargo run --example rate_counterfactual

use humorph::analytics::{interaction_times, rate_counterfactual};
use humorph::fixtures::{rate_boundary, rate_vault};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let vault = rate_vault(dir.path())?;
    let times = interaction_times(&vault)?;
    let r = rate_counterfactual(&times, rate_boundary())?;
    for (label, w) in [("pre", &r.pre), ("post", &r.post)] {
        println!("{label:<5} {} .. {}  {:>4} in {:>2} days = {:.2}/day", w.first_day, w.last_day, w.count, w.days, w.rate);
    }
    println!("relative difference {:.2}%", r.rel_diff * 100.0);
    Ok(())
}
