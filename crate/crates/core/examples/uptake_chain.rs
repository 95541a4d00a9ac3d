//! Bidirectional uptake: seed, reframe, adoption and reuse of a novel phrase,
//! plus the author-swapped control that must find nothing.
//!
//!     cargo run --example uptake_chain

use humorph::analytics::{collect_items, detect_uptake, swap_authors, UptakeParams};
use humorph::fixtures::grammar_arc_vault;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let vault = grammar_arc_vault(dir.path())?;
    let items = collect_items(&vault)?;
    println!("{} authored text items", items.len());

    for c in detect_uptake(&items, UptakeParams::default()) {
        println!("\n\"{}\" complete = {}", c.novel_ngram, c.complete);
        if let Some(s) = &c.seed {
            println!("  seed     {} {:<5} {}", s.ts, s.author.as_str(), s.source);
        }
        println!("  reframe  {} {:<5} {}", c.reframe.ts, c.reframe.author.as_str(), c.reframe.source);
        println!("  adoption {} {:<5} {}", c.adoption.ts, c.adoption.author.as_str(), c.adoption.source);
        for r in &c.reuse {
            println!("  reuse    {} {:<5} {}", r.ts, r.author.as_str(), r.source);
        }
        println!("  thread terms: {}", c.thread_terms.join(", "));
    }

    let control = detect_uptake(&swap_authors(&items), UptakeParams::default());
    println!("\nauthor-swapped control: {} complete chains", control.iter().filter(|c| c.complete).count());
    Ok(())
}
