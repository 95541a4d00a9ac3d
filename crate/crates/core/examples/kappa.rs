//! Cohen's kappa between two raters.
//!
//!     cargo run --example kappa

use humorph::analytics::cohen_kappa;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = ["Muse", "Beatrice", "Muse", "Daimon", "Psyche", "Muse", "Beatrice", "Ariadne"];
    let b = ["Muse", "Beatrice", "Beatrice", "Daimon", "Psyche", "Muse", "Muse", "Ariadne"];
    let r = cohen_kappa(&a, &b)?;
    println!(
        "{} items: observed {:.3}, chance {:.3}, kappa {:.3}",
        r.n_items, r.observed_agreement, r.expected_agreement, r.kappa
    );

    let same = cohen_kappa(&a, &a)?;
    println!("rater against itself: {:.3}", same.kappa);

    let constant = vec![0u8; 16];
    let spread: Vec<u8> = (0..16).map(|i| i % 8).collect();
    println!("constant vs spread: {:.3}", cohen_kappa(&constant, &spread)?.kappa);
    Ok(())
}
