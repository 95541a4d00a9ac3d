//! Regenerate the bundled trace script.
//!
//!     cargo run --example export_trace > crates/core/examples/partnership_trace.json

use humorph::fixtures::trace_script;

fn main() {
    let script = trace_script();
    println!("{}", serde_json::to_string_pretty(&script).expect("script serialises"));
}
