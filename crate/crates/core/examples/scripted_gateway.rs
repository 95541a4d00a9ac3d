//! A scripted backend: ordinal steps win, fallbacks cover the rest, and a
//! failing step surfaces as a gateway error.
//!
//!     cargo run --example scripted_gateway

use humorph::gateway::{CompletionRequest, Depth, Gateway, Message, Scenario, ScriptStep};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::new(vec![
        ScriptStep::new(Depth::Listen, "reply", "Second reply, pinned by ordinal.").at(1),
        ScriptStep::new(Depth::Listen, "reply", "Muse speaks here.").for_archetype("Muse"),
        ScriptStep::new(Depth::Listen, "reply", "Any other reply."),
        ScriptStep::new(Depth::Know, "delta", "").failing("provider timeout"),
    ]);
    println!("{}", serde_json::to_string_pretty(&scenario)?);
    let gw = Gateway::scripted("demo", scenario);

    let ask = |archetype: Option<&str>| {
        let req = CompletionRequest::new(Depth::Listen, "reply", vec![Message::human("hello")], 256)
            .with_archetype(archetype.map(str::to_string));
        gw.complete("demo", &req)
    };
    for a in [None, None, Some("Muse")] {
        let c = ask(a)?;
        println!("{:<5} -> {} ({})", a.unwrap_or("-"), c.text, c.model_id);
    }

    let req = CompletionRequest::new(Depth::Know, "delta", vec![Message::human("week")], 1024);
    match gw.complete("demo", &req) {
        Ok(c) => println!("unexpected: {}", c.text),
        Err(e) => println!("delta failed as scripted: {e}"),
    }
    Ok(())
}
