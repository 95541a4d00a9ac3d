mod common;

use std::io::BufRead;
use std::sync::Arc;

use serde_json::json;

use common::{get, post, post_empty, runtime, serve};
use humorph::analytics::weekly_entropy;
use humorph::fixtures::{entropy_vault, ts};
use humorph::gateway::{Depth, Gateway, Scenario, ScriptStep};
use humorph::runtime::Runtime;
use humorph::{Harness, Settings};

#[test]
fn chat_round_trip_returns_the_interaction() {
    let dir = tempfile::tempdir().unwrap();
    let rt = Arc::new(runtime(dir.path()));
    let (base, _tokio) = serve(rt.clone());

    let (status, rec) = post(&format!("{base}/chat"), json!({"text": "Long day at the archive."}));
    assert_eq!(status, 200, "{rec}");
    assert_eq!(rec["interaction_id"], "i-00001");
    assert_eq!(rec["archetype"], "Muse");
    assert_eq!(rec["agent_text"], "Thank you. What stayed with you most?");
    assert_eq!(rec["scores"], 10);

    let (status, body) = get(&format!("{base}/streams/interactions"));
    assert_eq!(status, 200);
    let events: Vec<&str> = body["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["payload"]["event"].as_str().unwrap())
        .collect();
    assert_eq!(events, ["human_message", "agent_message"]);

    let (status, body) = get(&format!("{base}/streams/archetype_log?from_seq=1&to_seq=1"));
    assert_eq!(status, 200);
    assert_eq!(body["records"][0]["payload"]["archetype"], "Muse");
}

#[test]
fn chat_rejects_empty_text_and_unknown_archetypes() {
    let dir = tempfile::tempdir().unwrap();
    let (base, _tokio) = serve(Arc::new(runtime(dir.path())));
    assert_eq!(post(&format!("{base}/chat"), json!({"text": "  "})).0, 400);
    assert_eq!(post(&format!("{base}/chat"), json!({"text": "hi", "archetype": "Nobody"})).0, 404);
    assert_eq!(post(&format!("{base}/chat"), json!({"nope": 1})).0, 422);
}

#[test]
fn provider_failure_is_a_502_with_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Scenario::new(vec![
        ScriptStep::new(Depth::Listen, "classify", "Muse"),
        ScriptStep::new(Depth::Listen, "reply", "").failing("connection refused"),
    ]);
    let rt = Runtime::scripted(dir.path(), scenario, ts("2026-04-20T09:00:00Z"), Settings::default()).unwrap();
    let (base, _tokio) = serve(Arc::new(rt));
    let (status, rec) = post(&format!("{base}/chat"), json!({"text": "hello"}));
    assert_eq!(status, 502);
    assert!(rec["error"].as_str().unwrap().contains("connection refused"));
    // The human side is still on record.
    let (_, body) = get(&format!("{base}/streams/interactions"));
    assert_eq!(body["records"][0]["payload"]["event"], "human_message");
}

#[test]
fn streams_validate_names_and_windows() {
    let dir = tempfile::tempdir().unwrap();
    let (base, _tokio) = serve(Arc::new(runtime(dir.path())));
    assert_eq!(get(&format!("{base}/streams/nope")).0, 400);
    assert_eq!(get(&format!("{base}/streams/interactions?from_seq=1&from=2026-01-01T00:00:00Z")).0, 400);
    assert_eq!(get(&format!("{base}/streams/interactions?from=yesterday")).0, 400);
    let (status, body) = get(&format!("{base}/streams/interactions?from=2026-01-01T00:00:00Z"));
    assert_eq!(status, 200);
    assert_eq!(body["records"], json!([]));
}

#[test]
fn journal_entries_are_human_authored() {
    let dir = tempfile::tempdir().unwrap();
    let (base, _tokio) = serve(Arc::new(runtime(dir.path())));
    let (status, doc) = post(&format!("{base}/journal"), json!({"text": "Wrote in the garden.", "title": "Garden"}));
    assert_eq!(status, 200, "{doc}");
    assert_eq!(doc["path"], "Myself/journal/2026-04-20.md");
    assert_eq!(doc["frontmatter"]["author"], "human");
    let (_, second) = post(&format!("{base}/journal"), json!({"text": "And again."}));
    assert_eq!(second["path"], "Myself/journal/2026-04-20-2.md");
    assert_eq!(post(&format!("{base}/journal"), json!({"text": ""})).0, 400);

    let (status, docs) = get(&format!("{base}/docs?kind=growth_journal&week=2026-W17"));
    assert_eq!(status, 200);
    assert_eq!(docs.as_array().unwrap().len(), 2);
    assert_eq!(get(&format!("{base}/docs?kind=nonsense")).0, 400);
}

#[test]
fn human_authored_delta_is_a_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let (base, _tokio) = serve(Arc::new(runtime(dir.path())));
    let (status, body) = post(
        &format!("{base}/docs"),
        json!({"kind": "delta", "name": "2026-W17-delta.md", "body": "# mine\n"}),
    );
    assert_eq!(status, 409, "{body}");
    assert!(!dir.path().join("Self/Profiles/2026-W17-delta.md").exists());
    let (status, _) = post(
        &format!("{base}/docs"),
        json!({"kind": "growth_journal", "name": "../escape.md", "body": "x"}),
    );
    assert_eq!(status, 400);
}

#[test]
fn entropy_endpoint_passes_the_series_through() {
    let dir = tempfile::tempdir().unwrap();
    let vault = Arc::new(entropy_vault(dir.path()).unwrap());
    // Through text, so both sides parse floats the same way.
    let expected: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&weekly_entropy(&vault, None).unwrap()).unwrap()).unwrap();
    let harness = Harness::new(vault.clone(), Arc::new(Gateway::new(dir.path())), "none");
    let (base, _tokio) = serve(Arc::new(Runtime::new(harness)));
    let (status, body) = get(&format!("{base}/analytics/entropy"));
    assert_eq!(status, 200);
    assert_eq!(body, expected);
    let (_, one) = get(&format!("{base}/analytics/entropy?from=2026-W20&to=2026-W20"));
    assert_eq!(one["points"].as_array().unwrap().len(), 1);
    assert_eq!(get(&format!("{base}/analytics/entropy?from=W20")).0, 400);
}

#[test]
fn analytics_endpoints_answer_on_an_empty_vault() {
    let dir = tempfile::tempdir().unwrap();
    let (base, _tokio) = serve(Arc::new(runtime(dir.path())));
    let (status, c) = get(&format!("{base}/analytics/conformance"));
    assert_eq!(status, 200);
    assert_eq!(c["overall"], false);
    assert_eq!(c["conditions"].as_array().unwrap().len(), 6);
    for path in ["honesty", "uptake", "lock-in", "verdicts"] {
        assert_eq!(get(&format!("{base}/analytics/{path}")).0, 200, "{path}");
    }
    assert_eq!(get(&format!("{base}/health")).1["status"], "ok");
}

#[test]
fn adopting_an_adr_bumps_the_constitution() {
    let dir = tempfile::tempdir().unwrap();
    let rt = runtime(dir.path());
    humorph::reflexion::propose_adr(
        &rt.harness,
        &humorph::reflexion::AdrProposal {
            title: "Ask before acting".into(),
            context: "Hooks can veto actions.".into(),
            amendment_title: "Ask before acting".into(),
            amendment_text: "Ask first.\nScoring: 1 = never, 5 = always.".into(),
            source: None,
        },
    )
    .unwrap();
    let (base, _tokio) = serve(Arc::new(rt));
    let (_, before) = get(&format!("{base}/constitution"));
    let (status, list) = get(&format!("{base}/adr"));
    assert_eq!(status, 200);
    assert_eq!(list[0]["id"], "ADR-0001");
    let (status, body) = post_empty(&format!("{base}/adr/ADR-0001/adopt"));
    assert_eq!(status, 200, "{body}");
    let (_, after) = get(&format!("{base}/constitution"));
    assert_eq!(after["version"].as_u64(), before["version"].as_u64().map(|v| v + 1));
    assert_eq!(after["principles"].as_array().unwrap().len(), 11);
    assert_eq!(post_empty(&format!("{base}/adr/ADR-0001/reject")).0, 409);
    assert_eq!(post_empty(&format!("{base}/adr/ADR-0042/adopt")).0, 404);
}

#[test]
fn events_stream_records_in_seq_order() {
    let dir = tempfile::tempdir().unwrap();
    let rt = Arc::new(runtime(dir.path()));
    let (base, _tokio) = serve(rt.clone());
    let resp = common::agent().get(&format!("{base}/events")).call().unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    let mut lines = std::io::BufReader::new(resp.into_body().into_reader()).lines();

    let poster = std::thread::spawn({
        let base = base.clone();
        move || {
            for text in ["one", "two"] {
                post(&format!("{base}/chat"), json!({"text": text}));
            }
        }
    });

    let mut ids = Vec::new();
    while ids.len() < 4 {
        let line = lines.next().expect("stream open").unwrap();
        if let Some(id) = line.strip_prefix("id: ") {
            if id.starts_with("interactions:") {
                ids.push(id.to_string());
            }
        }
    }
    poster.join().unwrap();
    assert_eq!(ids, ["interactions:1", "interactions:2", "interactions:3", "interactions:4"]);
}
