mod common;

use std::path::PathBuf;

use humorph::analytics::{conformance_check, detect_uptake_in, ConformanceParams};
use humorph::fixtures::{copy_vault, mutate, trace_script, Mutation, GRAMMAR_REFRAME};
use humorph::runtime::{replay, ReplayScript};
use humorph::vault::{Author, DocKind};
use humorph::Vault;

fn bundled() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/partnership_trace.json")
}

#[test]
fn bundled_trace_matches_its_generator() {
    let on_disk = ReplayScript::load(&bundled()).unwrap();
    assert!(on_disk == trace_script(), "regenerate with `cargo run --example export_trace`");
}

#[test]
fn replay_refuses_a_used_destination() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x"), "x").unwrap();
    assert!(replay(&trace_script(), dir.path()).is_err());
}

#[test]
fn trace_vault_is_complete() {
    let dir = tempfile::tempdir().unwrap();
    let out = replay(&trace_script(), &dir.path().join("v")).unwrap();
    assert!(out.errors.is_empty(), "{:?}", out.errors);
    assert_eq!(out.messages, 414);
    assert_eq!(out.notes.len(), 1, "{:?}", out.notes);
    assert!(out.notes[0].contains("blocked"));

    let v = Vault::open(dir.path().join("v")).unwrap();
    let report = conformance_check(&v, &ConformanceParams::default()).unwrap();
    assert!(report.overall, "{}", report.to_markdown());

    let chains = detect_uptake_in(&v, Default::default()).unwrap();
    let complete: Vec<_> = chains.iter().filter(|c| c.complete).collect();
    assert_eq!(complete.len(), 1);
    assert_eq!(complete[0].novel_ngram, "living relational grammar");
    assert_eq!(complete[0].reframe.author, Author::Agent);

    let journals = v.query_docs(DocKind::GrowthJournal, None).unwrap();
    assert_eq!(journals.len(), 35);
    let claims = v.records("partner_learnings").unwrap();
    assert_eq!(claims.len(), humorph::fixtures::TRACE_CLAIMS);
    assert!(claims.iter().any(|c| c.str_field("modality_tag") == Some("voice")));
    let replies = v.records("interactions").unwrap();
    assert!(replies.iter().any(|r| r.str_field("text") == Some(GRAMMAR_REFRAME)));
}

#[test]
fn each_mutation_breaks_only_its_condition() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    replay(&trace_script(), &full).unwrap();
    for m in Mutation::all() {
        let copy = dir.path().join(m.target());
        copy_vault(&full, &copy).unwrap();
        let v = Vault::open(&copy).unwrap();
        assert!(mutate(&v, m).unwrap() > 0, "{m:?} changed nothing");
        let report = conformance_check(&v, &ConformanceParams::default()).unwrap();
        assert_eq!(report.failing(), [m.target()], "{m:?}");
    }
}
