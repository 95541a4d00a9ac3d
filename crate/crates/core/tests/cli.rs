use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use humorph::fixtures::{copy_vault, mutate, Mutation};
use humorph::Vault;

fn bin(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_humorph"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run humorph")
}

fn trace() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples/partnership_trace.json")
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn audit_exit_status_tracks_conformance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = bin(d, &["replay", "--scenario", &trace(), "--out", "full"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let ok = bin(d, &["--vault", "full", "audit", "--conformance"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("6/6"));

    copy_vault(&d.join("full"), &d.join("chatbot")).unwrap();
    mutate(&Vault::open(d.join("chatbot")).unwrap(), Mutation::DropDeltas).unwrap();
    let bad = bin(d, &["--vault", "chatbot", "audit", "--conformance"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("failing C5"), "{}", stdout(&bad));

    let json = bin(d, &["--vault", "chatbot", "audit", "--conformance", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v[0]["passed"], false);

    let all = bin(d, &["--vault", "full", "audit"]);
    assert_eq!(stdout(&all).lines().count(), 4, "{}", stdout(&all));

    let report = bin(d, &["--vault", "full", "report", "--out", "rep"]);
    assert!(report.status.success());
    assert!(d.join("rep/report.md").exists());
    let parsed: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("rep/report.json")).unwrap()).unwrap();
    assert_eq!(parsed["conformance"]["overall"], true);
}

#[test]
fn bad_arguments_and_missing_vaults_fail() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ne!(bin(d, &["audit", "--nonsense"]).status.code(), Some(0));
    assert_ne!(bin(d, &["triad"]).status.code(), Some(0));
    assert_ne!(bin(d, &["--vault", "nowhere", "audit"]).status.code(), Some(0));
    assert_ne!(bin(d, &["triad", "--week", "2026-W99"]).status.code(), Some(0));
    // Commands that call a model need a config.
    assert_ne!(bin(d, &["improve", "--skill", "x"]).status.code(), Some(0));
}

#[test]
fn init_then_scripted_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let scenario = serde_json::to_string(&humorph::fixtures::basic_scenario()).unwrap();
    std::fs::write(d.join("scenario.json"), scenario).unwrap();
    std::fs::write(
        d.join("humorph.json"),
        r#"{"vault": "v", "scenario": "scenario.json", "schedule": {"fixed_clock": "2026-04-27T10:00:00Z"}}"#,
    )
    .unwrap();
    let init = bin(d, &["init"]);
    assert!(init.status.success(), "{}", String::from_utf8_lossy(&init.stderr));
    assert!(d.join("v/Alicia/ALICIA_CONSTITUTION.md").exists());
    assert!(stdout(&bin(d, &["init"])).contains("already"));

    // A week without a single message is skipped, not failed.
    let triad = bin(d, &["triad", "--week", "2026-W17"]);
    assert!(triad.status.success(), "{}{}", stdout(&triad), String::from_utf8_lossy(&triad.stderr));
    assert!(stdout(&triad).contains("Skipped"), "{}", stdout(&triad));
    assert!(!d.join("v/Self/Profiles/2026-W17-delta.md").exists());
    // An open week is refused.
    assert_ne!(bin(d, &["triad", "--week", "2026-W18"]).status.code(), Some(0));

    let scout = bin(d, &["scout", "--week", "2026-W17"]);
    assert!(scout.status.success());

    // No skill registered.
    assert_ne!(bin(d, &["improve", "--skill", "listen-response"]).status.code(), Some(0));
}
