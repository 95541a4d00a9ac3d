use super::*;
use crate::clock::{parse_ts, FixedClock};
use crate::week::IsoWeek;
use serde_json::json;

fn vault_at(dir: &Path, at: &str) -> (Vault, Arc<FixedClock>) {
    let clock = Arc::new(FixedClock::new(parse_ts(at).unwrap()));
    let v = Vault::with_layout(VaultLayout::standard(dir), clock.clone()).unwrap();
    (v, clock)
}

fn invocation(name: &str, id: &str) -> Value {
    json!({"archetype": name, "interaction_id": id, "surface": "cli", "success": true})
}

#[test]
fn first_append_gets_seq_one_and_duplicates_are_kept() {
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = vault_at(dir.path(), "2026-04-18T10:00:00Z");
    let a = v
        .append_record(streams::ARCHETYPE_LOG, Author::Agent, invocation("Muse", "i1"), None)
        .unwrap();
    let b = v
        .append_record(streams::ARCHETYPE_LOG, Author::Agent, invocation("Muse", "i1"), None)
        .unwrap();
    assert_eq!((a.seq, b.seq), (1, 2));
    let recs = v.records(streams::ARCHETYPE_LOG).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0].payload, recs[1].payload);
}

#[test]
fn schema_violation_and_unknown_stream_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = vault_at(dir.path(), "2026-04-18T10:00:00Z");
    let err = v
        .append_record(streams::ARCHETYPE_LOG, Author::Agent, json!({"archetype": "Muse"}), None)
        .unwrap_err();
    assert!(matches!(err, VaultError::Schema { .. }));
    let err = v
        .append_record("nope", Author::Agent, json!({}), None)
        .unwrap_err();
    assert!(matches!(err, VaultError::UnknownStream(_)));
    assert!(v.records(streams::ARCHETYPE_LOG).unwrap().is_empty());
}

#[test]
fn clock_regression_is_clamped() {
    let dir = tempfile::tempdir().unwrap();
    let (v, clock) = vault_at(dir.path(), "2026-04-18T10:00:00Z");
    v.append_record(streams::ARCHETYPE_LOG, Author::Agent, invocation("Muse", "a"), None)
        .unwrap();
    clock.set(parse_ts("2026-04-18T09:00:00Z").unwrap());
    let r = v
        .append_record(streams::ARCHETYPE_LOG, Author::Agent, invocation("Muse", "b"), None)
        .unwrap();
    assert_eq!(r.ts, parse_ts("2026-04-18T10:00:00Z").unwrap());
    assert!(v.verify_stream_integrity(streams::ARCHETYPE_LOG).unwrap().is_clean());
}

#[test]
fn writer_resumes_after_reopen() {
    let dir = tempfile::tempdir().unwrap();
    {
        let (v, _) = vault_at(dir.path(), "2026-04-18T10:00:00Z");
        for i in 0..3 {
            v.append_record(
                streams::ARCHETYPE_LOG,
                Author::Agent,
                invocation("Muse", &format!("i{i}")),
                None,
            )
            .unwrap();
        }
    }
    let (v, _) = vault_at(dir.path(), "2026-04-18T11:00:00Z");
    let r = v
        .append_record(streams::ARCHETYPE_LOG, Author::Agent, invocation("Muse", "i3"), None)
        .unwrap();
    assert_eq!(r.seq, 4);
}

#[test]
fn corrupt_middle_line_is_skipped_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = vault_at(dir.path(), "2026-04-18T10:00:00Z");
    for i in 0..5 {
        v.append_record(
            streams::ARCHETYPE_LOG,
            Author::Agent,
            invocation("Muse", &format!("i{i}")),
            None,
        )
        .unwrap();
    }
    let path = dir.path().join("memory/archetype_log.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[2] = "{not json";
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let read = v.read_stream(streams::ARCHETYPE_LOG, ReadWindow::All).unwrap();
    assert_eq!(read.records.len(), 4);
    assert_eq!(read.diagnostics.len(), 1);
    assert_eq!(read.diagnostics[0].line, 3);
}

#[test]
fn deleted_line_and_ts_swap_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let (v, clock) = vault_at(dir.path(), "2026-04-18T10:00:00Z");
    for i in 0..5 {
        clock.advance(chrono::Duration::minutes(1));
        v.append_record(
            streams::ARCHETYPE_LOG,
            Author::Agent,
            invocation("Muse", &format!("i{i}")),
            None,
        )
        .unwrap();
    }
    let path = dir.path().join("memory/archetype_log.jsonl");
    let original = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = original.lines().collect();

    let mut gap = lines.clone();
    gap.remove(2);
    fs::write(&path, gap.join("\n") + "\n").unwrap();
    let report = v.verify_stream_integrity(streams::ARCHETYPE_LOG).unwrap();
    assert_eq!(
        report.findings,
        vec![IntegrityFinding::SeqGap {
            line: 3,
            expected: 3,
            found: 4
        }]
    );

    let swapped = lines[3].replace("10:04:00Z", "10:01:30Z");
    let mut reg = lines.clone();
    reg[3] = &swapped;
    fs::write(&path, reg.join("\n") + "\n").unwrap();
    let report = v.verify_stream_integrity(streams::ARCHETYPE_LOG).unwrap();
    assert_eq!(report.findings.len(), 1);
    assert!(matches!(
        report.findings[0],
        IntegrityFinding::TsRegression { seq: 4, .. }
    ));
}

#[test]
fn torn_tail_is_ignored_and_fenced_on_next_append() {
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = vault_at(dir.path(), "2026-04-18T10:00:00Z");
    v.append_record(streams::ARCHETYPE_LOG, Author::Agent, invocation("Muse", "a"), None)
        .unwrap();
    let path = dir.path().join("memory/archetype_log.jsonl");
    let mut f = OpenOptions::new().append(true).open(&path).unwrap();
    f.write_all(b"{\"seq\":2,\"ts\"").unwrap();
    drop(f);
    let (v, _) = vault_at(dir.path(), "2026-04-18T11:00:00Z");
    assert_eq!(v.records(streams::ARCHETYPE_LOG).unwrap().len(), 1);
    let r = v
        .append_record(streams::ARCHETYPE_LOG, Author::Agent, invocation("Muse", "b"), None)
        .unwrap();
    assert_eq!(r.seq, 2);
    let read = v.read_stream(streams::ARCHETYPE_LOG, ReadWindow::All).unwrap();
    assert_eq!(read.records.len(), 2);
    assert_eq!(read.diagnostics.len(), 1);
}

#[test]
fn tsv_stream_round_trips_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = vault_at(dir.path(), "2026-04-18T10:00:00Z");
    let rows = (1..=3)
        .map(|p| {
            NewRecord::new(
                Author::Agent,
                json!({"interaction_id": "int-1", "principle_id": p, "score": 3, "rationale": "ok"}),
            )
        })
        .collect();
    v.append_batch(streams::CONSTITUTION_SCORES, rows).unwrap();
    let text = fs::read_to_string(dir.path().join("constitution_scores.tsv")).unwrap();
    assert!(text.starts_with(TSV_HEADER));
    assert_eq!(text.lines().count(), 4);
    let recs = v.records(streams::CONSTITUTION_SCORES).unwrap();
    assert_eq!(recs.iter().map(|r| r.seq).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(v.verify_stream_integrity(streams::CONSTITUTION_SCORES).unwrap().is_clean());
}

#[test]
fn time_window_filters_inclusively() {
    let dir = tempfile::tempdir().unwrap();
    let (v, clock) = vault_at(dir.path(), "2026-04-17T23:00:00Z");
    for at in ["2026-04-17T23:00:00Z", "2026-04-18T00:00:00Z", "2026-05-18T12:00:00Z", "2026-05-19T00:00:00Z"] {
        clock.set(parse_ts(at).unwrap());
        v.append_record(streams::ARCHETYPE_LOG, Author::Agent, invocation("Muse", at), None)
            .unwrap();
    }
    let read = v
        .read_stream(
            streams::ARCHETYPE_LOG,
            ReadWindow::Time {
                from: parse_ts("2026-04-18T00:00:00Z").unwrap(),
                to: parse_ts("2026-05-18T23:59:59Z").unwrap(),
            },
        )
        .unwrap();
    assert_eq!(read.records.len(), 2);
    let seqs = v
        .read_stream(streams::ARCHETYPE_LOG, ReadWindow::Seq { from: 2, to: 3 })
        .unwrap();
    assert_eq!(seqs.records.len(), 2);
}

fn portrait(week: &str, body: &str) -> MarkdownDoc {
    let w: IsoWeek = week.parse().unwrap();
    MarkdownDoc::new(
        DocKind::SelfPortrait,
        format!("Wisdom/Lived/{week}-portrait.md"),
        Author::Agent,
        w,
        w.sunday().and_hms_opt(3, 4, 0).unwrap().and_utc(),
        "test",
        body,
    )
}

#[test]
fn rewrite_keeps_history() {
    let dir = tempfile::tempdir().unwrap();
    let (v, clock) = vault_at(dir.path(), "2026-05-17T03:04:00Z");
    let doc = portrait("2026-W20", "first\n");
    let rel = v.write_doc(&doc).unwrap();
    assert!(v.history(&rel).unwrap().is_empty());
    clock.advance(chrono::Duration::seconds(1));
    v.write_doc(&portrait("2026-W20", "second\n")).unwrap();
    v.write_doc(&portrait("2026-W20", "third\n")).unwrap();
    assert_eq!(v.history(&rel).unwrap().len(), 2);
    assert_eq!(v.read_doc(&rel).unwrap().body, "third\n");
    assert_eq!(v.query_docs(DocKind::SelfPortrait, None).unwrap().len(), 1);
}

#[test]
fn doc_validation() {
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = vault_at(dir.path(), "2026-05-17T03:04:00Z");
    let mut wrong_root = portrait("2026-W20", "x");
    wrong_root.path = "Self/Profiles/x.md".into();
    assert!(matches!(v.write_doc(&wrong_root), Err(VaultError::KindMismatch { .. })));

    let mut escape = portrait("2026-W20", "x");
    escape.path = "../Wisdom/Lived/x.md".into();
    assert!(matches!(v.write_doc(&escape), Err(VaultError::PathEscape(_))));

    let w: IsoWeek = "2026-W18".parse().unwrap();
    let delta = MarkdownDoc::new(
        DocKind::Delta,
        "Self/Profiles/2026-W18-delta.md",
        Author::Human,
        w,
        v.now(),
        "console",
        "edited",
    );
    assert!(matches!(v.write_doc(&delta), Err(VaultError::Authorship(_))));

    let mut incomplete = portrait("2026-W20", "x");
    incomplete.frontmatter.remove("generator");
    assert!(matches!(v.write_doc(&incomplete), Err(VaultError::Frontmatter { .. })));
}

#[test]
fn query_orders_by_week_then_path() {
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = vault_at(dir.path(), "2026-05-17T03:04:00Z");
    for w in ["2026-W20", "2026-W18", "2026-W19"] {
        v.write_doc(&portrait(w, "x")).unwrap();
    }
    let range: WeekRange = "2026-W18..2026-W19".parse().unwrap();
    let got: Vec<String> = v
        .query_docs(DocKind::SelfPortrait, Some(range))
        .unwrap()
        .iter()
        .map(|d| d.get("iso_week").unwrap().to_string())
        .collect();
    assert_eq!(got, vec!["2026-W18", "2026-W19"]);
    assert!(v.query_docs(DocKind::Adr, None).unwrap().is_empty());
}

#[test]
fn subscribers_see_appends_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = vault_at(dir.path(), "2026-04-18T10:00:00Z");
    let rx = v.subscribe();
    for i in 0..3 {
        v.append_record(
            streams::ARCHETYPE_LOG,
            Author::Agent,
            invocation("Muse", &format!("i{i}")),
            None,
        )
        .unwrap();
    }
    let seqs: Vec<u64> = rx.try_iter().map(|r| r.seq).collect();
    assert_eq!(seqs, vec![1, 2, 3]);
}

#[test]
fn lock_is_exclusive_until_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let (v, _) = vault_at(dir.path(), "2026-04-18T10:00:00Z");
    let held = v.try_lock("improve-x").unwrap();
    assert!(held.is_some());
    assert!(v.try_lock("improve-x").unwrap().is_none());
    drop(held);
    assert!(v.try_lock("improve-x").unwrap().is_some());
}
