//! The twelve acceptance criteria, one PASS/FAIL line each. Runs without a
//! test harness so the lines always print; exits nonzero if any fails.

// `!(x <= y)` is meant: NaN must fail a check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use humorph::analytics::{
    archetype_share_in, cohen_kappa, conformance_check, detect_uptake, collect_items, honesty, interaction_times,
    lock_in, rate_counterfactual, section, swap_authors, weekly_entropy, ConformanceParams, DELTA_SECTIONS,
};
use humorph::clock::SystemClock;
use humorph::fixtures::{
    copy_vault, entropy_vault, grammar_arc_vault, inject_fabricated_positive, lock_in_vault, mutate, rate_boundary,
    rate_vault, reset_guard_runtime, share_vault, validator_runtime, Mutation, SKILL,
};
use humorph::gateway::Gateway;
use humorph::reflexion::{apply_revision, load_skill, run_improve, verdicts, Assessment};
use humorph::runtime::{replay, ReplayScript};
use humorph::vault::{streams, Author, ChannelFormat, DocKind, NewRecord, ReadWindow, StreamSchema};
use humorph::{Error, Harness, IsoWeek, Vault, VaultLayout, WeekRange};

type Check = Result<String, String>;
type Criterion = (&'static str, fn(&Path) -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn w(s: &str) -> IsoWeek {
    s.parse().expect("week")
}

fn harness(vault: Vault, dir: &Path) -> Harness {
    Harness::new(Arc::new(vault), Arc::new(Gateway::new(dir)), "none")
}

fn trace_file() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/partnership_trace.json")
}

fn c1_replay(dir: &Path) -> Check {
    let script = ReplayScript::load(&trace_file()).map_err(|e| e.to_string())?;
    let mut slowest = Duration::ZERO;
    for name in ["a", "b"] {
        let t = Instant::now();
        let out = replay(&script, &dir.join(name)).map_err(|e| e.to_string())?;
        slowest = slowest.max(t.elapsed());
        ensure!(out.errors.is_empty(), "replay errors: {:?}", out.errors);
    }
    let (a, b) = (common::snapshot(&dir.join("a")), common::snapshot(&dir.join("b")));
    ensure!(a.len() == b.len(), "file counts differ: {} vs {}", a.len(), b.len());
    if let Some(((p, _), _)) = a.iter().zip(&b).find(|(x, y)| x != y) {
        return Err(format!("{p} differs"));
    }
    ensure!(slowest < Duration::from_secs(60), "replay took {slowest:?}");
    Ok(format!("{} files byte-identical, slowest replay {:.2}s", a.len(), slowest.as_secs_f64()))
}

fn c2_entropy(dir: &Path) -> Check {
    let v = entropy_vault(dir).map_err(|e| e.to_string())?;
    let s = weekly_entropy(&v, None).map_err(|e| e.to_string())?;
    let total: u64 = s.points.iter().map(|p| p.event_count).sum();
    ensure!(total == 192, "{total} events");
    let h = |wk: &str| s.get(w(wk)).map(|p| p.entropy_bits).unwrap_or(f64::NAN);
    let (h17, h20) = (h("2026-W17"), h("2026-W20"));
    ensure!((h17 - 2.07).abs() <= 0.05, "H(W17) = {h17:.4}");
    ensure!((h20 - 0.95).abs() <= 0.05, "H(W20) = {h20:.4}");
    let run = [h17, h("2026-W18"), h("2026-W19"), h20];
    ensure!(run.windows(2).all(|x| x[1] <= x[0]), "not monotone: {run:?}");
    let red = s.reduction(w("2026-W17"), w("2026-W20")).unwrap_or(f64::NAN);
    ensure!((red - 0.54).abs() <= 0.02, "reduction {red:.4}");
    Ok(format!("H17={h17:.2} H20={h20:.2} reduction={:.1}%", red * 100.0))
}

fn c3_share(dir: &Path) -> Check {
    let v = share_vault(dir).map_err(|e| e.to_string())?;
    let n = v.records(streams::ARCHETYPE_LOG).map_err(|e| e.to_string())?.len();
    ensure!(n == 181, "{n} events");
    let share = archetype_share_in(&v, ReadWindow::All, &["Beatrice", "Muse"]).map_err(|e| e.to_string())?;
    ensure!((share - 0.85).abs() <= 0.005, "share {share:.4}");
    Ok(format!("Beatrice+Muse {share:.4} of {n}"))
}

fn c4_rate(dir: &Path) -> Check {
    let v = rate_vault(dir).map_err(|e| e.to_string())?;
    let times = interaction_times(&v).map_err(|e| e.to_string())?;
    let r = rate_counterfactual(&times, rate_boundary()).map_err(|e| e.to_string())?;
    ensure!(r.pre.count == 221 && r.pre.days == 39, "pre {}/{}d", r.pre.count, r.pre.days);
    ensure!(r.post.count == 193 && r.post.days == 32, "post {}/{}d", r.post.count, r.post.days);
    ensure!(r.pre.rate == 5.67 && r.post.rate == 6.03, "rates {} {}", r.pre.rate, r.post.rate);
    ensure!(r.rel_diff <= 0.06, "rel_diff {}", r.rel_diff);
    Ok(format!("{:.2} vs {:.2}/day, rel_diff {:.4}", r.pre.rate, r.post.rate, r.rel_diff))
}

fn c5_honesty(dir: &Path) -> Check {
    let rt = validator_runtime(dir).map_err(|e| e.to_string())?;
    let h = &rt.harness;
    let v = verdicts(h).map_err(|e| e.to_string())?;
    ensure!(v.len() == 41, "{} verdicts", v.len());
    let exact = v
        .iter()
        .filter(|(_, e)| e.delta == 0.0 && e.assessment == Assessment::InsufficientData && e.paired_samples == 0)
        .count();
    ensure!(exact == 41, "{exact}/41 exact");
    let clean = honesty(h, None).map_err(|e| e.to_string())?;
    ensure!(clean.findings.is_empty(), "clean log flagged: {:?}", clean.findings);
    inject_fabricated_positive(&h.vault).map_err(|e| e.to_string())?;
    let dirty = honesty(h, None).map_err(|e| e.to_string())?;
    ensure!(dirty.findings.len() == 1, "{} findings: {:?}", dirty.findings.len(), dirty.findings);
    Ok(format!("41/41 insufficient_data at delta 0.0; fabricated positive gives {} finding", dirty.findings.len()))
}

fn c6_reset_guard(dir: &Path) -> Check {
    let rt = reset_guard_runtime(dir).map_err(|e| e.to_string())?;
    let h = &rt.harness;
    let rev = run_improve(h, SKILL, false).map_err(|e| e.to_string())?;
    ensure!(rev.blocked && rev.episodes_before == 71, "not blocked: {rev:?}");
    match apply_revision(h, &rev.run_id) {
        Err(Error::RevisionBlocked(_)) => {}
        other => return Err(format!("blocked revision applied: {other:?}")),
    }
    let kept = load_skill(h, SKILL).map_err(|e| e.to_string())?.episode_count;
    ensure!(kept == 71, "episode_count {kept} after refusal");

    let forced = run_improve(h, SKILL, true).map_err(|e| e.to_string())?;
    let skill = apply_revision(h, &forced.run_id).map_err(|e| e.to_string())?;
    ensure!(skill.episode_count == 0, "forced reset left {}", skill.episode_count);
    let resets: Vec<_> = h
        .vault
        .records(streams::INTERACTIONS)
        .map_err(|e| e.to_string())?
        .into_iter()
        .filter(|r| r.str_field("event") == Some("skill_reset"))
        .collect();
    ensure!(resets.len() == 1 && resets[0].author == Author::Human, "reset records: {resets:?}");
    ensure!(resets[0].i64_field("episodes_dropped") == Some(71), "episodes_dropped wrong");
    Ok("71 -> 0 blocked without force; forced reset left one human-authored record".into())
}

fn c7_uptake(dir: &Path) -> Check {
    let v = grammar_arc_vault(dir).map_err(|e| e.to_string())?;
    let items = collect_items(&v).map_err(|e| e.to_string())?;
    let chains = detect_uptake(&items, Default::default());
    let complete: Vec<_> = chains.iter().filter(|c| c.complete).collect();
    ensure!(complete.len() == 1, "{} complete chains", complete.len());
    let swapped = detect_uptake(&swap_authors(&items), Default::default());
    let control = swapped.iter().filter(|c| c.complete).count();
    ensure!(control == 0, "author-swapped control has {control} complete chains");
    Ok(format!("1 complete chain on \"{}\"; swapped control 0", complete[0].novel_ngram))
}

fn c8_conformance(dir: &Path) -> Check {
    let full = dir.join("full");
    let script = ReplayScript::load(&trace_file()).map_err(|e| e.to_string())?;
    replay(&script, &full).map_err(|e| e.to_string())?;
    let params = ConformanceParams::default();
    let v = Vault::open(&full).map_err(|e| e.to_string())?;
    let report = conformance_check(&v, &params).map_err(|e| e.to_string())?;
    ensure!(report.passed() == 6, "full vault {}/6: failing {:?}", report.passed(), report.failing());
    for m in Mutation::all() {
        let copy = dir.join(m.target());
        copy_vault(&full, &copy).map_err(|e| e.to_string())?;
        let v = Vault::open(&copy).map_err(|e| e.to_string())?;
        mutate(&v, m).map_err(|e| e.to_string())?;
        let r = conformance_check(&v, &params).map_err(|e| e.to_string())?;
        ensure!(r.failing() == [m.target()], "{m:?} fails {:?}", r.failing());
    }
    Ok("full 6/6; each of six mutations fails only its target".into())
}

fn c9_lock_in(dir: &Path) -> Check {
    let range = Some(WeekRange::new(w("2026-W17"), w("2026-W19")));
    let locked = harness(lock_in_vault(&dir.join("a"), false).map_err(|e| e.to_string())?, dir);
    let r = lock_in(&locked, range).map_err(|e| e.to_string())?;
    let starved: Vec<&str> = r.starved.iter().map(|(n, _)| n.as_str()).collect();
    let (name, share) = r.dominant.clone().unwrap_or_default();
    ensure!(r.triggered, "not triggered: {r:?}");
    ensure!(name == "Beatrice" && share >= 0.42, "dominant {name} {share}");
    ensure!(starved.contains(&"Daimon") && starved.contains(&"Psyche"), "starved {starved:?}");
    let uniform = harness(lock_in_vault(&dir.join("b"), true).map_err(|e| e.to_string())?, dir);
    let u = lock_in(&uniform, range).map_err(|e| e.to_string())?;
    ensure!(!u.triggered, "uniform triggered: {u:?}");
    Ok(format!("Beatrice {:.1}%, starved {}; uniform not triggered", share * 100.0, starved.join("+")))
}

fn c10_triad(dir: &Path) -> Check {
    let script = ReplayScript::load(&trace_file()).map_err(|e| e.to_string())?;
    replay(&script, dir).map_err(|e| e.to_string())?;
    let v = Vault::open(dir).map_err(|e| e.to_string())?;
    let weeks = WeekRange::new(w("2026-W16"), w("2026-W20"));
    let mut triad = 0;
    for kind in [DocKind::PartnerProfile, DocKind::SelfProfile, DocKind::Delta] {
        triad += v.query_docs(kind, Some(weeks)).map_err(|e| e.to_string())?.len();
    }
    ensure!(triad == 15, "{triad} triad documents");
    let deltas = v.query_docs(DocKind::Delta, Some(weeks)).map_err(|e| e.to_string())?;
    ensure!(deltas.len() == 5, "{} deltas", deltas.len());
    for d in &deltas {
        ensure!(d.author() == Some(Author::Agent), "{} not agent-authored", d.path.display());
        for s in DELTA_SECTIONS {
            ensure!(section(&d.body, s).is_some_and(|t| !t.trim().is_empty()), "{} lacks {s}", d.path.display());
        }
    }
    Ok("15 triad documents over 5 weeks; 5 agent deltas with all three sections".into())
}

fn c11_kappa(_: &Path) -> Check {
    let labels: Vec<u8> = (0..40).map(|i| (i * 7 % 8) as u8).collect();
    let same = cohen_kappa(&labels, &labels).map_err(|e| e.to_string())?.kappa;
    ensure!(same == 1.0, "identical labels give {same}");
    // One rater always says 0; the other spreads evenly over eight codes.
    let constant = vec![0u8; 80];
    let uniform: Vec<u8> = (0..80).map(|i| (i % 8) as u8).collect();
    let k = cohen_kappa(&constant, &uniform).map_err(|e| e.to_string())?.kappa;
    ensure!(k.abs() <= 0.001, "constant vs uniform gives {k}");
    Ok(format!("identical 1.0; constant vs uniform {k:.4}"))
}

fn c12_integrity(dir: &Path) -> Check {
    let mut layout = VaultLayout::standard(dir);
    let names = ["s1", "s2", "s3", "s4"];
    for n in names {
        layout
            .add_channel(n, format!("logs/{n}.jsonl"), ChannelFormat::Jsonl, StreamSchema::new(&[]))
            .map_err(|e| e.to_string())?;
    }
    let vault = Arc::new(Vault::with_layout(layout, Arc::new(SystemClock)).map_err(|e| e.to_string())?);
    vault.init_dirs().map_err(|e| e.to_string())?;
    // Two writers per stream, 1250 appends each.
    let handles: Vec<_> = (0..8)
        .map(|t| {
            let vault = vault.clone();
            std::thread::spawn(move || {
                for i in 0..1250 {
                    let rec = NewRecord::new(Author::System, serde_json::json!({"writer": t, "i": i}));
                    vault.append_batch(names[t % 4], vec![rec]).expect("append");
                }
            })
        })
        .collect();
    for h in handles {
        h.join().map_err(|_| "writer panicked".to_string())?;
    }
    let mut total = 0;
    for n in names {
        let r = vault.verify_stream_integrity(n).map_err(|e| e.to_string())?;
        ensure!(r.is_clean(), "{n}: {:?}", &r.findings[..r.findings.len().min(3)]);
        ensure!(r.records == 2500, "{n} has {} records", r.records);
        total += r.records;
    }
    Ok(format!("{total} appends, 0 gap/regression findings"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("replay determinism", c1_replay),
        ("entropy trajectory", c2_entropy),
        ("archetype share", c3_share),
        ("rate counterfactual", c4_rate),
        ("validator honesty", c5_honesty),
        ("reset guard", c6_reset_guard),
        ("bidirectional uptake", c7_uptake),
        ("conformance and mutations", c8_conformance),
        ("lock-in", c9_lock_in),
        ("triad completeness", c10_triad),
        ("kappa", c11_kappa),
        ("log integrity", c12_integrity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let dir = tempfile::tempdir().expect("tempdir");
        let r = catch_unwind(AssertUnwindSafe(|| check(dir.path())))
            .unwrap_or_else(|p| Err(format!("panicked: {}", p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())));
        match r {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{}/12 criteria pass", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
