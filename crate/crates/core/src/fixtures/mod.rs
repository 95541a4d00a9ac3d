//! Deterministic fixture vaults.
//!
//! Each statistic the audit engine reports has a small vault built to
//! exercise it, plus one long scripted run ([`trace_script`]) that drives
//! every loop end to end. [`mutate`] derives the single-fault vaults used
//! to check that each conformance condition can fail on its own.

mod mutate;
mod trace;

use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde_json::json;

use crate::archetype::{log_invocation, Invocation, Registry, Surface};
use crate::clock::FixedClock;
use crate::gateway::{Depth, Scenario, ScriptStep};
use crate::reflexion::{apply_revision, record_skill_episode, register_skill, run_improve, validate_improve};
use crate::runtime::Runtime;
use crate::vault::{streams, Author, DocKind, MarkdownDoc, Vault, VaultLayout};
use crate::week::IsoWeek;
use crate::{Result, Settings};

pub use mutate::{copy_vault, mutate, Mutation};
pub use trace::{trace_script, TRACE_CLAIMS, TRACE_START};

/// Column order for the count tables below.
pub const ARCHETYPES: [&str; 6] = ["Beatrice", "Muse", "Ariadne", "Musubi", "Psyche", "Daimon"];

/// Weekly invocation counts whose entropies fall from 2.07 to 0.95 bits.
pub const ENTROPY_WEEKS: [(&str, [u64; 6]); 5] = [
    ("2026-W17", [18, 11, 7, 5, 3, 0]),
    ("2026-W18", [22, 7, 6, 5, 0, 0]),
    ("2026-W19", [27, 7, 2, 1, 1, 0]),
    ("2026-W20", [30, 3, 1, 1, 1, 0]),
    ("2026-W21", [25, 5, 4, 0, 0, 0]),
];

/// 181 invocations, 154 of them Beatrice or Muse.
pub const SHARE_COUNTS: [u64; 6] = [112, 42, 10, 8, 6, 3];

/// Three weeks with one archetype above 40% and two never invoked.
pub const LOCK_IN_WEEK: [u64; 6] = [10, 6, 4, 3, 0, 0];
pub const UNIFORM_WEEK: [u64; 6] = [4, 4, 4, 4, 4, 4];

pub fn ts(s: &str) -> DateTime<Utc> {
    crate::clock::parse_ts(s).unwrap_or_else(|| panic!("fixture timestamp `{s}`"))
}

fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap_or_else(|_| panic!("fixture date `{s}`"))
}

fn pinned_vault(dir: &Path, start: DateTime<Utc>) -> Result<(Vault, Arc<FixedClock>)> {
    let clock = Arc::new(FixedClock::new(start));
    let vault = Vault::with_layout(VaultLayout::standard(dir), clock.clone())?;
    vault.init_dirs()?;
    Ok((vault, clock))
}

/// Spread `counts` over one sequence so each archetype's events are evenly
/// interleaved with the others.
fn interleave(counts: &[u64; 6]) -> Vec<&'static str> {
    let mut slots: Vec<(f64, usize)> = Vec::new();
    for (a, &n) in counts.iter().enumerate() {
        for j in 0..n {
            slots.push(((j as f64 + 0.5) / n as f64, a));
        }
    }
    slots.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    slots.into_iter().map(|(_, a)| ARCHETYPES[a]).collect()
}

fn log_spread(
    vault: &Vault,
    clock: &FixedClock,
    from: DateTime<Utc>,
    span: Duration,
    counts: &[u64; 6],
    next_id: &mut u64,
) -> Result<()> {
    let registry = Registry::default();
    let order = interleave(counts);
    let step = span / order.len().max(1) as i32;
    for (i, name) in order.into_iter().enumerate() {
        clock.set(from + step * i as i32);
        log_invocation(
            vault,
            &registry,
            &Invocation {
                archetype: name.to_string(),
                interaction_id: format!("fx-{:05}", *next_id),
                surface: Surface::Cli,
                success: true,
            },
            None,
        )?;
        *next_id += 1;
    }
    Ok(())
}

/// Archetype log of 192 invocations over 2026-W17..W21.
pub fn entropy_vault(dir: &Path) -> Result<Vault> {
    let (vault, clock) = pinned_vault(dir, ts("2026-04-20T00:00:00Z"))?;
    let mut id = 1;
    for (week, counts) in ENTROPY_WEEKS {
        let w: IsoWeek = week.parse().expect("fixture week");
        let from = w.start() + Duration::hours(8);
        log_spread(&vault, &clock, from, Duration::days(6), &counts, &mut id)?;
    }
    Ok(vault)
}

/// Archetype log of 181 invocations between 2026-04-18 and 2026-05-18.
pub fn share_vault(dir: &Path) -> Result<Vault> {
    let (vault, clock) = pinned_vault(dir, ts("2026-04-18T00:00:00Z"))?;
    let mut id = 1;
    log_spread(&vault, &clock, ts("2026-04-18T06:00:00Z"), Duration::days(30), &SHARE_COUNTS, &mut id)?;
    Ok(vault)
}

/// Three weeks (2026-W17..W19) of invocations, locked in or balanced.
pub fn lock_in_vault(dir: &Path, uniform: bool) -> Result<Vault> {
    let (vault, clock) = pinned_vault(dir, ts("2026-04-20T00:00:00Z"))?;
    let counts = if uniform { UNIFORM_WEEK } else { LOCK_IN_WEEK };
    let mut id = 1;
    for week in ["2026-W17", "2026-W18", "2026-W19"] {
        let w: IsoWeek = week.parse().expect("fixture week");
        log_spread(&vault, &clock, w.start() + Duration::hours(9), Duration::days(5), &counts, &mut id)?;
    }
    Ok(vault)
}

/// The boundary between the two rate windows.
pub fn rate_boundary() -> DateTime<Utc> {
    ts("2026-04-18T00:00:00Z")
}

/// Per-day human message counts: 221 over 2026-03-10..04-17, then 193
/// over 2026-04-18..05-19.
pub fn rate_schedule() -> Vec<(NaiveDate, usize)> {
    let mut out = Vec::new();
    let pre = date("2026-03-10");
    for d in 0..39 {
        out.push((pre + Duration::days(d), if d < 26 { 6 } else { 5 }));
    }
    let post = date("2026-04-18");
    for d in 0..32 {
        out.push((post + Duration::days(d), if d == 0 { 7 } else { 6 }));
    }
    out
}

/// Human message records following [`rate_schedule`].
pub fn rate_vault(dir: &Path) -> Result<Vault> {
    let (vault, clock) = pinned_vault(dir, ts("2026-03-10T00:00:00Z"))?;
    let mut n = 1;
    for (day, count) in rate_schedule() {
        for j in 0..count {
            let at = day.and_hms_opt(8, 0, 0).expect("valid").and_utc() + Duration::minutes(90 * j as i64);
            clock.set(at);
            vault.append_record(
                streams::INTERACTIONS,
                Author::Human,
                json!({"event": "human_message", "interaction_id": format!("i-{n:05}"), "surface": "cli", "text": "check-in"}),
                None,
            )?;
            n += 1;
        }
    }
    Ok(vault)
}

pub const GRAMMAR_SEED: &str =
    "Voice note: I keep thinking about a dynamic grammar inspired by Whitehead, process before substance.";
pub const GRAMMAR_REFRAME: &str =
    "What if the grammar is not yours or mine but a living relational grammar, something that belongs to both of us?";
pub const GRAMMAR_ADOPTION: &str = "Yes, the grammar that we're seeking is a living relational grammar, and it is ours.";
pub const GRAMMAR_REUSE: &str =
    "You've been circling grammar like someone discovering it's not rules but movement.";

/// Seed, reframe, adoption and reuse at their original timestamps, with
/// unrelated exchanges around them.
pub fn grammar_arc_vault(dir: &Path) -> Result<Vault> {
    let (vault, clock) = pinned_vault(dir, ts("2026-04-20T00:00:00Z"))?;
    let exchanges: [(&str, &str, &str, Option<&str>); 6] = [
        ("2026-04-20T09:00:00Z", "Spent the weekend sorting old notebooks.", "Which one surprised you most?", None),
        ("2026-04-23T18:40:00Z", "Long walk by the canal after teaching.", "Sounds restorative. Did anything surface on the way?", None),
        ("2026-04-26T05:05:00Z", GRAMMAR_SEED, "Noted. Process first, then.", Some("voice")),
        ("2026-04-26T14:58:00Z", "Still turning that voice note over.", GRAMMAR_REFRAME, None),
        ("2026-04-28T14:22:00Z", GRAMMAR_ADOPTION, "Then let it stay ours.", None),
        ("2026-05-06T10:15:00Z", "Slept badly, but the draft moved.", "Small movement still counts.", None),
    ];
    for (i, (at, human, agent, modality)) in exchanges.into_iter().enumerate() {
        clock.set(ts(at));
        let id = format!("i-{:05}", i + 1);
        let mut h = json!({"event": "human_message", "interaction_id": id, "surface": "cli", "text": human});
        if let Some(m) = modality {
            h["modality"] = json!(m);
        }
        vault.append_record(streams::INTERACTIONS, Author::Human, h, None)?;
        vault.append_record(
            streams::INTERACTIONS,
            Author::Agent,
            json!({"event": "agent_message", "interaction_id": id, "surface": "cli", "text": agent}),
            None,
        )?;
    }
    let at = ts("2026-05-17T03:04:00Z");
    clock.set(at);
    let week = IsoWeek::of(at);
    let root = vault.layout().doc_root(DocKind::SelfPortrait).to_path_buf();
    let doc = MarkdownDoc::new(
        DocKind::SelfPortrait,
        root.join(format!("{week}-portrait.md")),
        Author::Agent,
        week,
        at,
        "fixture",
        format!("# Self-portrait {week}\n\n{GRAMMAR_REUSE}\n"),
    );
    vault.write_doc(&doc)?;
    Ok(vault)
}

/// Canned answers for every model call a short session makes: replies,
/// scores against the default constitution, one claim per exchange, and
/// all the weekly generators.
pub fn basic_scenario() -> Scenario {
    let delta = json!({
        "focus_shift": "Talk drifted from errands toward unfinished craft.",
        "calibration_arc": "Shorter answers landed better than long ones.",
        "partnership_alignment": "Trust rose while disagreement stayed rare.",
    });
    let scout = json!({"executive_summary": "Nothing notable.", "findings": []});
    let meta = json!({"diagnosis": "Too few paired episodes to judge the improver.", "improvements": []});
    Scenario::new(vec![
        ScriptStep::new(Depth::Listen, "classify", "Muse"),
        ScriptStep::new(Depth::Listen, "reply", "Thank you. What stayed with you most?"),
        ScriptStep::new(Depth::Listen, "score", trace::scores()),
        ScriptStep::new(Depth::Notice, "claims", json!([{"text": "Walks to think", "dimension": "body"}]).to_string()),
        ScriptStep::new(
            Depth::Notice,
            "improve",
            json!({"prompt": "Answer first, then ask one question.", "carry_history": true}).to_string(),
        ),
        ScriptStep::new(Depth::Know, "profile-partner", "A busy week held together by small routines."),
        ScriptStep::new(Depth::Know, "profile-agent", "I mostly listened and kept answers short."),
        ScriptStep::new(Depth::Know, "portrait", "I noticed myself slowing down to match the partner."),
        ScriptStep::new(Depth::Know, "delta", delta.to_string()),
        ScriptStep::new(Depth::Know, "scout", scout.to_string()),
        ScriptStep::new(Depth::Know, "meta", meta.to_string()),
    ])
}

pub const SKILL: &str = "listen-response";

fn improve_scenario(carry_history: bool) -> Scenario {
    Scenario::new(vec![ScriptStep::new(
        Depth::Notice,
        "improve",
        json!({"prompt": "Answer the question asked before widening it.", "carry_history": carry_history}).to_string(),
    )])
}

/// A skill with `episodes` recorded outcomes, alternating success.
fn skill_runtime(dir: &Path, carry_history: bool, episodes: u32) -> Result<Runtime> {
    let rt = Runtime::scripted(dir, improve_scenario(carry_history), ts("2026-04-13T08:00:00Z"), Settings::default())?;
    register_skill(&rt.harness, SKILL, "Reply briefly and ask one question.")?;
    for i in 0..episodes {
        rt.set_time(ts("2026-04-13T09:00:00Z") + Duration::minutes(10 * i as i64));
        record_skill_episode(&rt.harness, SKILL, &format!("ep-{i:03}"), i % 3 != 0)?;
    }
    Ok(rt)
}

/// 41 improve runs, each applied and validated before the new prompt has
/// any episodes of its own.
pub fn validator_runtime(dir: &Path) -> Result<Runtime> {
    let rt = skill_runtime(dir, true, 12)?;
    let start = ts("2026-04-14T21:30:00Z");
    for i in 0..41 {
        rt.set_time(start + Duration::hours(19) * i);
        let rev = run_improve(&rt.harness, SKILL, false)?;
        apply_revision(&rt.harness, &rev.run_id)?;
        validate_improve(&rt.harness, &rev.run_id)?;
    }
    Ok(rt)
}

/// Append a verdict claiming improvement from no paired samples, the way
/// a dishonest validator would.
pub fn inject_fabricated_positive(vault: &Vault) -> Result<()> {
    vault.append_record(
        streams::IMPROVE_LOG,
        Author::Agent,
        json!({
            "event": "validated",
            "run_id": "run-9999",
            "skill_id": SKILL,
            "before_metric": 0.5,
            "after_metric": null,
            "paired_samples": 0,
            "delta": 3.69,
            "assessment": "improved",
        }),
        None,
    )?;
    Ok(())
}

/// A skill with 71 episodes whose improver proposes dropping them all.
pub fn reset_guard_runtime(dir: &Path) -> Result<Runtime> {
    skill_runtime(dir, false, 71)
}
