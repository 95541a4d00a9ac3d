//! The weekly triad: agent self-profile, partner profile and the delta
//! that takes the partnership itself as its object.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::claims::{claims_in, dimension_counts, Dimension};
use super::{cite, interactions_in_week, record_self_model_update, stamp, week_closed};
use crate::analytics::{delta_reducibility, section, Reducibility, DELTA_SECTIONS};
use crate::archetype::{detect_lock_in, weekly_distribution, WeekCounts};
use crate::gateway::{CompletionRequest, Depth, Message};
use crate::reflexion::{unfence, verdicts};
use crate::vault::{streams, Author, DocKind, MarkdownDoc, ReadWindow};
use crate::week::{IsoWeek, WeekRange};
use crate::{Error, Harness, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subject {
    Agent,
    Partner,
}

pub fn profile_path(h: &Harness, subject: Subject, week: IsoWeek) -> PathBuf {
    let (kind, tail) = match subject {
        Subject::Agent => (DocKind::SelfProfile, h.settings.agent_name.as_str()),
        Subject::Partner => (DocKind::PartnerProfile, "partner"),
    };
    h.vault.layout().doc_root(kind).join(format!("{week}-{tail}.md"))
}

pub fn delta_path(h: &Harness, week: IsoWeek) -> PathBuf {
    h.vault.layout().doc_root(DocKind::Delta).join(format!("{week}-delta.md"))
}

fn narrative(h: &Harness, task: &str, instruction: &str, context: String) -> Result<crate::gateway::Completion> {
    let req = CompletionRequest::new(
        Depth::Know,
        task,
        vec![Message::system(instruction), Message::human(context)],
        h.settings.budgets.know,
    );
    h.complete(&req)
}

/// Per-dimension claim counts as written in a partner profile's headings.
pub fn profile_dimension_counts(body: &str) -> BTreeMap<Dimension, usize> {
    body.lines()
        .filter_map(|l| l.strip_prefix("### "))
        .filter_map(|h| {
            let (name, rest) = h.split_once(" (")?;
            let n = rest.strip_suffix(')')?.parse().ok()?;
            Some((name.parse().ok()?, n))
        })
        .collect()
}

fn journals_for(h: &Harness, week: IsoWeek) -> Result<Vec<MarkdownDoc>> {
    let journals = h.vault.query_docs(DocKind::GrowthJournal, None)?;
    let same: Vec<MarkdownDoc> = journals.iter().filter(|d| d.iso_week() == Some(week)).cloned().collect();
    if !same.is_empty() {
        return Ok(same);
    }
    Ok(journals
        .into_iter()
        .filter(|d| d.created().is_some_and(|t| t < week.end()))
        .max_by_key(|d| d.created())
        .into_iter()
        .collect())
}

fn partner_profile(h: &Harness, week: IsoWeek) -> Result<MarkdownDoc> {
    let claims = claims_in(h, ReadWindow::weeks(WeekRange::single(week)))?;
    let counts = dimension_counts(&claims);
    let mut dims = String::from("## Dimensions\n\n");
    for d in Dimension::ALL {
        let _ = writeln!(dims, "### {d} ({})\n", counts[&d]);
        for c in claims.iter().filter(|c| c.dimension == d) {
            let review = if c.needs_review { " (needs review)" } else { "" };
            let _ = writeln!(dims, "- {}{review}", c.text);
        }
        if counts[&d] > 0 {
            dims.push('\n');
        }
    }
    let journals = journals_for(h, week)?;
    let mut context = format!("Week {week}. Claims about the partner by dimension:\n{dims}\nJournal entries:\n");
    for j in &journals {
        let _ = writeln!(context, "[[{}]]\n{}", j.path.display(), j.body.trim());
    }
    let completion = narrative(
        h,
        "profile-partner",
        "Describe the human partner as they appeared this week, grounded in the claims and their own journal.",
        context,
    )?;
    let mut body = format!("# Partner profile {week}\n\n{dims}## Narrative\n\n{}\n\n## Sources\n\n", completion.text.trim());
    for j in &journals {
        body.push_str(&cite(&j.path));
    }
    body.push_str(&cite(&h.vault.layout().channel(streams::PARTNER_LEARNINGS)?.path));
    let mut doc = MarkdownDoc::new(
        DocKind::PartnerProfile,
        profile_path(h, Subject::Partner, week),
        Author::Agent,
        week,
        h.now(),
        "profile-triad",
        body,
    )
    .with_field("subject", "partner")
    .with_field("claims", claims.len());
    for (d, n) in counts {
        doc.set(&format!("claims_{d}"), n);
    }
    Ok(stamp(h, doc, &completion))
}

fn agent_profile(h: &Harness, week: IsoWeek) -> Result<MarkdownDoc> {
    let dist = weekly_distribution(&h.vault, &h.registry, week)?;
    let total: u64 = dist.values().sum();
    let mut balance = String::from("## Archetype Balance\n\n");
    if total == 0 {
        balance.push_str("No archetype invocations this week.\n");
    } else {
        let mut ranked: Vec<(&String, &u64)> = dist.iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        for (name, n) in &ranked {
            let _ = writeln!(balance, "- {name}: {n} ({:.0}%)", **n as f64 * 100.0 / total as f64);
        }
        let series = [WeekCounts { week, counts: dist.clone() }];
        let report = detect_lock_in(&series, &h.registry.invocable_names(), h.settings.dominance_threshold, 1);
        if let Some((name, share)) = &report.dominant {
            let _ = writeln!(balance, "\nDominant: {name} at {:.0}% of {total} invocations.", share * 100.0);
        }
        let unused: Vec<&str> = report.starved.iter().map(|(n, _)| n.as_str()).collect();
        if !unused.is_empty() {
            let _ = writeln!(balance, "Unused: {}.", unused.join(", "));
        }
    }

    let messages = interactions_in_week(h, week)?;
    let humans = messages.iter().filter(|r| r.author == Author::Human).count();
    let truncated = messages.iter().filter(|r| r.bool_field("truncated") == Some(true)).count();
    let claims = claims_in(h, ReadWindow::weeks(WeekRange::single(week)))?.len();
    let scores = h
        .vault
        .read_stream(streams::CONSTITUTION_SCORES, ReadWindow::weeks(WeekRange::single(week)))?
        .records;
    let scored: std::collections::BTreeSet<&str> = scores.iter().filter_map(|r| r.str_field("interaction_id")).collect();
    let mean = if scores.is_empty() {
        "none".to_string()
    } else {
        let s: i64 = scores.iter().filter_map(|r| r.i64_field("score")).sum();
        format!("{:.2}", s as f64 / scores.len() as f64)
    };
    let loops = format!(
        "## Loops\n\n- Listen: {humans} interactions, {truncated} truncated replies\n- Notice: {} interactions scored, {claims} partner claims\n- Know: weekly generators ran for {week}\n",
        scored.len()
    );

    let mut tally: BTreeMap<String, usize> = BTreeMap::new();
    for (_, v) in verdicts(h)?.into_iter().filter(|(t, _)| week.contains(*t)) {
        *tally.entry(v.assessment.to_string()).or_default() += 1;
    }
    let tally_text = if tally.is_empty() {
        "no validated improve runs".to_string()
    } else {
        tally.iter().map(|(a, n)| format!("{a} {n}")).collect::<Vec<_>>().join(", ")
    };
    let reflexion = format!("## Reflexion\n\n- Mean constitution score: {mean}\n- Improve verdicts: {tally_text}\n");

    let partner = profile_path(h, Subject::Partner, week);
    let previous = profile_path(h, Subject::Agent, week.prev());
    let context = format!("Week {week}.\n\n{balance}\n{loops}\n{reflexion}");
    let completion = narrative(
        h,
        "profile-agent",
        "Describe yourself as you operated this week: stances taken, loops run, what the reflexion record shows.",
        context,
    )?;
    let mut body = format!(
        "# {} profile {week}\n\n{balance}\n{loops}\n{reflexion}\n## Narrative\n\n{}\n\n## Sources\n\n",
        capitalise(&h.settings.agent_name),
        completion.text.trim()
    );
    for p in [&partner, &previous] {
        if h.vault.doc_exists(p) {
            body.push_str(&cite(p));
        }
    }
    for s in [streams::ARCHETYPE_LOG, streams::PARTNER_LEARNINGS, streams::CONSTITUTION_SCORES] {
        body.push_str(&cite(&h.vault.layout().channel(s)?.path));
    }
    let doc = MarkdownDoc::new(
        DocKind::SelfProfile,
        profile_path(h, Subject::Agent, week),
        Author::Agent,
        week,
        h.now(),
        "profile-triad",
        body,
    )
    .with_field("subject", "agent");
    Ok(stamp(h, doc, &completion))
}

fn capitalise(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Write one profile. Refuses an open week unless forced.
pub fn generate_profile(h: &Harness, subject: Subject, week: IsoWeek, force: bool) -> Result<MarkdownDoc> {
    if !force && !week_closed(week, h.now()) {
        return Err(Error::Precondition(format!("{week} is not closed yet")));
    }
    let doc = match subject {
        Subject::Partner => partner_profile(h, week)?,
        Subject::Agent => agent_profile(h, week)?,
    };
    h.vault.write_doc(&doc)?;
    if subject == Subject::Agent {
        record_self_model_update(h, week, "self_profile", &doc.path, json!({}))?;
    }
    Ok(doc)
}

/// Pull the three claim sections out of a delta reply: markdown headings,
/// a JSON object, or failing both the whole text as the alignment section.
fn parse_delta(text: &str) -> [String; 3] {
    let t = unfence(text);
    if let Ok(Value::Object(o)) = serde_json::from_str::<Value>(t) {
        let keys = ["focus_shift", "calibration_arc", "partnership_alignment"];
        return keys.map(|k| o.get(k).and_then(Value::as_str).unwrap_or("").trim().to_string());
    }
    if DELTA_SECTIONS.iter().any(|s| section(t, s).is_some()) {
        return DELTA_SECTIONS.map(|s| section(t, s).unwrap_or("").trim().to_string());
    }
    [String::new(), String::new(), t.trim().to_string()]
}

fn render_delta(week: IsoWeek, parts: &[String; 3], sources: &[PathBuf]) -> String {
    let mut body = format!("# Partnership delta {week}\n\n");
    for (name, text) in DELTA_SECTIONS.iter().zip(parts) {
        let text = if text.is_empty() { "(none)" } else { text.as_str() };
        let _ = write!(body, "## {name}\n\n{text}\n\n");
    }
    body.push_str("## Sources\n\n");
    for s in sources {
        body.push_str(&cite(s));
    }
    body
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaOutcome {
    pub path: PathBuf,
    pub attempts: u32,
    pub reducibility: Reducibility,
}

/// Write the week's delta. If the first draft only restates the profiles it
/// is regenerated once; a second reducible draft is written anyway and
/// flagged `reducible: true`.
pub fn generate_delta(h: &Harness, week: IsoWeek) -> Result<DeltaOutcome> {
    let agent_p = profile_path(h, Subject::Agent, week);
    let partner_p = profile_path(h, Subject::Partner, week);
    for p in [&agent_p, &partner_p] {
        if !h.vault.doc_exists(p) {
            return Err(Error::Precondition(format!("delta for {week} needs {}", p.display())));
        }
    }
    let agent = h.vault.read_doc(&agent_p)?;
    let partner = h.vault.read_doc(&partner_p)?;
    let context = format!(
        "Agent profile:\n{}\n\nPartner profile:\n{}",
        agent.body.trim(),
        partner.body.trim()
    );
    let instruction = "Write the partnership delta: what the two profiles together reveal that neither says alone. \
                       Use sections Focus Shift, Calibration Arc, Partnership Alignment.";
    let mut attempts = 0;
    let (completion, parts, red) = loop {
        attempts += 1;
        let prompt = if attempts == 1 {
            context.clone()
        } else {
            format!("{context}\n\nThe previous draft only restated the profiles. Say something about the partnership that neither profile contains.")
        };
        let completion = narrative(h, "delta", instruction, prompt)?;
        let parts = parse_delta(&completion.text);
        let draft = render_delta(week, &parts, &[]);
        let red = delta_reducibility(&draft, Some(&agent.body), Some(&partner.body), h.settings.reducibility_threshold);
        if !red.reducible || attempts >= 2 {
            break (completion, parts, red);
        }
    };
    let body = render_delta(week, &parts, &[agent_p, partner_p]);
    let path = delta_path(h, week);
    let doc = MarkdownDoc::new(DocKind::Delta, &path, Author::Agent, week, h.now(), "profile-triad", body)
        .with_field("coverage", format!("{:.4}", red.coverage))
        .with_field("reducible", red.reducible)
        .with_field("attempts", attempts);
    let doc = stamp(h, doc, &completion);
    h.vault.write_doc(&doc)?;
    Ok(DeltaOutcome {
        path,
        attempts,
        reducibility: red,
    })
}

/// The three triad paths for a week, in generation order.
pub fn triad_paths(h: &Harness, week: IsoWeek) -> [PathBuf; 3] {
    [
        profile_path(h, Subject::Partner, week),
        profile_path(h, Subject::Agent, week),
        delta_path(h, week),
    ]
}
