use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::improve::{verdicts, Assessment, ImproveEpisode};
use super::scoring::unfence;
use crate::clock::{format_ts, parse_ts};
use crate::gateway::{CompletionRequest, Depth, Message};
use crate::vault::{Author, DocKind, MarkdownDoc};
use crate::week::IsoWeek;
use crate::{Error, Harness, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaReflexionEntry {
    pub ts: DateTime<Utc>,
    pub window: IsoWeek,
    pub diagnosis: String,
    pub proposed_meta_improvements: Vec<String>,
    /// Run ids the diagnosis rests on.
    pub evidence: Vec<String>,
}

const HEADING: &str = "## Meta-reflexion ";

fn verdict_line(v: &ImproveEpisode) -> String {
    format!(
        "- {} `{}`: {} (delta {:.2}, paired {})",
        v.run_id, v.skill_id, v.assessment, v.delta, v.paired_samples
    )
}

fn render_entry(e: &MetaReflexionEntry, verdicts: &[ImproveEpisode]) -> String {
    let mut counts: BTreeMap<Assessment, usize> = BTreeMap::new();
    for v in verdicts {
        *counts.entry(v.assessment).or_default() += 1;
    }
    let tally: Vec<String> = counts.iter().map(|(a, n)| format!("{a}={n}")).collect();
    let mut out = format!("{HEADING}{} ({})\n\n### Verdicts\n\n", e.window, format_ts(e.ts));
    for v in verdicts {
        out.push_str(&verdict_line(v));
        out.push('\n');
    }
    out.push_str(&format!("\nCounts: {}\n\n### Diagnosis\n\n{}\n\n### Proposed meta-improvements\n\n", tally.join(", "), e.diagnosis.trim()));
    if e.proposed_meta_improvements.is_empty() {
        out.push_str("- none\n");
    }
    for p in &e.proposed_meta_improvements {
        out.push_str(&format!("- {}\n", p.trim()));
    }
    out.push_str("\n### Evidence\n\n");
    for id in &e.evidence {
        out.push_str(&format!("- {id}\n"));
    }
    out
}

fn parse_entry(section: &str) -> Option<MetaReflexionEntry> {
    let head = section.lines().next()?.strip_prefix(HEADING)?;
    let (week, rest) = head.split_once(' ')?;
    let ts = parse_ts(rest.trim().trim_start_matches('(').trim_end_matches(')'))?;
    let mut part = "";
    let (mut diagnosis, mut improvements, mut evidence) = (Vec::new(), Vec::new(), Vec::new());
    for line in section.lines().skip(1) {
        if let Some(h) = line.strip_prefix("### ") {
            part = match h.trim() {
                "Diagnosis" => "d",
                "Proposed meta-improvements" => "p",
                "Evidence" => "e",
                _ => "",
            };
            continue;
        }
        match part {
            "d" => diagnosis.push(line),
            "p" => {
                if let Some(item) = line.strip_prefix("- ").filter(|i| *i != "none") {
                    improvements.push(item.to_string());
                }
            }
            "e" => {
                if let Some(item) = line.strip_prefix("- ") {
                    evidence.push(item.trim().to_string());
                }
            }
            _ => {}
        }
    }
    Some(MetaReflexionEntry {
        ts,
        window: week.parse().ok()?,
        diagnosis: diagnosis.join("\n").trim().to_string(),
        proposed_meta_improvements: improvements,
        evidence,
    })
}

/// Every entry in the meta-reflexion log, oldest first.
pub fn meta_entries(h: &Harness) -> Result<Vec<MetaReflexionEntry>> {
    let path = h.vault.layout().meta_reflexion_path();
    if !h.vault.doc_exists(path) {
        return Ok(Vec::new());
    }
    let doc = h.vault.read_doc(path)?;
    Ok(split_sections(&doc.body).filter_map(parse_entry).collect())
}

fn split_sections(body: &str) -> impl Iterator<Item = &str> {
    let starts: Vec<usize> = body.match_indices(HEADING).map(|(i, _)| i).collect();
    let ends: Vec<usize> = starts.iter().skip(1).copied().chain([body.len()]).collect();
    starts.into_iter().zip(ends).map(move |(s, e)| &body[s..e])
}

pub fn has_meta_entry(h: &Harness, week: IsoWeek) -> Result<bool> {
    Ok(meta_entries(h)?.iter().any(|e| e.window == week))
}

fn parse_diagnosis(text: &str) -> (String, Vec<String>) {
    if let Ok(v) = serde_json::from_str::<Value>(unfence(text)) {
        if let Some(d) = v.get("diagnosis").and_then(Value::as_str) {
            let imps = v
                .get("improvements")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
                .unwrap_or_default();
            return (d.to_string(), imps);
        }
    }
    (text.trim().to_string(), Vec::new())
}

/// Third-order reflexion: ask whether the improver is improving, and record
/// the answer next to the verdicts it was given, verbatim.
pub fn write_meta_reflexion(h: &Harness, week: IsoWeek) -> Result<MetaReflexionEntry> {
    let window: Vec<ImproveEpisode> = verdicts(h)?
        .into_iter()
        .filter(|(ts, _)| week.contains(*ts))
        .map(|(_, v)| v)
        .collect();
    if window.is_empty() {
        return Err(Error::Precondition(format!("no validated improve runs in {week}")));
    }
    let listing: Vec<String> = window.iter().map(verdict_line).collect();
    let req = CompletionRequest::new(
        Depth::Know,
        "meta",
        vec![
            Message::system(
                "Assess whether the improve loop is itself improving. Reply with JSON {\"diagnosis\": ..., \"improvements\": [...]}.",
            ),
            Message::human(format!("Verdicts for {week}:\n{}", listing.join("\n"))),
        ],
        h.settings.budgets.know,
    );
    let completion = h.complete(&req)?;
    let (diagnosis, improvements) = parse_diagnosis(&completion.text);
    if diagnosis.is_empty() {
        return Err(Error::Invalid("meta-reflexion diagnosis came back empty".into()));
    }
    let entry = MetaReflexionEntry {
        ts: h.now(),
        window: week,
        diagnosis,
        proposed_meta_improvements: improvements,
        evidence: window.iter().map(|v| v.run_id.clone()).collect(),
    };

    let path = h.vault.layout().meta_reflexion_path().to_path_buf();
    let (mut body, count) = if h.vault.doc_exists(&path) {
        let doc = h.vault.read_doc(&path)?;
        let n: usize = doc.get("entries").and_then(|n| n.parse().ok()).unwrap_or(0);
        (doc.body, n)
    } else {
        ("# Meta-reflexion log\n".to_string(), 0)
    };
    if !body.ends_with("\n\n") {
        body.push('\n');
    }
    body.push_str(&render_entry(&entry, &window));
    let doc = MarkdownDoc::new(DocKind::MetaReflexion, path, Author::Agent, week, entry.ts, "meta-reflexion", body)
        .with_field("entries", count + 1);
    h.vault.write_doc(&doc)?;
    Ok(entry)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_round_trips_and_names_every_verdict() {
        let v: Vec<ImproveEpisode> = (0..3)
            .map(|i| ImproveEpisode {
                run_id: format!("run-{i:04}"),
                skill_id: "listen-response".into(),
                before_metric: None,
                after_metric: None,
                paired_samples: 0,
                delta: 0.0,
                assessment: Assessment::InsufficientData,
            })
            .collect();
        let e = MetaReflexionEntry {
            ts: parse_ts("2026-05-03T03:04:00Z").unwrap(),
            window: "2026-W18".parse().unwrap(),
            diagnosis: "No run gathered paired samples.".into(),
            proposed_meta_improvements: vec!["Defer validation until episodes accrue.".into()],
            evidence: v.iter().map(|x| x.run_id.clone()).collect(),
        };
        let text = render_entry(&e, &v);
        assert_eq!(text.matches("insufficient_data").count(), 4);
        assert_eq!(parse_entry(&text).unwrap(), e);
    }
}
