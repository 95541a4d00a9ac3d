//! Architecture scout: rate outside work against this system's modules and
//! turn the strongest governance findings into ADR proposals.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::stamp;
use crate::gateway::{CompletionRequest, Depth, Message};
use crate::reflexion::{propose_adr, unfence, Adr, AdrProposal};
use crate::vault::{Author, DocKind, MarkdownDoc};
use crate::week::IsoWeek;
use crate::{Error, Harness, Result};

/// One entry of the scout corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceItem {
    pub title: String,
    pub source_ref: String,
    #[serde(default)]
    pub summary: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proposal {
    Code,
    Adr,
    None,
}

impl Proposal {
    fn as_str(&self) -> &'static str {
        match self {
            Proposal::Code => "code",
            Proposal::Adr => "adr",
            Proposal::None => "none",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoutFinding {
    pub title: String,
    pub source_ref: String,
    pub applicable: u8,
    pub novel: u8,
    pub credible: u8,
    pub module: String,
    pub situating_note: String,
    pub proposal: Proposal,
    /// Path of the ADR raised for this finding.
    pub adr: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoutDigest {
    pub executive_summary: String,
    pub findings: Vec<ScoutFinding>,
    pub papers_to_read: Vec<String>,
    pub trend_watch: String,
    pub recommended_next_build: String,
}

/// Modules a finding can be situated against, with the words that point there.
pub const MODULES: [(&str, &[&str]); 7] = [
    ("runtime", &["lifecycle", "hook", "hooks", "scheduler", "daemon", "harness", "cron", "api", "server"]),
    ("reflexion-stack", &["reflexion", "self-improvement", "constitution", "critique", "validator", "prompt"]),
    ("archetype-engine", &["archetype", "persona", "role", "stance", "routing"]),
    ("know-loop", &["profile", "portrait", "digest", "narrative", "memory consolidation"]),
    ("analytics-conformance", &["entropy", "metric", "audit", "kappa", "benchmark", "evaluation"]),
    ("model-gateway", &["model", "provider", "inference", "token", "context window"]),
    ("vault-substrate", &["vault", "log", "storage", "markdown", "file", "memory"]),
];

/// First module whose keywords appear in the text; `runtime` otherwise.
pub fn situate(text: &str) -> &'static str {
    let lower = text.to_lowercase();
    let words: Vec<&str> = lower.split(|c: char| !c.is_alphanumeric() && c != '-').collect();
    for (module, keys) in MODULES {
        if keys.iter().any(|k| if k.contains(' ') { lower.contains(k) } else { words.contains(k) }) {
            return module;
        }
    }
    "runtime"
}

fn module_named(text: &str) -> Option<&'static str> {
    let lower = text.to_lowercase();
    MODULES.iter().map(|(m, _)| *m).find(|m| lower.contains(m))
}

/// Read a corpus file: a JSON array of items. Bad entries are skipped and
/// reported; a missing file is an empty corpus with a diagnostic.
pub fn load_corpus(path: &Path) -> (Vec<SourceItem>, Vec<String>) {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return (Vec::new(), vec![format!("{}: {e}", path.display())]),
    };
    let values: Vec<Value> = match serde_json::from_str(&text) {
        Ok(Value::Array(a)) => a,
        Ok(_) => return (Vec::new(), vec![format!("{}: expected a JSON array", path.display())]),
        Err(e) => return (Vec::new(), vec![format!("{}: {e}", path.display())]),
    };
    parse_corpus(values)
}

pub fn parse_corpus(values: Vec<Value>) -> (Vec<SourceItem>, Vec<String>) {
    let mut items = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, v) in values.into_iter().enumerate() {
        match serde_json::from_value::<SourceItem>(v) {
            Ok(item) if !item.title.trim().is_empty() && !item.source_ref.trim().is_empty() => items.push(item),
            Ok(_) => diagnostics.push(format!("item {i}: empty title or source_ref")),
            Err(e) => diagnostics.push(format!("item {i}: {e}")),
        }
    }
    (items, diagnostics)
}

#[derive(Deserialize)]
struct RawFinding {
    title: String,
    #[serde(default)]
    source_ref: String,
    applicable: i64,
    novel: i64,
    credible: i64,
    #[serde(default)]
    situating_note: String,
    #[serde(default)]
    module: Option<String>,
    #[serde(default)]
    proposal: Option<String>,
    #[serde(default)]
    amendment_title: Option<String>,
    #[serde(default)]
    amendment_text: Option<String>,
}

#[derive(Deserialize, Default)]
struct RawDigest {
    #[serde(default)]
    executive_summary: String,
    #[serde(default)]
    findings: Vec<Value>,
    #[serde(default)]
    papers_to_read: Vec<String>,
    #[serde(default)]
    trend_watch: String,
    #[serde(default)]
    recommended_next_build: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoutRun {
    pub path: PathBuf,
    pub digest: ScoutDigest,
    pub adrs: Vec<Adr>,
    pub diagnostics: Vec<String>,
}

pub fn digest_path(h: &Harness) -> PathBuf {
    let root = h.vault.layout().doc_root(DocKind::ScoutDigest);
    let day = h.now().format("%Y-%m-%d").to_string();
    let mut path = root.join(format!("{day}.md"));
    let mut n = 2;
    while h.vault.doc_exists(&path) {
        path = root.join(format!("{day}-{n}.md"));
        n += 1;
    }
    path
}

/// The digest already written for `week`, if any.
pub fn digest_for_week(h: &Harness, week: IsoWeek) -> Result<Option<MarkdownDoc>> {
    Ok(h.vault
        .query_docs(DocKind::ScoutDigest, None)?
        .into_iter()
        .find(|d| d.iso_week() == Some(week)))
}

pub fn run_scout(h: &Harness, week: IsoWeek, corpus: &[SourceItem]) -> Result<ScoutRun> {
    let path = digest_path(h);
    let mut diagnostics = Vec::new();
    let mut digest = ScoutDigest::default();
    let mut adrs = Vec::new();
    let mut model = None;

    if corpus.is_empty() {
        digest.executive_summary = "No sources this week; nothing to rate.".into();
    } else {
        let mut listing = String::new();
        for (i, s) in corpus.iter().enumerate() {
            let _ = writeln!(listing, "{}. {} <{}> [{}]\n   {}", i + 1, s.title, s.source_ref, s.tags.join(", "), s.summary.trim());
        }
        let modules: Vec<&str> = MODULES.iter().map(|(m, _)| *m).collect();
        let req = CompletionRequest::new(
            Depth::Know,
            "scout",
            vec![
                Message::system(format!(
                    "Rate each source Applicable, Novel and Credible from 1 to 5 and situate it against one of: {}. \
                     Reply with JSON {{executive_summary, findings: [{{title, source_ref, applicable, novel, credible, module, situating_note, proposal: code|adr|none}}], papers_to_read, trend_watch, recommended_next_build}}.",
                    modules.join(", ")
                )),
                Message::human(format!("Week {week} sources:\n{listing}")),
            ],
            h.settings.budgets.know,
        );
        let completion = h.complete(&req)?;
        let raw: RawDigest = serde_json::from_str(unfence(&completion.text))
            .map_err(|e| Error::parse("scout digest", e.to_string()))?;
        model = Some(completion);
        digest.executive_summary = raw.executive_summary.trim().to_string();
        digest.papers_to_read = raw.papers_to_read;
        digest.trend_watch = raw.trend_watch.trim().to_string();
        digest.recommended_next_build = raw.recommended_next_build.trim().to_string();
        for (i, v) in raw.findings.into_iter().enumerate() {
            let f: RawFinding = match serde_json::from_value(v) {
                Ok(f) => f,
                Err(e) => {
                    diagnostics.push(format!("finding {i}: {e}"));
                    continue;
                }
            };
            if [f.applicable, f.novel, f.credible].iter().any(|r| !(1..=5).contains(r)) {
                diagnostics.push(format!("finding {i} `{}`: rating outside 1..=5", f.title));
                continue;
            }
            let source = corpus.iter().find(|s| s.title == f.title || s.source_ref == f.source_ref);
            let module = f
                .module
                .as_deref()
                .and_then(module_named)
                .or_else(|| module_named(&f.situating_note))
                .unwrap_or_else(|| {
                    let hay = source.map(|s| format!("{} {} {}", s.title, s.tags.join(" "), s.summary));
                    situate(&hay.unwrap_or_else(|| f.title.clone()))
                });
            let note = if f.situating_note.trim().is_empty() {
                format!("Maps onto {module}.")
            } else {
                f.situating_note.trim().to_string()
            };
            let proposal = match f.proposal.as_deref().map(str::trim) {
                Some("adr") => Proposal::Adr,
                Some("code") => Proposal::Code,
                _ => Proposal::None,
            };
            let mut finding = ScoutFinding {
                title: f.title.trim().to_string(),
                source_ref: if f.source_ref.is_empty() { source.map(|s| s.source_ref.clone()).unwrap_or_default() } else { f.source_ref },
                applicable: f.applicable as u8,
                novel: f.novel as u8,
                credible: f.credible as u8,
                module: module.to_string(),
                situating_note: note,
                proposal,
                adr: None,
            };
            if proposal == Proposal::Adr {
                let adr = propose_adr(
                    h,
                    &AdrProposal {
                        title: format!("Amend the constitution after: {}", finding.title),
                        context: format!("{} ({})\n\n{}", finding.title, finding.source_ref, finding.situating_note),
                        amendment_title: f.amendment_title.unwrap_or_else(|| finding.title.clone()),
                        amendment_text: f.amendment_text.unwrap_or_else(|| finding.situating_note.clone()),
                        source: Some(path.clone()),
                    },
                )?;
                finding.adr = Some(adr.path.display().to_string());
                adrs.push(adr);
            }
            digest.findings.push(finding);
        }
        if digest.findings.is_empty() && digest.executive_summary.is_empty() {
            digest.executive_summary = "No source rated this week.".into();
        }
    }

    let doc = MarkdownDoc::new(DocKind::ScoutDigest, &path, Author::Agent, week, h.now(), "architecture-scout", render_digest(week, &digest))
        .with_field("findings", digest.findings.len())
        .with_field("sources", corpus.len());
    let doc = match &model {
        Some(c) => stamp(h, doc, c),
        None => doc,
    };
    h.vault.write_doc(&doc)?;
    Ok(ScoutRun {
        path,
        digest,
        adrs,
        diagnostics,
    })
}

const SECTIONS: [&str; 5] = ["Executive Summary", "Top Findings", "Papers to Read", "Trend Watch", "Recommended Next Build"];

pub fn render_digest(week: IsoWeek, d: &ScoutDigest) -> String {
    let mut out = format!("# Architecture scout {week}\n\n## {}\n\n{}\n\n## {}\n\n", SECTIONS[0], d.executive_summary, SECTIONS[1]);
    for (i, f) in d.findings.iter().enumerate() {
        let _ = write!(
            out,
            "### {}. {}\n\n- source: {}\n- applicable: {}\n- novel: {}\n- credible: {}\n- module: {}\n- proposal: {}\n",
            i + 1,
            f.title,
            f.source_ref,
            f.applicable,
            f.novel,
            f.credible,
            f.module,
            f.proposal.as_str()
        );
        if let Some(a) = &f.adr {
            let _ = writeln!(out, "- adr: [[{a}]]");
        }
        let _ = write!(out, "\n{}\n\n", f.situating_note);
    }
    let _ = write!(out, "## {}\n\n", SECTIONS[2]);
    for p in &d.papers_to_read {
        let _ = writeln!(out, "- {p}");
    }
    if !d.papers_to_read.is_empty() {
        out.push('\n');
    }
    let _ = write!(out, "## {}\n\n{}\n\n## {}\n\n{}\n", SECTIONS[3], d.trend_watch, SECTIONS[4], d.recommended_next_build);
    out
}

fn between<'a>(body: &'a str, name: &str) -> Option<&'a str> {
    let head = format!("\n## {name}\n");
    let start = body.find(&head)? + head.len();
    let rest = &body[start..];
    let end = rest.find("\n## ").map(|i| i + 1).unwrap_or(rest.len());
    Some(&rest[..end])
}

/// Parse a rendered digest back. Fails if any of the five sections is missing.
pub fn parse_digest(body: &str) -> Result<ScoutDigest> {
    let body = format!("\n{body}");
    let mut parts = Vec::new();
    for s in SECTIONS {
        parts.push(between(&body, s).ok_or_else(|| Error::parse("scout digest", format!("missing section {s}")))?);
    }
    let mut findings = Vec::new();
    for block in parts[1].split("\n### ").map(|b| b.trim_start_matches("### ")).filter(|b| !b.trim().is_empty()) {
        let mut lines = block.lines();
        let title = lines.next().and_then(|l| l.split_once(". ")).map(|(_, t)| t.to_string()).unwrap_or_default();
        let mut f = ScoutFinding {
            title,
            source_ref: String::new(),
            applicable: 0,
            novel: 0,
            credible: 0,
            module: String::new(),
            situating_note: String::new(),
            proposal: Proposal::None,
            adr: None,
        };
        let mut note = Vec::new();
        for l in lines {
            match l.strip_prefix("- ").and_then(|kv| kv.split_once(": ")) {
                Some(("source", v)) => f.source_ref = v.to_string(),
                Some(("applicable", v)) => f.applicable = v.parse().unwrap_or(0),
                Some(("novel", v)) => f.novel = v.parse().unwrap_or(0),
                Some(("credible", v)) => f.credible = v.parse().unwrap_or(0),
                Some(("module", v)) => f.module = v.to_string(),
                Some(("proposal", v)) => {
                    f.proposal = match v {
                        "adr" => Proposal::Adr,
                        "code" => Proposal::Code,
                        _ => Proposal::None,
                    }
                }
                Some(("adr", v)) => f.adr = Some(v.trim_start_matches("[[").trim_end_matches("]]").to_string()),
                _ => note.push(l),
            }
        }
        f.situating_note = note.join("\n").trim().to_string();
        findings.push(f);
    }
    Ok(ScoutDigest {
        executive_summary: parts[0].trim().to_string(),
        findings,
        papers_to_read: parts[2].lines().filter_map(|l| l.strip_prefix("- ")).map(str::to_string).collect(),
        trend_watch: parts[3].trim().to_string(),
        recommended_next_build: parts[4].trim().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn keyword_situating() {
        assert_eq!(situate("Agent lifecycle hooks for tool use"), "runtime");
        assert_eq!(situate("Measuring persona drift"), "archetype-engine");
        assert_eq!(situate("Constitutional critique loops"), "reflexion-stack");
        assert_eq!(situate("nothing relevant"), "runtime");
    }

    #[test]
    fn corpus_skips_bad_items() {
        let v = serde_json::json!([
            {"title": "A", "source_ref": "https://example.org/a"},
            {"title": "", "source_ref": "x"},
            {"source_ref": "no title"},
        ]);
        let (items, diags) = parse_corpus(v.as_array().unwrap().clone());
        assert_eq!(items.len(), 1);
        assert_eq!(diags.len(), 2);
    }

    #[test]
    fn empty_digest_keeps_all_sections() {
        let text = render_digest("2026-W17".parse().unwrap(), &ScoutDigest::default());
        assert_eq!(parse_digest(&text).unwrap(), ScoutDigest::default());
    }

    fn line() -> impl Strategy<Value = String> {
        "[A-Za-z][A-Za-z ,]{0,30}[a-z]".prop_map(|s| s.to_string())
    }

    fn finding() -> impl Strategy<Value = ScoutFinding> {
        (line(), 1u8..=5, 1u8..=5, 1u8..=5, 0usize..7, line(), 0u8..3, any::<bool>()).prop_map(
            |(title, a, n, c, m, note, p, adr)| ScoutFinding {
                source_ref: format!("https://example.org/{}", title.len()),
                title,
                applicable: a,
                novel: n,
                credible: c,
                module: MODULES[m].0.to_string(),
                situating_note: note,
                proposal: [Proposal::Code, Proposal::Adr, Proposal::None][p as usize],
                adr: adr.then(|| "Alicia/adr/ADR-0001-x.md".to_string()),
            },
        )
    }

    proptest! {
        #[test]
        fn digest_round_trips(
            summary in line(),
            findings in proptest::collection::vec(finding(), 0..4),
            papers in proptest::collection::vec(line(), 0..3),
            trend in line(),
            next in line(),
        ) {
            let d = ScoutDigest { executive_summary: summary, findings, papers_to_read: papers, trend_watch: trend, recommended_next_build: next };
            let text = render_digest("2026-W18".parse().unwrap(), &d);
            prop_assert_eq!(parse_digest(&text).unwrap(), d);
        }
    }
}
