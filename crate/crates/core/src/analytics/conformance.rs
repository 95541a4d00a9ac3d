//! Six-condition partnership conformance check over a vault.
//!
//! Every passing condition names the vault paths that made it pass; a
//! failing one says what was missing. Nothing here writes to the vault.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::reducibility::delta_reducibility;
use crate::vault::{streams, Author, DocKind, MarkdownDoc, Vault};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformanceParams {
    pub continuity_days: i64,
    pub reducibility_threshold: f64,
}

impl Default for ConformanceParams {
    fn default() -> Self {
        ConformanceParams {
            continuity_days: 28,
            reducibility_threshold: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub id: String,
    pub name: String,
    pub pass: bool,
    pub evidence: Vec<String>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub conditions: Vec<ConditionResult>,
    pub overall: bool,
}

impl ConformanceReport {
    pub fn passed(&self) -> usize {
        self.conditions.iter().filter(|c| c.pass).count()
    }

    pub fn failing(&self) -> Vec<&str> {
        self.conditions.iter().filter(|c| !c.pass).map(|c| c.id.as_str()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.id == id)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("# Conformance\n\n{}/6 conditions pass.\n\n", self.passed());
        for c in &self.conditions {
            let mark = if c.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "## {} {} ({mark})\n\n{}\n", c.id, c.name, c.note);
            for e in c.evidence.iter().take(12) {
                let _ = writeln!(out, "- {e}");
            }
            if c.evidence.len() > 12 {
                let _ = writeln!(out, "- ... {} more", c.evidence.len() - 12);
            }
            out.push('\n');
        }
        out
    }
}

/// Vault-relative references in a document body: `[[wiki links]]` and bare
/// tokens that look like paths with a known extension. Anchors and aliases
/// are dropped.
pub fn references(body: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut rest = body;
    while let Some(i) = rest.find("[[") {
        rest = &rest[i + 2..];
        let Some(j) = rest.find("]]") else { break };
        let target = rest[..j].split(['|', '#']).next().unwrap_or("").trim();
        if !target.is_empty() {
            out.insert(target.to_string());
        }
        rest = &rest[j + 2..];
    }
    for tok in body.split(|c: char| c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | '`' | '<' | '>' | '"')) {
        let tok = tok.trim_end_matches([',', ';', ':', '.', '!', '?']);
        let tok = tok.split('#').next().unwrap_or("");
        if tok.contains('/') && [".md", ".jsonl", ".tsv", ".json"].iter().any(|e| tok.ends_with(e)) && !tok.contains("://") {
            out.insert(tok.to_string());
        }
    }
    out
}

struct Index<'a> {
    vault: &'a Vault,
    docs: Vec<MarkdownDoc>,
    by_path: BTreeMap<String, usize>,
}

impl<'a> Index<'a> {
    fn new(vault: &'a Vault) -> Result<Self> {
        let docs = vault.all_docs()?;
        let by_path = docs.iter().enumerate().map(|(i, d)| (d.path.display().to_string(), i)).collect();
        Ok(Index { vault, docs, by_path })
    }

    fn of_kind<'s>(&'s self, kinds: &'s [DocKind]) -> impl Iterator<Item = &'s MarkdownDoc> + 's {
        self.docs.iter().filter(move |d| kinds.contains(&d.kind))
    }

    /// Existing targets cited by `doc`.
    fn cites(&self, doc: &MarkdownDoc) -> Vec<String> {
        references(&doc.body)
            .into_iter()
            .filter(|r| self.vault.doc_exists(r))
            .collect()
    }

    fn cited_docs(&self, doc: &MarkdownDoc) -> Vec<&MarkdownDoc> {
        self.cites(doc).iter().filter_map(|r| self.by_path.get(r)).map(|&i| &self.docs[i]).collect()
    }
}

fn result(id: &str, name: &str, pass: bool, evidence: Vec<String>, note: String) -> ConditionResult {
    ConditionResult {
        id: id.into(),
        name: name.into(),
        pass,
        evidence,
        note,
    }
}

fn path(d: &MarkdownDoc) -> String {
    d.path.display().to_string()
}

fn c1(ix: &Index) -> ConditionResult {
    let agent: Vec<String> = ix
        .of_kind(&[DocKind::SelfPortrait, DocKind::SelfProfile])
        .filter(|d| d.author() == Some(Author::Agent) && d.created().is_some())
        .map(path)
        .collect();
    let human: Vec<String> = ix
        .of_kind(&[DocKind::GrowthJournal])
        .filter(|d| d.author() == Some(Author::Human) && d.created().is_some())
        .map(path)
        .collect();
    let pass = agent.len() >= 2 && human.len() >= 2;
    let note = format!("{} dated agent self-model documents, {} human journal entries (need 2 each)", agent.len(), human.len());
    result("C1", "bidirectional self-models", pass, if pass { [agent, human].concat() } else { Vec::new() }, note)
}

fn c2(vault: &Vault) -> Result<ConditionResult> {
    let mut first: BTreeMap<Author, String> = BTreeMap::new();
    for (name, channel) in vault.layout().channels() {
        for r in vault.records(name)? {
            first.entry(r.author).or_insert_with(|| format!("{}#{}", channel.path.display(), r.seq));
        }
    }
    let (h, a) = (first.get(&Author::Human), first.get(&Author::Agent));
    let pass = h.is_some() && a.is_some();
    let evidence = if pass { vec![h.unwrap().clone(), a.unwrap().clone()] } else { Vec::new() };
    let note = format!(
        "stream writers: human {}, agent {}",
        if h.is_some() { "present" } else { "absent" },
        if a.is_some() { "present" } else { "absent" }
    );
    Ok(result("C2", "shared substrate", pass, evidence, note))
}

fn c3(ix: &Index, vault: &Vault) -> Result<ConditionResult> {
    let learnings = vault.layout().channel(streams::PARTNER_LEARNINGS)?.path.display().to_string();
    let mut partner_side = Vec::new();
    for d in ix.of_kind(&[DocKind::PartnerProfile]) {
        if ix.cited_docs(d).iter().any(|c| c.kind == DocKind::GrowthJournal && c.author() == Some(Author::Human)) {
            partner_side.push(path(d));
        }
    }
    let mut self_side = Vec::new();
    for d in ix.of_kind(&[DocKind::SelfPortrait, DocKind::SelfProfile]) {
        let partner_doc = ix
            .cited_docs(d)
            .iter()
            .any(|c| matches!(c.kind, DocKind::PartnerProfile | DocKind::GrowthJournal));
        let cites_learnings = ix.cites(d).contains(&learnings);
        if partner_doc || cites_learnings {
            self_side.push(path(d));
        }
    }
    let pass = !partner_side.is_empty() && !self_side.is_empty();
    let note = format!(
        "{} partner models cite human journals; {} agent self-models cite partner material",
        partner_side.len(),
        self_side.len()
    );
    Ok(result("C3", "mutual modeling", pass, if pass { [partner_side, self_side].concat() } else { Vec::new() }, note))
}

fn c4(ix: &Index, params: &ConformanceParams) -> ConditionResult {
    let dated: Vec<(DateTime<Utc>, &MarkdownDoc)> = ix.docs.iter().filter_map(|d| Some((d.created()?, d))).collect();
    let first = dated.iter().min_by_key(|(t, d)| (*t, &d.path));
    let last = dated.iter().max_by_key(|(t, d)| (*t, std::cmp::Reverse(&d.path)));
    let span = match (first, last) {
        (Some(f), Some(l)) => l.0 - f.0,
        _ => Duration::zero(),
    };
    let mut links = Vec::new();
    for (t, d) in &dated {
        for c in ix.cited_docs(d) {
            if c.created().is_some_and(|ct| ct < *t) {
                links.push(format!("{} -> {}", path(d), path(c)));
            }
        }
    }
    let span_ok = span >= Duration::days(params.continuity_days);
    let pass = span_ok && !links.is_empty();
    let mut evidence = Vec::new();
    if pass {
        evidence.push(path(first.unwrap().1));
        evidence.push(path(last.unwrap().1));
        evidence.extend(links.iter().cloned());
    }
    let note = format!(
        "artifact span {} days (need {}); {} later-to-earlier citations",
        span.num_days(),
        params.continuity_days,
        links.len()
    );
    result("C4", "temporal continuity", pass, evidence, note)
}

fn c5(ix: &Index, params: &ConformanceParams) -> ConditionResult {
    let deltas: Vec<&MarkdownDoc> = ix.of_kind(&[DocKind::Delta]).collect();
    let profile = |kind: DocKind, week| {
        ix.docs
            .iter()
            .find(|d| d.kind == kind && d.iso_week() == week)
            .map(|d| d.body.as_str())
    };
    let mut irreducible = Vec::new();
    for d in &deltas {
        let w = d.iso_week();
        let r = delta_reducibility(
            &d.body,
            profile(DocKind::SelfProfile, w),
            profile(DocKind::PartnerProfile, w),
            params.reducibility_threshold,
        );
        if !r.reducible {
            irreducible.push(path(d));
        }
    }
    let pass = !irreducible.is_empty();
    let note = format!(
        "{} delta documents, {} not reducible to their week's profiles",
        deltas.len(),
        irreducible.len()
    );
    result("C5", "partnership-level representation", pass, irreducible, note)
}

fn c6(vault: &Vault) -> Result<ConditionResult> {
    let records = vault.records(streams::INTERACTIONS)?;
    let rel = vault.layout().channel(streams::INTERACTIONS)?.path.display().to_string();
    let instructed: BTreeSet<&str> = records
        .iter()
        .filter(|r| r.author == Author::Human)
        .filter_map(|r| r.str_field("interaction_id"))
        .collect();
    let updates: Vec<_> = records
        .iter()
        .filter(|r| r.str_field("event") == Some("self_model_update") && r.author == Author::Agent)
        .collect();
    let autonomous: Vec<String> = updates
        .iter()
        .filter(|r| r.str_field("interaction_id").is_some_and(|id| !instructed.contains(id)))
        .map(|r| format!("{rel}#{}", r.seq))
        .collect();
    let pass = !autonomous.is_empty();
    let note = format!(
        "{} agent self-model updates, {} without a same-interaction human instruction",
        updates.len(),
        autonomous.len()
    );
    Ok(result("C6", "reflexive modification", pass, autonomous, note))
}

pub fn conformance_check(vault: &Vault, params: &ConformanceParams) -> Result<ConformanceReport> {
    let ix = Index::new(vault)?;
    let conditions = vec![c1(&ix), c2(vault)?, c3(&ix, vault)?, c4(&ix, params), c5(&ix, params), c6(vault)?];
    let overall = conditions.iter().all(|c| c.pass);
    Ok(ConformanceReport { conditions, overall })
}
