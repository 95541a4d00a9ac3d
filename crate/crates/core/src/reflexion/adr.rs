use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::constitution::{load_constitution, Principle};
use crate::clock::format_ts;
use crate::vault::{Author, DocKind, MarkdownDoc};
use crate::week::IsoWeek;
use crate::{Error, Harness, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdrStatus {
    Proposed,
    Adopted,
    Rejected,
}

impl AdrStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            AdrStatus::Proposed => "proposed",
            AdrStatus::Adopted => "adopted",
            AdrStatus::Rejected => "rejected",
        }
    }
}

impl fmt::Display for AdrStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdrStatus {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "proposed" => Ok(AdrStatus::Proposed),
            "adopted" => Ok(AdrStatus::Adopted),
            "rejected" => Ok(AdrStatus::Rejected),
            other => Err(format!("unknown ADR status `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdrProposal {
    pub title: String,
    pub context: String,
    /// Title and text of the principle the ADR would add.
    pub amendment_title: String,
    pub amendment_text: String,
    /// Vault path of the artifact that motivated it (e.g. a scout digest).
    pub source: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Adr {
    pub id: String,
    pub path: PathBuf,
    pub status: AdrStatus,
    pub title: String,
}

impl Adr {
    fn from_doc(doc: &MarkdownDoc) -> Option<Self> {
        Some(Adr {
            id: doc.get("adr_id")?.to_string(),
            path: doc.path.clone(),
            status: doc.get("status")?.parse().ok()?,
            title: doc.get("title").unwrap_or_default().to_string(),
        })
    }
}

fn slug(title: &str) -> String {
    let lowered = title.to_lowercase();
    let words: Vec<&str> = lowered
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .take(6)
        .collect();
    words.join("-")
}

pub fn list_adrs(h: &Harness) -> Result<Vec<Adr>> {
    let mut out: Vec<Adr> = h
        .vault
        .query_docs(DocKind::Adr, None)?
        .iter()
        .filter_map(Adr::from_doc)
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

fn section(body: &str, name: &str) -> String {
    let head = format!("## {name}\n");
    let Some(start) = body.find(&head) else { return String::new() };
    let rest = &body[start + head.len()..];
    let end = rest.find("\n## ").unwrap_or(rest.len());
    rest[..end].trim().to_string()
}

pub fn propose_adr(h: &Harness, proposal: &AdrProposal) -> Result<Adr> {
    let n = list_adrs(h)?.len() + 1;
    let id = format!("ADR-{n:04}");
    let root = h.vault.layout().doc_root(DocKind::Adr).to_path_buf();
    let path = root.join(format!("{id}-{}.md", slug(&proposal.title)));
    let now = h.now();
    let source = proposal
        .source
        .as_ref()
        .map(|p| format!("\n\nRaised by [[{}]].", p.display()))
        .unwrap_or_default();
    let body = format!(
        "# {id}: {}\n\n## Context\n\n{}{source}\n\n## Decision\n\nAdd principle \"{}\" to the constitution.\n\n## Amendment\n\n{}\n",
        proposal.title,
        proposal.context.trim(),
        proposal.amendment_title,
        proposal.amendment_text.trim()
    );
    let mut doc = MarkdownDoc::new(DocKind::Adr, &path, Author::Agent, IsoWeek::of(now), now, "architecture-scout", body)
        .with_field("adr_id", &id)
        .with_field("status", AdrStatus::Proposed)
        .with_field("title", &proposal.title)
        .with_field("amendment_title", &proposal.amendment_title);
    if let Some(src) = &proposal.source {
        doc.set("source", src.display());
    }
    h.vault.write_doc(&doc)?;
    Ok(Adr {
        id,
        path,
        status: AdrStatus::Proposed,
        title: proposal.title.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdrDecision {
    pub adr: Adr,
    pub constitution_version: String,
    pub principles: usize,
}

/// Record the human partner's decision. Adoption appends the amendment as a
/// new principle and bumps the constitution version; a second decision on
/// the same ADR is a conflict.
pub fn decide_adr(h: &Harness, id: &str, adopt: bool) -> Result<AdrDecision> {
    let adr = list_adrs(h)?
        .into_iter()
        .find(|a| a.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::NotFound(format!("ADR `{id}`")))?;
    if adr.status != AdrStatus::Proposed {
        return Err(Error::Conflict(format!("{} is already {}", adr.id, adr.status)));
    }
    let mut doc = h.vault.read_doc(&adr.path)?;
    let mut constitution = load_constitution(&h.vault)?;
    let status = if adopt { AdrStatus::Adopted } else { AdrStatus::Rejected };
    if adopt {
        constitution.principles.push(Principle {
            id: constitution.principles.len() as u32 + 1,
            title: doc.get("amendment_title").unwrap_or(&adr.title).to_string(),
            text: section(&doc.body, "Amendment"),
        });
        constitution.version = constitution.bumped_version();
        let cdoc = constitution
            .to_doc(&h.vault, "adr-adoption")
            .with_field("amended_by", &adr.id);
        h.vault.write_doc(&cdoc)?;
    }
    doc.set("status", status);
    doc.set("decided_by", Author::Human);
    doc.set("decided_ts", format_ts(h.now()));
    h.vault.write_doc(&doc)?;
    Ok(AdrDecision {
        adr: Adr { status, ..adr },
        constitution_version: constitution.version,
        principles: constitution.principles.len(),
    })
}
