//! Markdown documents with flat `key: value` frontmatter fenced by `---`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::record::Author;
use crate::clock::{format_ts, parse_ts};
use crate::week::IsoWeek;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    SelfPortrait,
    SelfProfile,
    PartnerProfile,
    Delta,
    ScoutDigest,
    MetaReflexion,
    Constitution,
    GrowthJournal,
    Adr,
}

impl DocKind {
    pub const ALL: [DocKind; 9] = [
        DocKind::SelfPortrait,
        DocKind::SelfProfile,
        DocKind::PartnerProfile,
        DocKind::Delta,
        DocKind::ScoutDigest,
        DocKind::MetaReflexion,
        DocKind::Constitution,
        DocKind::GrowthJournal,
        DocKind::Adr,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DocKind::SelfPortrait => "self_portrait",
            DocKind::SelfProfile => "self_profile",
            DocKind::PartnerProfile => "partner_profile",
            DocKind::Delta => "delta",
            DocKind::ScoutDigest => "scout_digest",
            DocKind::MetaReflexion => "meta_reflexion",
            DocKind::Constitution => "constitution",
            DocKind::GrowthJournal => "growth_journal",
            DocKind::Adr => "adr",
        }
    }
}

impl fmt::Display for DocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DocKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| format!("unknown document kind `{s}`"))
    }
}

pub const REQUIRED_KEYS: [&str; 5] = ["kind", "author", "iso_week", "created_ts", "generator"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkdownDoc {
    /// Vault-relative path.
    pub path: PathBuf,
    pub kind: DocKind,
    pub frontmatter: BTreeMap<String, String>,
    pub body: String,
}

impl MarkdownDoc {
    pub fn new(
        kind: DocKind,
        path: impl Into<PathBuf>,
        author: Author,
        iso_week: IsoWeek,
        created: DateTime<Utc>,
        generator: &str,
        body: impl Into<String>,
    ) -> Self {
        let mut fm = BTreeMap::new();
        fm.insert("kind".into(), kind.to_string());
        fm.insert("author".into(), author.to_string());
        fm.insert("iso_week".into(), iso_week.to_string());
        fm.insert("created_ts".into(), format_ts(created));
        fm.insert("generator".into(), generator.to_string());
        MarkdownDoc {
            path: path.into(),
            kind,
            frontmatter: fm,
            body: body.into(),
        }
    }

    pub fn with_field(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.frontmatter
            .insert(key.to_string(), single_line(&value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.frontmatter.get(key).map(String::as_str)
    }

    pub fn author(&self) -> Option<Author> {
        self.get("author").and_then(|a| a.parse().ok())
    }

    pub fn iso_week(&self) -> Option<IsoWeek> {
        self.get("iso_week").and_then(|w| w.parse().ok())
    }

    pub fn created(&self) -> Option<DateTime<Utc>> {
        self.get("created_ts").and_then(parse_ts)
    }

    /// Serialized file contents. Required keys first, the rest alphabetical.
    pub fn render(&self) -> String {
        let mut out = String::from("---\n");
        for key in REQUIRED_KEYS {
            if let Some(v) = self.frontmatter.get(key) {
                out.push_str(&format!("{key}: {v}\n"));
            }
        }
        for (k, v) in &self.frontmatter {
            if !REQUIRED_KEYS.contains(&k.as_str()) {
                out.push_str(&format!("{k}: {v}\n"));
            }
        }
        out.push_str("---\n");
        out.push_str(&self.body);
        if !self.body.ends_with('\n') {
            out.push('\n');
        }
        out
    }

    pub fn parse(path: impl Into<PathBuf>, text: &str) -> Result<Self, String> {
        let (frontmatter, body) = split_frontmatter(text)?;
        let kind = frontmatter
            .get("kind")
            .ok_or("frontmatter lacks `kind`")?
            .parse::<DocKind>()?;
        Ok(MarkdownDoc {
            path: path.into(),
            kind,
            frontmatter,
            body,
        })
    }
}

fn single_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

pub fn split_frontmatter(text: &str) -> Result<(BTreeMap<String, String>, String), String> {
    let rest = text
        .strip_prefix("---\n")
        .or_else(|| text.strip_prefix("---\r\n"))
        .ok_or("document must start with a `---` fence")?;
    let mut fm = BTreeMap::new();
    let mut offset = 0;
    for line in rest.split_inclusive('\n') {
        offset += line.len();
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if trimmed == "---" {
            return Ok((fm, rest[offset..].to_string()));
        }
        if trimmed.trim().is_empty() {
            continue;
        }
        let (k, v) = trimmed
            .split_once(':')
            .ok_or_else(|| format!("frontmatter line is not `key: value`: {trimmed}"))?;
        fm.insert(k.trim().to_string(), v.trim().to_string());
    }
    Err("no closing `---` fence".into())
}
