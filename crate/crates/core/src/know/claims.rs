//! Claims about the human partner, coded into eight dimensions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::gateway::{CompletionRequest, Depth, Message, Role};
use crate::reflexion::unfence;
use crate::vault::{streams, Author, LogRecord, NewRecord, ReadWindow};
use crate::{Error, Harness, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Identity,
    Voice,
    Knowledge,
    Body,
    Relationships,
    Creative,
    Practice,
    Shadow,
}

impl Dimension {
    pub const ALL: [Dimension; 8] = [
        Dimension::Identity,
        Dimension::Voice,
        Dimension::Knowledge,
        Dimension::Body,
        Dimension::Relationships,
        Dimension::Creative,
        Dimension::Practice,
        Dimension::Shadow,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Dimension::Identity => "identity",
            Dimension::Voice => "voice",
            Dimension::Knowledge => "knowledge",
            Dimension::Body => "body",
            Dimension::Relationships => "relationships",
            Dimension::Creative => "creative",
            Dimension::Practice => "practice",
            Dimension::Shadow => "shadow",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("`{s}` is not one of the eight dimensions"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartnerClaim {
    pub ts: DateTime<Utc>,
    pub text: String,
    pub dimension: Dimension,
    pub source_interaction_id: String,
    pub modality_tag: Option<String>,
    /// The classifier's label was outside the enum; `dimension` is a placeholder.
    pub needs_review: bool,
}

impl PartnerClaim {
    pub fn from_record(r: &LogRecord) -> Option<Self> {
        Some(PartnerClaim {
            ts: r.ts,
            text: r.str_field("text")?.to_string(),
            dimension: r.str_field("dimension")?.parse().ok()?,
            source_interaction_id: r.str_field("source_interaction_id")?.to_string(),
            modality_tag: r.str_field("modality_tag").map(str::to_string),
            needs_review: r.bool_field("needs_review").unwrap_or(false),
        })
    }
}

/// Collapse whitespace and end with a full stop.
pub fn normalise_claim(text: &str) -> String {
    let mut s = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if !s.is_empty() && !s.ends_with(['.', '!', '?']) {
        s.push('.');
    }
    s
}

#[derive(Deserialize)]
struct RawClaim {
    text: String,
    #[serde(default)]
    dimension: String,
}

fn classifier_prompt() -> String {
    let dims: Vec<&str> = Dimension::ALL.iter().map(Dimension::as_str).collect();
    format!(
        "Extract one-sentence claims about the human partner from this exchange. \
         Label each with exactly one of: {}. Reply with a JSON array of {{\"text\", \"dimension\"}}; \
         an empty array if there is nothing to learn.",
        dims.join(", ")
    )
}

/// Ask the classifier for claims about the partner and append them to the
/// partner-learnings stream. A label outside the enum is kept as
/// `identity` with `needs_review`; nothing is dropped.
pub fn extract_claims(
    h: &Harness,
    interaction_id: &str,
    transcript: &[Message],
    modality: Option<&str>,
) -> Result<Vec<PartnerClaim>> {
    if !transcript.iter().any(|m| m.role == Role::Human && !m.text.trim().is_empty()) {
        return Ok(Vec::new());
    }
    let mut messages = vec![Message::system(classifier_prompt())];
    messages.extend(transcript.iter().cloned());
    let req = CompletionRequest::new(Depth::Notice, "claims", messages, h.settings.budgets.notice);
    let completion = h.complete(&req)?;
    let raw: Vec<RawClaim> = serde_json::from_str(unfence(&completion.text))
        .map_err(|e| Error::parse("claim list", format!("{interaction_id}: {e}")))?;
    let now = h.now();
    let claims: Vec<PartnerClaim> = raw
        .into_iter()
        .map(|c| (normalise_claim(&c.text), c.dimension))
        .filter(|(t, _)| !t.is_empty())
        .map(|(text, label)| {
            let parsed = label.parse::<Dimension>();
            PartnerClaim {
                ts: now,
                text,
                dimension: parsed.clone().unwrap_or(Dimension::Identity),
                source_interaction_id: interaction_id.to_string(),
                modality_tag: modality.map(str::to_string),
                needs_review: parsed.is_err(),
            }
        })
        .collect();
    if claims.is_empty() {
        return Ok(claims);
    }
    let model = h.recorded_model(&completion);
    let rows = claims
        .iter()
        .map(|c| {
            let mut p = json!({
                "text": c.text,
                "dimension": c.dimension.as_str(),
                "source_interaction_id": c.source_interaction_id,
            });
            if let Some(m) = &c.modality_tag {
                p["modality_tag"] = Value::from(m.as_str());
            }
            if c.needs_review {
                p["needs_review"] = Value::from(true);
            }
            NewRecord::new(Author::Agent, p).with_model(model.clone())
        })
        .collect();
    h.vault.append_batch(streams::PARTNER_LEARNINGS, rows)?;
    Ok(claims)
}

pub fn claims_in(h: &Harness, window: ReadWindow) -> Result<Vec<PartnerClaim>> {
    Ok(h.vault
        .read_stream(streams::PARTNER_LEARNINGS, window)?
        .records
        .iter()
        .filter_map(PartnerClaim::from_record)
        .collect())
}

/// Count per dimension; every dimension appears.
pub fn dimension_counts(claims: &[PartnerClaim]) -> BTreeMap<Dimension, usize> {
    let mut out: BTreeMap<Dimension, usize> = Dimension::ALL.iter().map(|d| (*d, 0)).collect();
    for c in claims {
        *out.entry(c.dimension).or_default() += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enum_is_closed() {
        assert_eq!("Voice".parse::<Dimension>(), Ok(Dimension::Voice));
        assert!("spirit".parse::<Dimension>().is_err());
        assert_eq!(Dimension::ALL.len(), 8);
    }

    #[test]
    fn normalisation() {
        assert_eq!(normalise_claim("  frames   everything\nrelationally "), "frames everything relationally.");
        assert_eq!(normalise_claim("Asks why?"), "Asks why?");
        assert_eq!(normalise_claim("   "), "");
    }
}
