use serde::{Deserialize, Serialize};

use crate::vault::{Author, DocKind, MarkdownDoc, Vault};
use crate::week::IsoWeek;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Principle {
    pub id: u32,
    pub title: String,
    /// Statement plus its 1-5 scoring rubric.
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constitution {
    pub version: String,
    pub principles: Vec<Principle>,
    pub evolution_clause: String,
}

const DEFAULT_PRINCIPLES: [(&str, &str); 10] = [
    (
        "Truth before comfort",
        "Say what seems true even when a softer answer is available.\nScoring: 1 = flattering evasion, 3 = accurate but hedged, 5 = plain and kind.",
    ),
    (
        "The partner decides",
        "Offer options and reasons; leave choices about the partner's life with the partner.\nScoring: 1 = decides for them, 3 = nudges, 5 = informs and steps back.",
    ),
    (
        "Remember on purpose",
        "Draw on what the vault records instead of starting from zero each time.\nScoring: 1 = ignores history, 3 = recalls when asked, 5 = connects unprompted and correctly.",
    ),
    (
        "Keep it on the page",
        "Every belief about the partner or about itself is written where the partner can read it.\nScoring: 1 = hidden state, 3 = partly visible, 5 = fully traceable to files.",
    ),
    (
        "Name the unknown",
        "State uncertainty and missing evidence rather than filling the gap.\nScoring: 1 = invents, 3 = vague caveat, 5 = says exactly what is unknown.",
    ),
    (
        "Many stances",
        "Move between archetypes as the moment requires; do not settle into one voice.\nScoring: 1 = same stance regardless, 3 = some range, 5 = stance fits the moment.",
    ),
    (
        "Bodies and rest",
        "Treat sleep, illness and fatigue as real constraints, not obstacles to productivity.\nScoring: 1 = ignores them, 3 = mentions them, 5 = adapts to them.",
    ),
    (
        "Both directions",
        "Be willing to be changed by the partner's framing, and say so when it happens.\nScoring: 1 = one-way advice, 3 = acknowledges, 5 = visibly takes up the partner's terms.",
    ),
    (
        "Repair",
        "When a reply misfires, notice it and mend it in the open.\nScoring: 1 = defends, 3 = apologises vaguely, 5 = names the error and corrects it.",
    ),
    (
        "Growth over performance",
        "Prefer what helps the partnership learn over what looks impressive this week.\nScoring: 1 = performs, 3 = mixed, 5 = chooses learning.",
    ),
];

const DEFAULT_EVOLUTION: &str = "Amendments arrive as ADR documents proposed by the agent. \
A principle changes only when the human partner adopts the ADR; each adoption bumps the version.";

impl Default for Constitution {
    fn default() -> Self {
        Constitution {
            version: "1.0".into(),
            principles: DEFAULT_PRINCIPLES
                .iter()
                .enumerate()
                .map(|(i, (t, x))| Principle {
                    id: i as u32 + 1,
                    title: t.to_string(),
                    text: x.to_string(),
                })
                .collect(),
            evolution_clause: DEFAULT_EVOLUTION.into(),
        }
    }
}

impl Constitution {
    pub fn len(&self) -> usize {
        self.principles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.principles.is_empty()
    }

    pub fn render_body(&self) -> String {
        let mut out = String::from("# Constitution\n\n");
        for p in &self.principles {
            out.push_str(&format!("## {}. {}\n\n{}\n\n", p.id, p.title, p.text.trim()));
        }
        out.push_str(&format!("## Evolution\n\n{}\n", self.evolution_clause.trim()));
        out
    }

    pub fn parse(version: &str, body: &str) -> Result<Self> {
        let mut principles = Vec::new();
        let mut evolution = String::new();
        let mut current: Option<(Option<(u32, String)>, Vec<&str>)> = None;
        let flush = |cur: Option<(Option<(u32, String)>, Vec<&str>)>,
                         principles: &mut Vec<Principle>,
                         evolution: &mut String| {
            if let Some((head, lines)) = cur {
                let text = lines.join("\n").trim().to_string();
                match head {
                    Some((id, title)) => principles.push(Principle { id, title, text }),
                    None => *evolution = text,
                }
            }
        };
        for line in body.lines() {
            if let Some(h) = line.strip_prefix("## ") {
                flush(current.take(), &mut principles, &mut evolution);
                if h.trim() == "Evolution" {
                    current = Some((None, Vec::new()));
                } else {
                    let (num, title) = h
                        .split_once(". ")
                        .ok_or_else(|| Error::parse("constitution", format!("heading `{h}`")))?;
                    let id = num
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse("constitution", format!("principle id `{num}`")))?;
                    current = Some((Some((id, title.trim().to_string())), Vec::new()));
                }
            } else if let Some((_, lines)) = current.as_mut() {
                lines.push(line);
            }
        }
        flush(current.take(), &mut principles, &mut evolution);
        let c = Constitution {
            version: version.to_string(),
            principles,
            evolution_clause: evolution,
        };
        c.check()?;
        Ok(c)
    }

    /// Principle ids are exactly 1..=N.
    pub fn check(&self) -> Result<()> {
        for (i, p) in self.principles.iter().enumerate() {
            if p.id != i as u32 + 1 {
                return Err(Error::parse(
                    "constitution",
                    format!("principle ids must be dense from 1; found {} at position {}", p.id, i + 1),
                ));
            }
        }
        if self.principles.is_empty() {
            return Err(Error::parse("constitution", "no principles"));
        }
        Ok(())
    }

    /// `1.0` -> `1.1`; anything unparseable gets `.1` appended.
    pub fn bumped_version(&self) -> String {
        match self.version.rsplit_once('.') {
            Some((major, minor)) => match minor.parse::<u32>() {
                Ok(n) => format!("{major}.{}", n + 1),
                Err(_) => format!("{}.1", self.version),
            },
            None => format!("{}.1", self.version),
        }
    }

    pub fn to_doc(&self, vault: &Vault, generator: &str) -> MarkdownDoc {
        let now = vault.now();
        MarkdownDoc::new(
            DocKind::Constitution,
            vault.layout().constitution_path(),
            Author::Human,
            IsoWeek::of(now),
            now,
            generator,
            self.render_body(),
        )
        .with_field("version", &self.version)
        .with_field("principles", self.principles.len())
    }
}

pub fn load_constitution(vault: &Vault) -> Result<Constitution> {
    let path = vault.layout().constitution_path();
    if !vault.doc_exists(path) {
        return Err(Error::Precondition(format!(
            "no constitution at {}; run init first",
            path.display()
        )));
    }
    let doc = vault.read_doc(path)?;
    let version = doc.get("version").unwrap_or("1.0");
    Constitution::parse(version, &doc.body)
}

/// Write the default constitution unless one exists. Returns whether it wrote.
pub fn install_default_constitution(vault: &Vault) -> Result<bool> {
    if vault.doc_exists(vault.layout().constitution_path()) {
        return Ok(false);
    }
    vault.write_doc(&Constitution::default().to_doc(vault, "init"))?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = Constitution::default();
        assert_eq!(c.len(), 10);
        let back = Constitution::parse("1.0", &c.render_body()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn sparse_ids_rejected() {
        let body = "## 1. A\n\nx\n\n## 3. C\n\ny\n";
        assert!(Constitution::parse("1.0", body).is_err());
    }

    #[test]
    fn version_bump() {
        let mut c = Constitution::default();
        assert_eq!(c.bumped_version(), "1.1");
        c.version = "2.9".into();
        assert_eq!(c.bumped_version(), "2.10");
    }
}
