use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::doc::DocKind;
use super::record::{FieldKind, StreamSchema};
use super::VaultError;

pub mod streams {
    pub const ARCHETYPE_LOG: &str = "archetype_log";
    pub const PARTNER_LEARNINGS: &str = "partner_learnings";
    pub const INTERACTIONS: &str = "interactions";
    pub const CONSTITUTION_SCORES: &str = "constitution_scores";
    pub const SKILL_LOG: &str = "skill_log";
    pub const IMPROVE_LOG: &str = "improve_log";
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelFormat {
    Jsonl,
    Tsv,
}

#[derive(Clone, Debug)]
pub struct Channel {
    pub path: PathBuf,
    pub format: ChannelFormat,
    pub schema: StreamSchema,
}

/// Where every stream and document kind lives inside a vault root.
#[derive(Clone, Debug)]
pub struct VaultLayout {
    root: PathBuf,
    channels: BTreeMap<String, Channel>,
    doc_roots: BTreeMap<DocKind, PathBuf>,
    episode_scores: PathBuf,
    constitution: PathBuf,
    meta_reflexion_log: PathBuf,
}

impl VaultLayout {
    /// The default layout, mirroring the data-product table of the
    /// reference instance.
    pub fn standard(root: impl Into<PathBuf>) -> Self {
        use FieldKind::*;
        let mut layout = VaultLayout {
            root: root.into(),
            channels: BTreeMap::new(),
            doc_roots: BTreeMap::new(),
            episode_scores: PathBuf::from("episode_scores.json"),
            constitution: PathBuf::from("Alicia/ALICIA_CONSTITUTION.md"),
            meta_reflexion_log: PathBuf::from("memory/meta_reflexion_log.md"),
        };
        let jsonl = ChannelFormat::Jsonl;
        layout
            .add_channel(
                streams::ARCHETYPE_LOG,
                "memory/archetype_log.jsonl",
                jsonl,
                StreamSchema::new(&[
                    ("archetype", Str),
                    ("interaction_id", Str),
                    ("surface", Str),
                    ("success", Bool),
                ]),
            )
            .expect("static layout");
        layout
            .add_channel(
                streams::PARTNER_LEARNINGS,
                "memory/partner_learnings.jsonl",
                jsonl,
                StreamSchema::new(&[
                    ("text", Str),
                    ("dimension", Str),
                    ("source_interaction_id", Str),
                ]),
            )
            .expect("static layout");
        layout
            .add_channel(
                streams::INTERACTIONS,
                "logs/interactions.jsonl",
                jsonl,
                StreamSchema::new(&[("event", Str), ("interaction_id", Str)]),
            )
            .expect("static layout");
        layout
            .add_channel(
                streams::CONSTITUTION_SCORES,
                "constitution_scores.tsv",
                ChannelFormat::Tsv,
                StreamSchema::new(&[
                    ("interaction_id", Str),
                    ("principle_id", Int),
                    ("score", Int),
                    ("rationale", Str),
                ]),
            )
            .expect("static layout");
        layout
            .add_channel(
                streams::SKILL_LOG,
                "memory/skill_log.jsonl",
                jsonl,
                StreamSchema::new(&[("event", Str), ("skill_id", Str)]),
            )
            .expect("static layout");
        layout
            .add_channel(
                streams::IMPROVE_LOG,
                "memory/improve_log.jsonl",
                jsonl,
                StreamSchema::new(&[("event", Str), ("run_id", Str), ("skill_id", Str)]),
            )
            .expect("static layout");

        for (kind, dir) in [
            (DocKind::SelfPortrait, "Wisdom/Lived"),
            (DocKind::SelfProfile, "Self/Profiles"),
            (DocKind::PartnerProfile, "Self/Profiles"),
            (DocKind::Delta, "Self/Profiles"),
            (DocKind::ScoutDigest, "architecture-scout"),
            (DocKind::MetaReflexion, "memory"),
            (DocKind::Constitution, "Alicia"),
            (DocKind::GrowthJournal, "Myself/journal"),
            (DocKind::Adr, "Alicia/adr"),
        ] {
            layout.doc_roots.insert(kind, PathBuf::from(dir));
        }
        layout
    }

    /// Register an extra stream. Names are unique and paths stay inside root.
    pub fn add_channel(
        &mut self,
        name: &str,
        rel_path: impl AsRef<Path>,
        format: ChannelFormat,
        schema: StreamSchema,
    ) -> Result<(), VaultError> {
        if self.channels.contains_key(name) {
            return Err(VaultError::DuplicateStream(name.to_string()));
        }
        let path = check_relative(rel_path.as_ref())?;
        self.channels.insert(
            name.to_string(),
            Channel {
                path,
                format,
                schema,
            },
        );
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn channel(&self, stream: &str) -> Result<&Channel, VaultError> {
        self.channels
            .get(stream)
            .ok_or_else(|| VaultError::UnknownStream(stream.to_string()))
    }

    pub fn channels(&self) -> impl Iterator<Item = (&str, &Channel)> {
        self.channels.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn doc_root(&self, kind: DocKind) -> &Path {
        &self.doc_roots[&kind]
    }

    pub fn episode_scores_path(&self) -> &Path {
        &self.episode_scores
    }

    pub fn constitution_path(&self) -> &Path {
        &self.constitution
    }

    pub fn meta_reflexion_path(&self) -> &Path {
        &self.meta_reflexion_log
    }

    /// Absolute path for a vault-relative one, refusing anything that escapes root.
    pub fn resolve(&self, rel: impl AsRef<Path>) -> Result<PathBuf, VaultError> {
        Ok(self.root.join(check_relative(rel.as_ref())?))
    }
}

pub fn check_relative(rel: &Path) -> Result<PathBuf, VaultError> {
    let mut out = PathBuf::new();
    for c in rel.components() {
        match c {
            Component::Normal(part) => out.push(part),
            Component::CurDir => {}
            _ => return Err(VaultError::PathEscape(rel.to_path_buf())),
        }
    }
    if out.as_os_str().is_empty() {
        return Err(VaultError::PathEscape(rel.to_path_buf()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_path_resolves_inside_root() {
        let layout = VaultLayout::standard("/vault");
        for (_, ch) in layout.channels() {
            assert!(layout.resolve(&ch.path).unwrap().starts_with("/vault"));
        }
        for kind in DocKind::ALL {
            assert!(layout
                .resolve(layout.doc_root(kind))
                .unwrap()
                .starts_with("/vault"));
        }
    }

    #[test]
    fn escaping_paths_rejected() {
        let layout = VaultLayout::standard("/vault");
        assert!(layout.resolve("../etc/passwd").is_err());
        assert!(layout.resolve("/etc/passwd").is_err());
        assert!(layout.resolve("a/../../b").is_err());
    }

    #[test]
    fn duplicate_stream_names_rejected() {
        let mut layout = VaultLayout::standard("/vault");
        let err = layout.add_channel(
            streams::INTERACTIONS,
            "x.jsonl",
            ChannelFormat::Jsonl,
            StreamSchema::default(),
        );
        assert!(matches!(err, Err(VaultError::DuplicateStream(_))));
    }
}
