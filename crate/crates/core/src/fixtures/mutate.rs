use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analytics::references;
use crate::vault::{streams, Author, DocKind, LogRecord, NewRecord, Vault, VaultError};
use crate::Result;

/// One fault per conformance condition.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mutation {
    /// C1: keep only the latest agent self profile.
    DropSelfModels,
    /// C2: every human-authored stream record becomes a system record.
    SilenceHumanWriters,
    /// C3: partner profiles stop citing the human's journal.
    StripJournalCitations,
    /// C4: forget everything from before the cutoff.
    TruncateBefore(DateTime<Utc>),
    /// C5: the persistent-memory chatbot shape, with no delta documents.
    DropDeltas,
    /// C6: give every self-model update a human-authored counterpart.
    HumanEverySelfUpdate,
}

impl Mutation {
    /// The condition this mutation should break.
    pub fn target(&self) -> &'static str {
        match self {
            Mutation::DropSelfModels => "C1",
            Mutation::SilenceHumanWriters => "C2",
            Mutation::StripJournalCitations => "C3",
            Mutation::TruncateBefore(_) => "C4",
            Mutation::DropDeltas => "C5",
            Mutation::HumanEverySelfUpdate => "C6",
        }
    }

    /// The six mutations, with the continuity cutoff at 2026-05-04.
    pub fn all() -> [Mutation; 6] {
        [
            Mutation::DropSelfModels,
            Mutation::SilenceHumanWriters,
            Mutation::StripJournalCitations,
            Mutation::TruncateBefore(super::ts("2026-05-04T00:00:00Z")),
            Mutation::DropDeltas,
            Mutation::HumanEverySelfUpdate,
        ]
    }
}

fn copy_dir(src: &Path, dst: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dst)?;
    for entry in fs::read_dir(src)? {
        let entry = entry?;
        let name = entry.file_name();
        if name == ".locks" {
            continue;
        }
        let to = dst.join(&name);
        if entry.file_type()?.is_dir() {
            copy_dir(&entry.path(), &to)?;
        } else {
            fs::copy(entry.path(), &to)?;
        }
    }
    Ok(())
}

/// Recursive copy of a vault directory, minus lock files.
pub fn copy_vault(src: &Path, dst: &Path) -> Result<()> {
    copy_dir(src, dst).map_err(|source| {
        crate::Error::from(VaultError::Io {
            path: dst.to_path_buf(),
            source,
        })
    })
}

fn rewrite_all(vault: &Vault, f: impl Fn(&str, Vec<LogRecord>) -> Vec<LogRecord>) -> Result<()> {
    let names: Vec<String> = vault.layout().channels().map(|(n, _)| n.to_string()).collect();
    for name in names {
        let records = vault.records(&name)?;
        let out = f(&name, records);
        vault.rewrite_stream(&name, &out)?;
    }
    Ok(())
}

/// Apply `m` in place. Returns how many documents or records changed.
pub fn mutate(vault: &Vault, m: Mutation) -> Result<usize> {
    let mut changed = 0;
    match m {
        Mutation::DropSelfModels => {
            let keep = vault
                .query_docs(DocKind::SelfProfile, None)?
                .into_iter()
                .filter(|d| d.author() == Some(Author::Agent))
                .max_by_key(|d| (d.created(), d.path.clone()))
                .map(|d| d.path);
            for kind in [DocKind::SelfPortrait, DocKind::SelfProfile] {
                for d in vault.query_docs(kind, None)? {
                    if Some(&d.path) != keep.as_ref() {
                        vault.remove_doc(&d.path)?;
                        changed += 1;
                    }
                }
            }
        }
        Mutation::SilenceHumanWriters => {
            let count = std::cell::Cell::new(0);
            rewrite_all(vault, |_, records| {
                records
                    .into_iter()
                    .map(|mut r| {
                        if r.author == Author::Human {
                            r.author = Author::System;
                            count.set(count.get() + 1);
                        }
                        r
                    })
                    .collect()
            })?;
            changed = count.get();
        }
        Mutation::StripJournalCitations => {
            for mut d in vault.query_docs(DocKind::PartnerProfile, None)? {
                let journal_root = vault.layout().doc_root(DocKind::GrowthJournal).to_path_buf();
                let cites_journal = |line: &str| references(line).iter().any(|r| Path::new(r).starts_with(&journal_root));
                let kept: Vec<&str> = d.body.lines().filter(|l| !cites_journal(l)).collect();
                let body = kept.join("\n") + "\n";
                if body != d.body {
                    d.body = body;
                    vault.write_doc(&d)?;
                    changed += 1;
                }
            }
        }
        Mutation::TruncateBefore(cutoff) => {
            for d in vault.all_docs()? {
                if d.created().is_some_and(|t| t < cutoff) {
                    vault.remove_doc(&d.path)?;
                    changed += 1;
                }
            }
            let count = std::cell::Cell::new(0);
            rewrite_all(vault, |_, records| {
                let before = records.len();
                let kept: Vec<LogRecord> = records.into_iter().filter(|r| r.ts >= cutoff).collect();
                count.set(count.get() + before - kept.len());
                kept
            })?;
            changed += count.get();
        }
        Mutation::DropDeltas => {
            for d in vault.query_docs(DocKind::Delta, None)? {
                vault.remove_doc(&d.path)?;
                changed += 1;
            }
        }
        Mutation::HumanEverySelfUpdate => {
            let ids: Vec<String> = vault
                .records(streams::INTERACTIONS)?
                .iter()
                .filter(|r| r.str_field("event") == Some("self_model_update"))
                .filter_map(|r| r.str_field("interaction_id").map(str::to_string))
                .collect();
            let rows: Vec<NewRecord> = ids
                .iter()
                .map(|id| {
                    NewRecord::new(
                        Author::Human,
                        json!({"event": "instruction", "interaction_id": id, "text": "Update your self-model."}),
                    )
                })
                .collect();
            changed = rows.len();
            vault.append_batch(streams::INTERACTIONS, rows)?;
        }
    }
    Ok(changed)
}
