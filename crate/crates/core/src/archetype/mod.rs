//! Archetypes: named interpretive modes, one logged per agent reply.

mod lock_in;
mod select;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::vault::{split_frontmatter, streams, Author, LogRecord, ReadWindow, Vault};
use crate::week::{IsoWeek, WeekRange};
use crate::{Error, Result};

pub use lock_in::{detect_lock_in, LockInReport, WeekCounts};
pub use select::{select_archetype, SelectionContext};

const TEMPLATES: [&str; 7] = [
    include_str!("../../examples/archetypes/ariadne.md"),
    include_str!("../../examples/archetypes/beatrice.md"),
    include_str!("../../examples/archetypes/daimon.md"),
    include_str!("../../examples/archetypes/muse.md"),
    include_str!("../../examples/archetypes/musubi.md"),
    include_str!("../../examples/archetypes/psyche.md"),
    include_str!("../../examples/archetypes/sylph.md"),
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    pub charter: String,
    pub trigger_hints: Vec<String>,
    pub invocable: bool,
}

impl Archetype {
    pub fn new(name: &str, invocable: bool) -> Self {
        Archetype {
            name: name.to_string(),
            charter: String::new(),
            trigger_hints: Vec::new(),
            invocable,
        }
    }

    pub fn with_hints(mut self, hints: &[&str]) -> Self {
        self.trigger_hints = hints.iter().map(|h| h.to_string()).collect();
        self
    }

    /// Parse a template: frontmatter `name`, `invocable`, `triggers`
    /// (comma-separated) and the charter as body.
    pub fn from_template(text: &str) -> Result<Self> {
        let (fm, body) = split_frontmatter(text).map_err(|m| Error::parse("archetype template", m))?;
        let name = fm
            .get("name")
            .filter(|n| !n.is_empty())
            .ok_or_else(|| Error::parse("archetype template", "missing name"))?;
        let invocable = match fm.get("invocable").map(String::as_str) {
            Some("true") | None => true,
            Some("false") => false,
            Some(other) => {
                return Err(Error::parse(
                    "archetype template",
                    format!("invocable must be true or false, got `{other}`"),
                ))
            }
        };
        let trigger_hints = fm
            .get("triggers")
            .map(|t| {
                t.split(',')
                    .map(|h| h.trim().to_lowercase())
                    .filter(|h| !h.is_empty())
                    .collect()
            })
            .unwrap_or_default();
        Ok(Archetype {
            name: name.clone(),
            charter: body.trim().to_string(),
            trigger_hints,
            invocable,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Registry {
    archetypes: BTreeMap<String, Archetype>,
}

impl Default for Registry {
    /// The six invocable archetypes plus the non-invocable Sylph.
    fn default() -> Self {
        let all = TEMPLATES
            .iter()
            .map(|t| Archetype::from_template(t).expect("bundled template parses"))
            .collect();
        Registry::new(all).expect("bundled names are unique")
    }
}

impl Registry {
    pub fn new(archetypes: Vec<Archetype>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for a in archetypes {
            if map.contains_key(&a.name) {
                return Err(Error::Invalid(format!("archetype `{}` listed twice", a.name)));
            }
            map.insert(a.name.clone(), a);
        }
        Ok(Registry { archetypes: map })
    }

    /// Load every `*.md` template in a directory.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut found = Vec::new();
        let entries = std::fs::read_dir(dir)
            .map_err(|e| Error::Invalid(format!("archetype dir {}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "md"))
            .collect();
        paths.sort();
        for p in paths {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))?;
            found.push(Archetype::from_template(&text)?);
        }
        Registry::new(found)
    }

    pub fn get(&self, name: &str) -> Option<&Archetype> {
        self.archetypes.get(name)
    }

    /// Case-insensitive lookup returning the canonical name.
    pub fn canonical(&self, name: &str) -> Option<&str> {
        let name = name.trim();
        self.archetypes
            .keys()
            .find(|k| k.eq_ignore_ascii_case(name))
            .map(String::as_str)
    }

    pub fn all(&self) -> impl Iterator<Item = &Archetype> {
        self.archetypes.values()
    }

    /// Invocable archetypes in lexicographic order.
    pub fn invocable(&self) -> impl Iterator<Item = &Archetype> {
        self.archetypes.values().filter(|a| a.invocable)
    }

    pub fn invocable_names(&self) -> Vec<String> {
        self.invocable().map(|a| a.name.clone()).collect()
    }

    pub fn check_invocable(&self, name: &str) -> Result<&Archetype> {
        match self.archetypes.get(name) {
            Some(a) if a.invocable => Ok(a),
            Some(_) => Err(Error::NotInvocable(name.to_string())),
            None => Err(Error::NotFound(format!("archetype `{name}`"))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    Cli,
    Api,
    Console,
    Scheduler,
}

impl Surface {
    pub fn as_str(&self) -> &'static str {
        match self {
            Surface::Cli => "cli",
            Surface::Api => "api",
            Surface::Console => "console",
            Surface::Scheduler => "scheduler",
        }
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Surface {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cli" => Ok(Surface::Cli),
            "api" => Ok(Surface::Api),
            "console" => Ok(Surface::Console),
            "scheduler" => Ok(Surface::Scheduler),
            other => Err(format!("unknown surface `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invocation {
    pub archetype: String,
    pub interaction_id: String,
    pub surface: Surface,
    pub success: bool,
}

pub fn log_invocation(
    vault: &Vault,
    registry: &Registry,
    invocation: &Invocation,
    model_id: Option<String>,
) -> Result<LogRecord> {
    registry.check_invocable(&invocation.archetype)?;
    Ok(vault.append_record(
        streams::ARCHETYPE_LOG,
        Author::Agent,
        json!({
            "archetype": invocation.archetype,
            "interaction_id": invocation.interaction_id,
            "surface": invocation.surface.as_str(),
            "success": invocation.success,
        }),
        model_id,
    )?)
}

/// Per-archetype counts for one week; every registry archetype appears.
pub fn distribution_of(records: &[LogRecord], week: IsoWeek, names: &[String]) -> BTreeMap<String, u64> {
    let mut counts: BTreeMap<String, u64> = names.iter().map(|n| (n.clone(), 0)).collect();
    for r in records.iter().filter(|r| week.contains(r.ts)) {
        if let Some(a) = r.str_field("archetype") {
            *counts.entry(a.to_string()).or_insert(0) += 1;
        }
    }
    counts
}

pub fn weekly_distribution(
    vault: &Vault,
    registry: &Registry,
    week: IsoWeek,
) -> Result<BTreeMap<String, u64>> {
    let records = vault
        .read_stream(streams::ARCHETYPE_LOG, ReadWindow::weeks(WeekRange::single(week)))?
        .records;
    Ok(distribution_of(&records, week, &registry.invocable_names()))
}

/// Counts for every week of a range, read from disk in one pass.
pub fn distribution_series(vault: &Vault, registry: &Registry, range: WeekRange) -> Result<Vec<WeekCounts>> {
    let records = vault
        .read_stream(streams::ARCHETYPE_LOG, ReadWindow::weeks(range))?
        .records;
    let names = registry.invocable_names();
    Ok(range
        .weeks()
        .into_iter()
        .map(|w| WeekCounts {
            week: w,
            counts: distribution_of(&records, w, &names),
        })
        .collect())
}

/// Interactions with agent output that do not have exactly one invocation
/// record, among those at or after `since`.
pub fn unmatched_interactions(vault: &Vault, since: Option<chrono::DateTime<chrono::Utc>>) -> Result<Vec<String>> {
    let mut per_id: BTreeMap<String, usize> = BTreeMap::new();
    for r in vault.records(streams::ARCHETYPE_LOG)? {
        if let Some(id) = r.str_field("interaction_id") {
            *per_id.entry(id.to_string()).or_default() += 1;
        }
    }
    let mut bad = Vec::new();
    for r in vault.records(streams::INTERACTIONS)? {
        if r.str_field("event") != Some("agent_message") || since.is_some_and(|s| r.ts < s) {
            continue;
        }
        if r.str_field("text").is_none_or(str::is_empty) {
            continue;
        }
        let id = r.str_field("interaction_id").unwrap_or_default();
        if per_id.get(id).copied().unwrap_or(0) != 1 {
            bad.push(id.to_string());
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{parse_ts, FixedClock};
    use crate::vault::VaultLayout;
    use std::sync::Arc;

    #[test]
    fn default_registry_shape() {
        let r = Registry::default();
        assert_eq!(
            r.invocable_names(),
            ["Ariadne", "Beatrice", "Daimon", "Muse", "Musubi", "Psyche"]
        );
        assert!(!r.get("Sylph").unwrap().invocable);
        assert!(r.get("Muse").unwrap().trigger_hints.contains(&"idea".to_string()));
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = Registry::new(vec![Archetype::new("Muse", true), Archetype::new("Muse", false)]);
        assert!(err.is_err());
    }

    #[test]
    fn sylph_and_unknown_cannot_be_logged() {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(FixedClock::new(parse_ts("2026-04-29T10:00:00Z").unwrap()));
        let vault = Vault::with_layout(VaultLayout::standard(dir.path()), clock).unwrap();
        let reg = Registry::default();
        let mut inv = Invocation {
            archetype: "Beatrice".into(),
            interaction_id: "int-1".into(),
            surface: Surface::Cli,
            success: true,
        };
        log_invocation(&vault, &reg, &inv, None).unwrap();
        assert_eq!(vault.records(streams::ARCHETYPE_LOG).unwrap().len(), 1);
        inv.archetype = "Sylph".into();
        assert!(matches!(log_invocation(&vault, &reg, &inv, None), Err(Error::NotInvocable(_))));
        inv.archetype = "Hermes".into();
        assert!(matches!(log_invocation(&vault, &reg, &inv, None), Err(Error::NotFound(_))));
        assert_eq!(vault.records(streams::ARCHETYPE_LOG).unwrap().len(), 1);

        let week = IsoWeek::of(parse_ts("2026-04-29T10:00:00Z").unwrap());
        let dist = weekly_distribution(&vault, &reg, week).unwrap();
        assert_eq!(dist["Beatrice"], 1);
        assert_eq!(dist.values().sum::<u64>(), 1);
        let empty = weekly_distribution(&vault, &reg, week.next()).unwrap();
        assert_eq!(empty.len(), 6);
        assert!(empty.values().all(|&c| c == 0));
    }
}
