use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::archetype::Registry;
use crate::clock::{Clock, FixedClock, SystemClock};
use crate::gateway::{Gateway, ModelProfile};
use crate::vault::{Vault, VaultLayout};
use crate::{Error, Harness, Result, Settings};

use super::Runtime;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleSpec {
    pub notice_interval_minutes: u64,
    /// Pin the clock, for replays and demos.
    pub fixed_clock: Option<DateTime<Utc>>,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            notice_interval_minutes: 30,
            fixed_clock: None,
        }
    }
}

/// Runtime configuration, read from JSON. Relative paths resolve against
/// the config file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub vault: PathBuf,
    /// Profile used for every completion.
    pub profile: String,
    pub profiles: Vec<ModelProfile>,
    /// Shortcut: one scripted scenario behind every depth of `profile`.
    pub scenario: Option<PathBuf>,
    /// Directory of archetype templates; the bundled set when absent.
    pub archetypes: Option<PathBuf>,
    pub bind: String,
    pub schedule: ScheduleSpec,
    pub scout_sources: Vec<PathBuf>,
    pub settings: Settings,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            vault: PathBuf::from("vault"),
            profile: "default".into(),
            profiles: Vec::new(),
            scenario: None,
            archetypes: None,
            bind: "127.0.0.1:7878".into(),
            schedule: ScheduleSpec::default(),
            scout_sources: Vec::new(),
            settings: Settings::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("config {}: {e}", path.display())))?;
        let mut cfg: Config =
            serde_json::from_str(&text).map_err(|e| Error::parse("config", format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    /// A scripted configuration rooted at `vault`.
    pub fn scripted(vault: impl Into<PathBuf>, scenario: impl Into<PathBuf>) -> Self {
        Config {
            vault: vault.into(),
            scenario: Some(scenario.into()),
            ..Config::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schedule.notice_interval_minutes < 1 {
            return Err(Error::Invalid("notice_interval_minutes must be at least 1".into()));
        }
        if self.scenario.is_none() && !self.profiles.iter().any(|p| p.name == self.profile) {
            return Err(Error::Invalid(format!("no model profile named `{}`", self.profile)));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn vault_root(&self) -> PathBuf {
        self.resolve(&self.vault)
    }

    /// Open the vault and gateway and assemble a runtime.
    pub fn build(&self) -> Result<Runtime> {
        self.validate()?;
        let (clock, fixed): (Arc<dyn Clock>, _) = match self.schedule.fixed_clock {
            Some(at) => {
                let c = Arc::new(FixedClock::new(at));
                (c.clone(), Some(c))
            }
            None => (Arc::new(SystemClock), None),
        };
        let vault = Vault::with_layout(VaultLayout::standard(self.vault_root()), clock)?;
        vault.init_dirs()?;
        let gateway = Gateway::new(&self.base_dir);
        for p in &self.profiles {
            gateway.register_profile(p.clone())?;
        }
        if let Some(s) = &self.scenario {
            gateway.register_profile(ModelProfile::scripted(&self.profile, self.resolve(s)))?;
        }
        let registry = match &self.archetypes {
            Some(dir) => Registry::from_dir(&self.resolve(dir))?,
            None => Registry::default(),
        };
        let harness = Harness::new(Arc::new(vault), Arc::new(gateway), &self.profile)
            .with_settings(self.settings.clone())
            .with_registry(registry);
        let mut rt = Runtime::new(harness);
        rt.fixed_clock = fixed;
        rt.scout_sources = self.scout_sources.iter().map(|p| self.resolve(p)).collect();
        rt.notice_interval = chrono::Duration::minutes(self.schedule.notice_interval_minutes as i64);
        Ok(rt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg: Config = serde_json::from_str(r#"{"vault": "v", "scenario": "s.json", "settings": {"min_pairs": 7}}"#).unwrap();
        assert_eq!(cfg.schedule.notice_interval_minutes, 30);
        assert_eq!(cfg.settings.min_pairs, 7);
        assert_eq!(cfg.settings.continuity_days, 28);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn zero_interval_and_missing_profile_rejected() {
        let mut cfg = Config::scripted("v", "s.json");
        cfg.schedule.notice_interval_minutes = 0;
        assert!(cfg.validate().is_err());
        let cfg = Config {
            scenario: None,
            ..Config::default()
        };
        assert!(cfg.validate().is_err());
    }
}
