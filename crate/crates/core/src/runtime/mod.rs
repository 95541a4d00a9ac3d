//! The thin harness around the library: Listen, Notice and Know entry
//! points, a daemon that schedules them, the HTTP+SSE API, and replay.
//!
//! Nothing is held only in memory. Caches here are rebuilt from the vault
//! on first use, so a restart loses nothing.

mod api;
mod config;
mod daemon;
mod listen;
mod replay;
mod ticks;

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use crate::clock::FixedClock;
use crate::know::{load_corpus, SourceItem};
use crate::reflexion::install_default_constitution;
use crate::{Harness, Result};

pub use api::{router, serve};
pub use config::{Config, ScheduleSpec};
pub use daemon::run_daemon;
pub use listen::{ChatRequest, InteractionRecord};
pub use replay::{replay, replay_into, ReplayAction, ReplayEvent, ReplayOutcome, ReplayScript};
pub use ticks::{KnowStage, KnowSummary, NoticeSummary, StageOutcome, StageStatus};

pub struct Runtime {
    pub harness: Harness,
    /// Present when the config pins the clock.
    pub fixed_clock: Option<Arc<FixedClock>>,
    pub scout_sources: Vec<PathBuf>,
    pub notice_interval: chrono::Duration,
    listen: Mutex<Option<listen::ListenState>>,
    // Notice and Know never overlap each other.
    background: Mutex<()>,
}

impl std::fmt::Debug for Runtime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Runtime")
            .field("vault", &self.harness.vault.root())
            .field("profile", &self.harness.profile)
            .finish()
    }
}

impl Runtime {
    pub fn new(harness: Harness) -> Self {
        Runtime {
            harness,
            fixed_clock: None,
            scout_sources: Vec::new(),
            notice_interval: chrono::Duration::minutes(30),
            listen: Mutex::new(None),
            background: Mutex::new(()),
        }
    }

    /// A fresh runtime over a scripted scenario, with the clock pinned at
    /// `start` and the default constitution installed.
    pub fn scripted(
        root: &std::path::Path,
        scenario: crate::gateway::Scenario,
        start: chrono::DateTime<chrono::Utc>,
        settings: crate::Settings,
    ) -> Result<Self> {
        let clock = Arc::new(FixedClock::new(start));
        let vault = crate::Vault::with_layout(crate::VaultLayout::standard(root), clock.clone())?;
        let gateway = crate::gateway::Gateway::scripted("scripted", scenario);
        let harness = Harness::new(Arc::new(vault), Arc::new(gateway), "scripted").with_settings(settings);
        let mut rt = Runtime::new(harness);
        rt.fixed_clock = Some(clock);
        rt.init()?;
        Ok(rt)
    }

    /// Move a pinned clock. No effect on a system clock.
    pub fn set_time(&self, at: chrono::DateTime<chrono::Utc>) {
        if let Some(c) = &self.fixed_clock {
            c.set(at);
        }
    }

    /// Create the vault directories and the default constitution.
    pub fn init(&self) -> Result<bool> {
        self.harness.vault.init_dirs()?;
        install_default_constitution(&self.harness.vault)
    }

    /// Every configured scout source, concatenated. Unreadable sources
    /// contribute diagnostics only.
    pub fn scout_corpus(&self) -> (Vec<SourceItem>, Vec<String>) {
        let mut items = Vec::new();
        let mut diagnostics = Vec::new();
        if self.scout_sources.is_empty() {
            diagnostics.push("no scout sources configured".to_string());
        }
        for p in &self.scout_sources {
            let (i, d) = load_corpus(p);
            items.extend(i);
            diagnostics.extend(d);
        }
        (items, diagnostics)
    }
}

impl Runtime {
    /// A growth-journal entry from the human partner, one file per entry
    /// named by date.
    pub fn write_journal(&self, text: &str, title: Option<&str>) -> Result<crate::MarkdownDoc> {
        use crate::vault::{Author, DocKind, MarkdownDoc};
        if text.trim().is_empty() {
            return Err(crate::Error::Invalid("empty journal entry".into()));
        }
        let v = &self.harness.vault;
        let now = v.now();
        let root = v.layout().doc_root(DocKind::GrowthJournal).to_path_buf();
        let day = now.format("%Y-%m-%d").to_string();
        let mut path = root.join(format!("{day}.md"));
        let mut n = 2;
        while v.doc_exists(&path) {
            path = root.join(format!("{day}-{n}.md"));
            n += 1;
        }
        let heading = title.map(str::trim).filter(|t| !t.is_empty()).unwrap_or(&day);
        let body = format!("# {heading}\n\n{}\n", text.trim());
        let doc = MarkdownDoc::new(
            DocKind::GrowthJournal,
            path,
            Author::Human,
            crate::IsoWeek::of(now),
            now,
            "journal",
            body,
        );
        v.write_doc(&doc)?;
        Ok(doc)
    }
}
