//! Vault-visible harness and audit engine for human-agent partnerships.
//!
//! Every piece of state lives as plain text inside a vault directory:
//! append-only JSONL/TSV streams plus markdown documents with flat
//! frontmatter. On top of that substrate the crate provides
//!
//! - [`gateway`]: a completion interface over a deterministic scripted
//!   backend and an HTTP chat-completion backend,
//! - [`archetype`]: the archetype registry, selection, invocation logging
//!   and lock-in detection,
//! - [`reflexion`]: constitution scoring, skill rewriting with an honest
//!   validator, and meta-reflexion over the improver,
//! - [`know`]: the weekly generators (self-portrait, profile triad,
//!   architecture scout) and partner-claim extraction,
//! - [`analytics`]: trace statistics, falsification audits and the
//!   six-condition conformance checker,
//! - [`runtime`]: the Listen/Notice/Know daemon, HTTP+SSE API and replay.
//!
//! The runnable programs under `examples/` walk through each capability.

pub mod analytics;
pub mod archetype;
pub mod clock;
mod error;
pub mod fixtures;
pub mod gateway;
pub mod harness;
pub mod know;
pub mod reflexion;
pub mod runtime;
pub mod vault;
pub mod week;

pub use error::{Error, Result};
pub use harness::{Harness, Settings};
pub use vault::{Author, LogRecord, MarkdownDoc, Vault, VaultLayout};
pub use week::{IsoWeek, WeekRange};
