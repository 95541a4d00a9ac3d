//! The on-disk vault: flat-file markdown plus append-only JSONL/TSV streams.
//!
//! Every state the rest of the crate maintains goes through [`Vault`]; there
//! are no side databases. Streams have a single writer each (a mutex per
//! stream), readers take a snapshot at EOF and never block writers.

mod doc;
mod integrity;
mod layout;
mod record;

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde_json::Value;

use crate::clock::{Clock, SystemClock};
use crate::week::WeekRange;

pub use doc::{split_frontmatter, DocKind, MarkdownDoc, REQUIRED_KEYS};
pub use integrity::{IntegrityFinding, IntegrityReport};
pub use layout::{check_relative, streams, Channel, ChannelFormat, VaultLayout};
pub use record::{Author, FieldKind, LogRecord, NewRecord, StreamSchema, TSV_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum VaultError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("unknown stream `{0}`")]
    UnknownStream(String),

    #[error("stream `{0}` declared twice")]
    DuplicateStream(String),

    #[error("payload for `{stream}` violates its schema: {message}")]
    Schema { stream: String, message: String },

    #[error("path escapes the vault root: {0}")]
    PathEscape(PathBuf),

    #[error("authorship violation: {0}")]
    Authorship(String),

    #[error("{path} does not live under the `{kind}` root {expected}")]
    KindMismatch {
        path: PathBuf,
        kind: DocKind,
        expected: PathBuf,
    },

    #[error("frontmatter of {path} is incomplete: {message}")]
    Frontmatter { path: PathBuf, message: String },

    #[error("cannot parse {path}: {message}")]
    Malformed { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> VaultError + '_ {
    move |source| VaultError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Which records a read returns. Bounds are inclusive.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum ReadWindow {
    #[default]
    All,
    Seq { from: u64, to: u64 },
    Time {
        from: DateTime<Utc>,
        to: DateTime<Utc>,
    },
}

impl ReadWindow {
    pub fn weeks(range: WeekRange) -> Self {
        ReadWindow::Time {
            from: range.start(),
            to: range.end() - chrono::Duration::nanoseconds(1),
        }
    }

    fn admits(&self, rec: &LogRecord) -> bool {
        match *self {
            ReadWindow::All => true,
            ReadWindow::Seq { from, to } => rec.seq >= from && rec.seq <= to,
            ReadWindow::Time { from, to } => rec.ts >= from && rec.ts <= to,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

/// Result of reading a stream: parsed records plus any skipped lines.
#[derive(Clone, Debug, Default)]
pub struct StreamRead {
    pub records: Vec<LogRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

impl StreamRead {
    pub fn has_warnings(&self) -> bool {
        !self.diagnostics.is_empty()
    }
}

struct WriterState {
    last_seq: u64,
    last_ts: Option<DateTime<Utc>>,
    file: File,
}

pub struct Vault {
    layout: VaultLayout,
    clock: Arc<dyn Clock>,
    writers: BTreeMap<String, Mutex<Option<WriterState>>>,
    subscribers: Mutex<Vec<Sender<LogRecord>>>,
    docs: Mutex<()>,
}

impl std::fmt::Debug for Vault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Vault")
            .field("root", &self.layout.root())
            .field("clock", &self.clock)
            .finish()
    }
}

impl Vault {
    /// Open (creating directories as needed) with the standard layout and the
    /// system clock.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, VaultError> {
        Self::with_layout(VaultLayout::standard(root), Arc::new(SystemClock))
    }

    pub fn with_layout(layout: VaultLayout, clock: Arc<dyn Clock>) -> Result<Self, VaultError> {
        fs::create_dir_all(layout.root()).map_err(io_err(layout.root()))?;
        let writers = layout
            .channels()
            .map(|(name, _)| (name.to_string(), Mutex::new(None)))
            .collect();
        Ok(Vault {
            layout,
            clock,
            writers,
            subscribers: Mutex::new(Vec::new()),
            docs: Mutex::new(()),
        })
    }

    /// Create every doc root and stream parent directory.
    pub fn init_dirs(&self) -> Result<(), VaultError> {
        let mut dirs: Vec<PathBuf> = DocKind::ALL
            .iter()
            .map(|k| self.layout.doc_root(*k).to_path_buf())
            .collect();
        for (_, ch) in self.layout.channels() {
            if let Some(parent) = ch.path.parent() {
                dirs.push(parent.to_path_buf());
            }
        }
        for d in dirs {
            let abs = self.root().join(&d);
            fs::create_dir_all(&abs).map_err(io_err(&abs))?;
        }
        Ok(())
    }

    pub fn layout(&self) -> &VaultLayout {
        &self.layout
    }

    pub fn root(&self) -> &Path {
        self.layout.root()
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    /// Receive every record appended from now on, in per-stream seq order.
    pub fn subscribe(&self) -> Receiver<LogRecord> {
        let (tx, rx) = channel();
        self.subscribers.lock().unwrap().push(tx);
        rx
    }

    // ---- streams -------------------------------------------------------

    pub fn append_record(
        &self,
        stream: &str,
        author: Author,
        payload: Value,
        model_id: Option<String>,
    ) -> Result<LogRecord, VaultError> {
        let rec = NewRecord::new(author, payload).with_model(model_id);
        Ok(self.append_batch(stream, vec![rec])?.remove(0))
    }

    /// Append several records with one write and one fsync. Either every
    /// record lands or none does.
    pub fn append_batch(
        &self,
        stream: &str,
        entries: Vec<NewRecord>,
    ) -> Result<Vec<LogRecord>, VaultError> {
        let channel = self.layout.channel(stream)?;
        for e in &entries {
            channel
                .schema
                .validate(&e.payload)
                .map_err(|message| VaultError::Schema {
                    stream: stream.to_string(),
                    message,
                })?;
        }
        if entries.is_empty() {
            return Ok(Vec::new());
        }
        let path = self.layout.resolve(&channel.path)?;
        let slot = &self.writers[stream];
        let mut guard = slot.lock().unwrap();
        if guard.is_none() {
            *guard = Some(self.open_writer(stream, channel, &path)?);
        }
        let state = guard.as_mut().expect("initialised above");

        let now = self.clock.now();
        let ts = match state.last_ts {
            Some(last) if now < last => {
                tracing::warn!(stream, %now, %last, "clock moved backwards; stamping with last ts");
                last
            }
            _ => now,
        };

        let mut buf = String::new();
        let mut out = Vec::with_capacity(entries.len());
        for (i, e) in entries.into_iter().enumerate() {
            let rec = LogRecord {
                stream: stream.to_string(),
                seq: state.last_seq + 1 + i as u64,
                ts,
                author: e.author,
                model_id: e.model_id,
                payload: e.payload,
            };
            match channel.format {
                ChannelFormat::Jsonl => buf.push_str(&record::encode_jsonl(&rec)),
                ChannelFormat::Tsv => buf.push_str(&record::encode_tsv(&rec)),
            }
            buf.push('\n');
            out.push(rec);
        }
        state
            .file
            .write_all(buf.as_bytes())
            .and_then(|_| state.file.sync_data())
            .map_err(io_err(&path))?;
        state.last_seq += out.len() as u64;
        state.last_ts = Some(ts);

        let mut subs = self.subscribers.lock().unwrap();
        subs.retain(|tx| out.iter().all(|r| tx.send(r.clone()).is_ok()));
        Ok(out)
    }

    fn open_writer(
        &self,
        stream: &str,
        channel: &Channel,
        path: &Path,
    ) -> Result<WriterState, VaultError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let existing = match fs::read_to_string(path) {
            Ok(s) => Some(s),
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(io_err(path)(e)),
        };
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        let (mut last_seq, mut last_ts) = (0, None);
        match &existing {
            None => {
                if channel.format == ChannelFormat::Tsv {
                    writeln!(file, "{TSV_HEADER}").map_err(io_err(path))?;
                }
            }
            Some(text) => {
                let read = parse_stream_text(stream, channel.format, text);
                if let Some(last) = read.records.iter().max_by_key(|r| r.seq) {
                    last_seq = last.seq;
                }
                last_ts = read.records.iter().map(|r| r.ts).max();
                if channel.format == ChannelFormat::Tsv && text.is_empty() {
                    writeln!(file, "{TSV_HEADER}").map_err(io_err(path))?;
                }
                if !text.is_empty() && !text.ends_with('\n') {
                    // torn final line from a crashed writer; fence it off
                    file.write_all(b"\n").map_err(io_err(path))?;
                }
            }
        }
        Ok(WriterState {
            last_seq,
            last_ts,
            file,
        })
    }

    pub fn read_stream(&self, stream: &str, window: ReadWindow) -> Result<StreamRead, VaultError> {
        let channel = self.layout.channel(stream)?;
        let path = self.layout.resolve(&channel.path)?;
        let text = match fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(StreamRead::default()),
            Err(e) => return Err(io_err(&path)(e)),
        };
        let mut read = parse_stream_text(stream, channel.format, &text);
        read.records.retain(|r| window.admits(r));
        Ok(read)
    }

    /// Convenience: all records, diagnostics logged and dropped.
    pub fn records(&self, stream: &str) -> Result<Vec<LogRecord>, VaultError> {
        let read = self.read_stream(stream, ReadWindow::All)?;
        for d in &read.diagnostics {
            tracing::warn!(stream, line = d.line, "{}", d.message);
        }
        Ok(read.records)
    }

    pub fn stream_path(&self, stream: &str) -> Result<PathBuf, VaultError> {
        Ok(self.layout.channel(stream)?.path.clone())
    }

    pub fn verify_stream_integrity(&self, stream: &str) -> Result<IntegrityReport, VaultError> {
        let channel = self.layout.channel(stream)?;
        let path = self.layout.resolve(&channel.path)?;
        let text = match fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(io_err(&path)(e)),
        };
        Ok(integrity::check(stream, channel, &text))
    }

    /// Replace a stream's contents wholesale, renumbering seq from 1.
    ///
    /// This breaks the append-only contract on purpose. It exists to build
    /// counterfactual copies of a vault for audits and is never called by
    /// the runtime.
    pub fn rewrite_stream(&self, stream: &str, records: &[LogRecord]) -> Result<(), VaultError> {
        let channel = self.layout.channel(stream)?;
        let path = self.layout.resolve(&channel.path)?;
        let mut guard = self.writers[stream].lock().unwrap();
        let mut text = String::new();
        if channel.format == ChannelFormat::Tsv {
            text.push_str(TSV_HEADER);
            text.push('\n');
        }
        for (i, r) in records.iter().enumerate() {
            let mut r = r.clone();
            r.seq = i as u64 + 1;
            match channel.format {
                ChannelFormat::Jsonl => text.push_str(&record::encode_jsonl(&r)),
                ChannelFormat::Tsv => text.push_str(&record::encode_tsv(&r)),
            }
            text.push('\n');
        }
        write_atomic(&path, text.as_bytes())?;
        *guard = None;
        Ok(())
    }

    // ---- documents -----------------------------------------------------

    /// Write a document atomically, keeping the prior version under a
    /// `.history/` sibling directory.
    pub fn write_doc(&self, doc: &MarkdownDoc) -> Result<PathBuf, VaultError> {
        let rel = check_relative(&doc.path)?;
        let expected = self.layout.doc_root(doc.kind);
        if rel.parent() != Some(expected) {
            return Err(VaultError::KindMismatch {
                path: rel,
                kind: doc.kind,
                expected: expected.to_path_buf(),
            });
        }
        let missing: Vec<&str> = REQUIRED_KEYS
            .iter()
            .copied()
            .filter(|k| doc.get(k).is_none_or(str::is_empty))
            .collect();
        if !missing.is_empty() {
            return Err(VaultError::Frontmatter {
                path: rel,
                message: format!("missing {}", missing.join(", ")),
            });
        }
        if doc.get("kind") != Some(doc.kind.as_str()) {
            return Err(VaultError::Frontmatter {
                path: rel,
                message: format!("kind key does not match {}", doc.kind),
            });
        }
        let author = match doc.author() {
            Some(a @ (Author::Human | Author::Agent)) => a,
            _ => {
                return Err(VaultError::Frontmatter {
                    path: rel,
                    message: "author must be human or agent".into(),
                })
            }
        };
        if doc.iso_week().is_none() || doc.created().is_none() {
            return Err(VaultError::Frontmatter {
                path: rel,
                message: "iso_week or created_ts unparseable".into(),
            });
        }
        if doc.kind == DocKind::Delta && author != Author::Agent {
            return Err(VaultError::Authorship(
                "delta documents are agent-generated; the human partner reads but does not edit them"
                    .into(),
            ));
        }

        let abs = self.root().join(&rel);
        let _guard = self.docs.lock().unwrap();
        if abs.exists() {
            let hist_dir = abs.parent().expect("has parent").join(".history");
            fs::create_dir_all(&hist_dir).map_err(io_err(&hist_dir))?;
            let stem = abs
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("doc")
                .to_string();
            let stamp = self.clock.now().format("%Y%m%dT%H%M%SZ");
            let mut target = hist_dir.join(format!("{stem}.{stamp}.md"));
            let mut n = 2;
            while target.exists() {
                target = hist_dir.join(format!("{stem}.{stamp}-{n}.md"));
                n += 1;
            }
            fs::copy(&abs, &target).map_err(io_err(&target))?;
        }
        write_atomic(&abs, doc.render().as_bytes())?;
        Ok(rel)
    }

    pub fn read_doc(&self, rel: impl AsRef<Path>) -> Result<MarkdownDoc, VaultError> {
        let rel = check_relative(rel.as_ref())?;
        let abs = self.root().join(&rel);
        let text = fs::read_to_string(&abs).map_err(io_err(&abs))?;
        MarkdownDoc::parse(&rel, &text).map_err(|message| VaultError::Malformed { path: rel, message })
    }

    pub fn doc_exists(&self, rel: impl AsRef<Path>) -> bool {
        check_relative(rel.as_ref())
            .map(|r| self.root().join(r).is_file())
            .unwrap_or(false)
    }

    /// Remove a document (history is kept). Maintenance only.
    pub fn remove_doc(&self, rel: impl AsRef<Path>) -> Result<(), VaultError> {
        let rel = check_relative(rel.as_ref())?;
        let abs = self.root().join(&rel);
        fs::remove_file(&abs).map_err(io_err(&abs))
    }

    /// All documents of `kind`, ordered by iso_week then path.
    pub fn query_docs(
        &self,
        kind: DocKind,
        weeks: Option<WeekRange>,
    ) -> Result<Vec<MarkdownDoc>, VaultError> {
        let root = self.layout.doc_root(kind).to_path_buf();
        let mut docs: Vec<MarkdownDoc> = self
            .docs_under(&root)?
            .into_iter()
            .filter(|d| d.kind == kind)
            .filter(|d| match (weeks, d.iso_week()) {
                (None, _) => true,
                (Some(r), Some(w)) => r.contains(w),
                (Some(_), None) => false,
            })
            .collect();
        docs.sort_by(|a, b| (a.iso_week(), &a.path).cmp(&(b.iso_week(), &b.path)));
        Ok(docs)
    }

    /// Every parseable document in every doc root.
    pub fn all_docs(&self) -> Result<Vec<MarkdownDoc>, VaultError> {
        let mut out = Vec::new();
        for kind in DocKind::ALL {
            out.extend(self.query_docs(kind, None)?);
        }
        out.sort_by(|a, b| a.path.cmp(&b.path));
        out.dedup_by(|a, b| a.path == b.path);
        Ok(out)
    }

    fn docs_under(&self, rel_dir: &Path) -> Result<Vec<MarkdownDoc>, VaultError> {
        let abs = self.root().join(rel_dir);
        let entries = match fs::read_dir(&abs) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&abs)(e)),
        };
        let mut out = Vec::new();
        for entry in entries {
            let entry = entry.map_err(io_err(&abs))?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            if name.starts_with('.') || !name.ends_with(".md") || !entry.path().is_file() {
                continue;
            }
            let rel = rel_dir.join(name);
            match self.read_doc(&rel) {
                Ok(doc) => out.push(doc),
                Err(e) => tracing::warn!(path = %rel.display(), "skipping document: {e}"),
            }
        }
        Ok(out)
    }

    /// Prior versions kept for a document, oldest first.
    pub fn history(&self, rel: impl AsRef<Path>) -> Result<Vec<PathBuf>, VaultError> {
        let rel = check_relative(rel.as_ref())?;
        let Some(stem) = rel.file_stem().and_then(|s| s.to_str()) else {
            return Ok(Vec::new());
        };
        let hist_rel = rel.parent().unwrap_or(Path::new("")).join(".history");
        let abs = self.root().join(&hist_rel);
        let entries = match fs::read_dir(&abs) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&abs)(e)),
        };
        let prefix = format!("{stem}.");
        let mut out: Vec<PathBuf> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str().map(str::to_string))
            .filter(|n| n.starts_with(&prefix) && n.ends_with(".md"))
            .map(|n| hist_rel.join(n))
            .collect();
        out.sort();
        Ok(out)
    }

    // ---- plain artifacts ------------------------------------------------

    pub fn read_json(&self, rel: impl AsRef<Path>) -> Result<Option<Value>, VaultError> {
        let abs = self.layout.resolve(rel.as_ref())?;
        match fs::read_to_string(&abs) {
            Ok(s) => serde_json::from_str(&s).map(Some).map_err(|e| VaultError::Malformed {
                path: rel.as_ref().to_path_buf(),
                message: e.to_string(),
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&abs)(e)),
        }
    }

    /// Rewrite a JSON document atomically (pretty-printed, sorted keys).
    pub fn write_json(&self, rel: impl AsRef<Path>, value: &Value) -> Result<(), VaultError> {
        let abs = self.layout.resolve(rel.as_ref())?;
        let mut text = serde_json::to_string_pretty(value).expect("value serializes");
        text.push('\n');
        write_atomic(&abs, text.as_bytes())
    }

    pub fn write_text(&self, rel: impl AsRef<Path>, text: &str) -> Result<PathBuf, VaultError> {
        let rel = check_relative(rel.as_ref())?;
        write_atomic(&self.root().join(&rel), text.as_bytes())?;
        Ok(rel)
    }

    pub fn read_text(&self, rel: impl AsRef<Path>) -> Result<Option<String>, VaultError> {
        let abs = self.layout.resolve(rel.as_ref())?;
        match fs::read_to_string(&abs) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&abs)(e)),
        }
    }

    /// Exclusive advisory lock held for the guard's lifetime. Works across
    /// processes sharing the vault.
    pub fn try_lock(&self, name: &str) -> Result<Option<VaultLock>, VaultError> {
        let dir = self.root().join(".locks");
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(format!("{name}.lock"));
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Some(VaultLock { path })),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Ok(None),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

#[derive(Debug)]
pub struct VaultLock {
    path: PathBuf,
}

impl Drop for VaultLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn write_atomic(abs: &Path, bytes: &[u8]) -> Result<(), VaultError> {
    let dir = abs.parent().expect("vault paths have parents");
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = abs.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, abs).map_err(io_err(abs))
}

pub(crate) fn parse_stream_text(stream: &str, format: ChannelFormat, text: &str) -> StreamRead {
    let mut read = StreamRead::default();
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut row = 0u64;
    for (idx, line) in complete.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match format {
            ChannelFormat::Jsonl => record::decode_jsonl(stream, line),
            ChannelFormat::Tsv => {
                if lineno == 1 && line == TSV_HEADER {
                    continue;
                }
                row += 1;
                record::decode_tsv(stream, row, line)
            }
        };
        match parsed {
            Ok(rec) => read.records.push(rec),
            Err(message) => read.diagnostics.push(Diagnostic {
                line: lineno,
                message,
            }),
        }
    }
    read
}

#[cfg(test)]
mod tests;
