//! Append to a stream, write a document, read both back and check integrity.
//!
//!     cargo run --example vault_basics

use humorph::vault::{streams, Author, DocKind, MarkdownDoc, NewRecord, ReadWindow};
use humorph::{IsoWeek, Vault};
use serde_json::json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let vault = Vault::open(dir.path())?;
    vault.init_dirs()?;

    let rows = vec![
        NewRecord::new(Author::Human, json!({"event": "human_message", "interaction_id": "i-00000", "text": "Morning."})),
        NewRecord::new(Author::Agent, json!({"event": "agent_message", "interaction_id": "i-00000", "text": "Morning. Sleep well?"})),
    ];
    let written = vault.append_batch(streams::INTERACTIONS, rows)?;
    println!("appended seq {:?}", written.iter().map(|r| r.seq).collect::<Vec<_>>());

    let read = vault.read_stream(streams::INTERACTIONS, ReadWindow::All)?;
    for r in &read.records {
        println!("{:>3} {:<6} {}", r.seq, r.author.as_str(), r.str_field("text").unwrap_or(""));
    }

    let root = vault.layout().doc_root(DocKind::GrowthJournal).to_path_buf();
    let now = vault.now();
    let doc = MarkdownDoc::new(
        DocKind::GrowthJournal,
        root.join("journal-entry.md"),
        Author::Human,
        IsoWeek::of(now),
        now,
        "example",
        "# Monday\n\nSlow start.\n",
    );
    let path = vault.write_doc(&doc)?;
    println!("wrote {}", path.display());
    println!("{}", vault.read_doc(&doc.path)?.render());

    let report = vault.verify_stream_integrity(streams::INTERACTIONS)?;
    println!("integrity: {} records, clean = {}", report.records, report.is_clean());
    Ok(())
}
