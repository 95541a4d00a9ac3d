//! Weekly narrative self-portrait.

use serde_json::json;

use super::{cite, interactions_in_week, record_self_model_update, stamp};
use crate::gateway::{CompletionRequest, Depth, Message};
use crate::vault::{streams, Author, DocKind, MarkdownDoc};
use crate::week::IsoWeek;
use crate::{Error, Harness, Result};

pub fn portrait_path(h: &Harness, week: IsoWeek) -> std::path::PathBuf {
    h.vault.layout().doc_root(DocKind::SelfPortrait).join(format!("{week}-portrait.md"))
}

/// Write the portrait for `week`. It cites the most recent earlier portrait,
/// or failing that the latest earlier artifact of any kind, so each portrait
/// is anchored to what came before.
pub fn generate_self_portrait(h: &Harness, week: IsoWeek) -> Result<MarkdownDoc> {
    let messages = interactions_in_week(h, week)?;
    let human: Vec<&str> = messages
        .iter()
        .filter(|r| r.author == Author::Human)
        .filter_map(|r| r.str_field("text"))
        .collect();
    if human.is_empty() {
        return Err(Error::Precondition(format!("no interactions in {week}")));
    }

    let earlier: Vec<MarkdownDoc> = h
        .vault
        .all_docs()?
        .into_iter()
        .filter(|d| d.iso_week().is_some_and(|w| w < week))
        .collect();
    let prior_portrait = earlier
        .iter()
        .filter(|d| d.kind == DocKind::SelfPortrait)
        .max_by_key(|d| d.iso_week());
    let prior_any = earlier
        .iter()
        .filter(|d| d.kind != DocKind::Constitution)
        .max_by_key(|d| (d.created(), d.path.clone()));
    let anchor = prior_portrait.or(prior_any);

    let mut context = format!("Week {week}. The partner wrote {} messages. Excerpts:\n", human.len());
    for t in human.iter().take(12) {
        context.push_str(&format!("- {}\n", t.trim()));
    }
    if let Some(a) = anchor {
        context.push_str(&format!("\nPrevious arc: [[{}]]\n{}\n", a.path.display(), a.body.trim()));
    }
    let req = CompletionRequest::new(
        Depth::Know,
        "portrait",
        vec![
            Message::system("Write this week's lived self-portrait: what you noticed in yourself and in the partnership. Cite earlier artifacts by path where you build on them."),
            Message::human(context),
        ],
        h.settings.budgets.know,
    );
    let completion = h.complete(&req)?;

    let learnings = h.vault.layout().channel(streams::PARTNER_LEARNINGS)?.path.clone();
    let mut body = format!("# Self-portrait {week}\n\n{}\n\n## Citations\n\n", completion.text.trim());
    if let Some(a) = anchor {
        body.push_str(&cite(&a.path));
    }
    body.push_str(&cite(&learnings));

    let now = h.now();
    let path = portrait_path(h, week);
    let doc = MarkdownDoc::new(DocKind::SelfPortrait, &path, Author::Agent, week, now, "self-portrait", body);
    let doc = stamp(h, doc, &completion);
    h.vault.write_doc(&doc)?;
    record_self_model_update(h, week, "portrait", &path, json!({"truncated": completion.truncated}))?;
    Ok(doc)
}
