//! Bidirectional uptake: a human seed, an agent reframe carrying a phrase the
//! human never used, the human adopting that phrase, and the agent reusing
//! the topic in a document at least a week later.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::text::{content_set, ngrams};
use crate::vault::{streams, Author, Vault};
use crate::Result;

/// One piece of authored text in the vault.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextItem {
    pub ts: DateTime<Utc>,
    pub author: Author,
    /// `stream#seq` or a document path.
    pub source: String,
    pub text: String,
    pub is_doc: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub ts: DateTime<Utc>,
    pub author: Author,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UptakeChain {
    pub seed: Option<Stage>,
    pub reframe: Stage,
    pub novel_ngram: String,
    pub adoption: Stage,
    pub reuse: Vec<Stage>,
    /// Content words shared by seed and reframe.
    pub thread_terms: Vec<String>,
    pub complete: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct UptakeParams {
    pub min_ngram: usize,
    pub reuse_min_days: i64,
}

impl Default for UptakeParams {
    fn default() -> Self {
        UptakeParams {
            min_ngram: 3,
            reuse_min_days: 7,
        }
    }
}

/// Messages from the interactions stream plus every document body.
/// Partner claims are agent paraphrases of the human and are left out.
pub fn collect_items(vault: &Vault) -> Result<Vec<TextItem>> {
    let mut items = Vec::new();
    let rel = vault.layout().channel(streams::INTERACTIONS)?.path.display().to_string();
    for r in vault.records(streams::INTERACTIONS)? {
        let event = r.str_field("event");
        if !matches!(event, Some("human_message" | "agent_message")) {
            continue;
        }
        if let Some(text) = r.str_field("text").filter(|t| !t.trim().is_empty()) {
            items.push(TextItem {
                ts: r.ts,
                author: r.author,
                source: format!("{rel}#{}", r.seq),
                text: text.to_string(),
                is_doc: false,
            });
        }
    }
    for d in vault.all_docs()? {
        if let (Some(author), Some(ts)) = (d.author(), d.created()) {
            items.push(TextItem {
                ts,
                author,
                source: d.path.display().to_string(),
                text: d.body.clone(),
                is_doc: true,
            });
        }
    }
    items.sort_by(|a, b| a.ts.cmp(&b.ts).then_with(|| a.source.cmp(&b.source)));
    Ok(items)
}

fn stage(item: &TextItem) -> Stage {
    Stage {
        ts: item.ts,
        author: item.author,
        source: item.source.clone(),
    }
}

struct Prepared<'a> {
    item: &'a TextItem,
    words: BTreeSet<String>,
    grams: BTreeSet<String>,
}

pub fn detect_uptake(items: &[TextItem], params: UptakeParams) -> Vec<UptakeChain> {
    let prepared: Vec<Prepared> = items
        .iter()
        .map(|item| Prepared {
            item,
            words: content_set(&item.text),
            grams: ngrams(&item.text, params.min_ngram),
        })
        .collect();
    let human: Vec<&Prepared> = prepared.iter().filter(|p| p.item.author == Author::Human).collect();
    let agent: Vec<&Prepared> = prepared.iter().filter(|p| p.item.author == Author::Agent).collect();

    // earliest novel agent use of each n-gram
    let mut first_reframe: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, a) in agent.iter().enumerate() {
        for g in &a.grams {
            if first_reframe.contains_key(g.as_str()) {
                continue;
            }
            let used_by_human = human
                .iter()
                .any(|h| h.item.ts <= a.item.ts && h.grams.contains(g));
            if !used_by_human {
                first_reframe.insert(g, i);
            }
        }
    }

    let reuse_gap = Duration::days(params.reuse_min_days);
    let mut best: BTreeMap<usize, UptakeChain> = BTreeMap::new();
    for (g, ri) in first_reframe {
        let r = agent[ri];
        let Some(adopt) = human.iter().find(|h| h.item.ts > r.item.ts && h.grams.contains(g)) else {
            continue;
        };
        let seed = human
            .iter()
            .rev()
            .filter(|h| h.item.ts < r.item.ts)
            .find(|h| !h.words.is_disjoint(&r.words));
        let thread: BTreeSet<String> = seed
            .map(|s| s.words.intersection(&r.words).cloned().collect())
            .unwrap_or_default();
        let g_words: BTreeSet<String> = g.split(' ').map(str::to_string).collect();
        let reuse: Vec<Stage> = agent
            .iter()
            .filter(|a| a.item.is_doc && a.item.ts > adopt.item.ts && a.item.ts >= r.item.ts + reuse_gap)
            .filter(|a| a.grams.contains(g) || !a.words.is_disjoint(&thread) || g_words.is_subset(&a.words))
            .map(|a| stage(a.item))
            .collect();
        let complete = seed.is_some() && !reuse.is_empty();
        let chain = UptakeChain {
            seed: seed.map(|s| stage(s.item)),
            reframe: stage(r.item),
            novel_ngram: g.to_string(),
            adoption: stage(adopt.item),
            reuse,
            thread_terms: thread.into_iter().collect(),
            complete,
        };
        let better = match best.get(&ri) {
            None => true,
            Some(cur) => (chain.complete, std::cmp::Reverse(chain.adoption.ts)) > (cur.complete, std::cmp::Reverse(cur.adoption.ts)),
        };
        if better {
            best.insert(ri, chain);
        }
    }
    best.into_values().collect()
}

pub fn detect_uptake_in(vault: &Vault, params: UptakeParams) -> Result<Vec<UptakeChain>> {
    Ok(detect_uptake(&collect_items(vault)?, params))
}

/// Same items with human and agent authorship swapped.
pub fn swap_authors(items: &[TextItem]) -> Vec<TextItem> {
    items
        .iter()
        .map(|i| TextItem {
            author: match i.author {
                Author::Human => Author::Agent,
                Author::Agent => Author::Human,
                other => other,
            },
            ..i.clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::parse_ts;
    use proptest::prelude::*;

    fn item(ts: &str, author: Author, text: &str, is_doc: bool) -> TextItem {
        TextItem {
            ts: parse_ts(ts).unwrap(),
            author,
            source: ts.to_string(),
            text: text.into(),
            is_doc,
        }
    }

    #[test]
    fn echo_only_yields_nothing() {
        let items = vec![
            item("2026-04-01T10:00:00Z", Author::Human, "morning pages about river stones", false),
            item("2026-04-01T10:01:00Z", Author::Agent, "morning pages about river stones", false),
            item("2026-04-03T10:00:00Z", Author::Human, "more morning pages about river stones", false),
        ];
        assert!(detect_uptake(&items, UptakeParams::default()).is_empty());
    }

    #[test]
    fn reuse_must_be_a_week_out() {
        let items = vec![
            item("2026-04-01T10:00:00Z", Author::Human, "thinking about tidal clocks", false),
            item("2026-04-01T11:00:00Z", Author::Agent, "tidal clocks keep patient borrowed time", false),
            item("2026-04-02T10:00:00Z", Author::Human, "yes, patient borrowed time", false),
            item("2026-04-05T10:00:00Z", Author::Agent, "Tidal clocks again.", true),
        ];
        let chains = detect_uptake(&items, UptakeParams::default());
        assert_eq!(chains.len(), 1);
        assert!(!chains[0].complete);
        let mut later = items.clone();
        later[3].ts = parse_ts("2026-04-09T10:00:00Z").unwrap();
        let chains = detect_uptake(&later, UptakeParams::default());
        assert!(chains[0].complete);
        assert_eq!(chains[0].novel_ngram, "patient borrow time");
    }

    proptest! {
        #[test]
        fn agent_subset_of_human_has_no_complete_chain(words in proptest::collection::vec("[a-z]{5,8}", 4..12), cut in 0usize..4) {
            let human_text = words.join(" ");
            let agent_text = words[cut..].join(" ");
            let items = vec![
                item("2026-04-01T10:00:00Z", Author::Human, &human_text, false),
                item("2026-04-01T11:00:00Z", Author::Agent, &agent_text, false),
                item("2026-04-02T10:00:00Z", Author::Human, &human_text, false),
                item("2026-04-20T10:00:00Z", Author::Agent, &agent_text, true),
            ];
            prop_assert!(detect_uptake(&items, UptakeParams::default()).iter().all(|c| !c.complete));
        }
    }
}
