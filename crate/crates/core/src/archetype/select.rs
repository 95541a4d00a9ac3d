use std::collections::BTreeMap;

use super::{Archetype, Registry};
use crate::gateway::Depth;
use crate::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct SelectionContext<'a> {
    /// Most recent last.
    pub recent: &'a [String],
    pub depth: Option<Depth>,
    /// Explicit request from the surface (e.g. `/muse` or an API field).
    pub requested: Option<&'a str>,
}

fn padded_words(text: &str) -> String {
    let lowered = text.to_lowercase();
    let words: Vec<&str> = lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    format!(" {} ", words.join(" "))
}

fn hint_hits(a: &Archetype, haystack: &str) -> usize {
    a.trigger_hints
        .iter()
        .filter(|h| haystack.contains(&padded_words(h)))
        .count()
}

fn best_by_history<'r>(cands: &[&'r Archetype], history: &BTreeMap<String, u64>) -> &'r Archetype {
    // max by frequency; on equal frequency the lexicographically first wins
    let mut best = cands[0];
    for &c in &cands[1..] {
        let (fc, fb) = (
            history.get(&c.name).copied().unwrap_or(0),
            history.get(&best.name).copied().unwrap_or(0),
        );
        if fc > fb || (fc == fb && c.name < best.name) {
            best = c;
        }
    }
    best
}

/// Pick the archetype for the next reply.
///
/// Order: explicit request, trigger-hint matches over the recent context,
/// the classifier (consulted only at listen depth), then historical
/// frequency with lexicographic order as the final tie-break. The result is
/// always invocable.
pub fn select_archetype(
    registry: &Registry,
    ctx: &SelectionContext<'_>,
    history: &BTreeMap<String, u64>,
    classify: impl FnOnce(&[&Archetype]) -> Option<String>,
) -> Result<String> {
    let invocable: Vec<&Archetype> = registry.invocable().collect();
    if invocable.is_empty() {
        return Err(Error::NoInvocableArchetype);
    }

    if let Some(req) = ctx.requested {
        let name = registry
            .canonical(req)
            .ok_or_else(|| Error::NotFound(format!("archetype `{req}`")))?;
        return Ok(registry.check_invocable(name)?.name.clone());
    }

    let haystack = padded_words(&ctx.recent.join(" "));
    let scored: Vec<(usize, &Archetype)> = invocable
        .iter()
        .map(|a| (hint_hits(a, &haystack), *a))
        .collect();
    let top = scored.iter().map(|(n, _)| *n).max().unwrap_or(0);
    if top > 0 {
        let tied: Vec<&Archetype> = scored
            .iter()
            .filter(|(n, _)| *n == top)
            .map(|(_, a)| *a)
            .collect();
        return Ok(best_by_history(&tied, history).name.clone());
    }

    if ctx.depth == Some(Depth::Listen) && !ctx.recent.is_empty() {
        if let Some(label) = classify(&invocable) {
            if let Some(name) = registry.canonical(&label) {
                if registry.check_invocable(name).is_ok() {
                    return Ok(name.to_string());
                }
            }
            tracing::debug!(%label, "classifier label ignored");
        }
    }

    Ok(best_by_history(&invocable, history).name.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn none(_: &[&Archetype]) -> Option<String> {
        None
    }

    #[test]
    fn singleton_registry() {
        let reg = Registry::new(vec![
            Archetype::new("Muse", true),
            Archetype::new("Sylph", false),
            Archetype::new("Daimon", false),
        ])
        .unwrap();
        let got = select_archetype(&reg, &SelectionContext::default(), &BTreeMap::new(), none).unwrap();
        assert_eq!(got, "Muse");
    }

    #[test]
    fn classifier_passes_through_at_listen() {
        let reg = Registry::default();
        let recent = vec!["good morning".to_string()];
        let ctx = SelectionContext {
            recent: &recent,
            depth: Some(Depth::Listen),
            requested: None,
        };
        let got = select_archetype(&reg, &ctx, &BTreeMap::new(), |_| Some("Beatrice".into())).unwrap();
        assert_eq!(got, "Beatrice");
        // Sylph from the classifier falls through to the tie-break
        let got = select_archetype(&reg, &ctx, &BTreeMap::new(), |_| Some("sylph".into())).unwrap();
        assert_eq!(got, "Ariadne");
    }

    #[test]
    fn empty_context_no_history_is_lexicographic() {
        let reg = Registry::default();
        let got = select_archetype(&reg, &SelectionContext::default(), &BTreeMap::new(), none).unwrap();
        assert_eq!(got, "Ariadne");
    }

    #[test]
    fn hints_then_frequency() {
        let reg = Registry::default();
        let recent = vec!["I have an idea for a poem".to_string()];
        let ctx = SelectionContext {
            recent: &recent,
            depth: Some(Depth::Listen),
            requested: None,
        };
        let got = select_archetype(&reg, &ctx, &BTreeMap::new(), |_| Some("Daimon".into())).unwrap();
        assert_eq!(got, "Muse");
        let history = BTreeMap::from([("Psyche".to_string(), 3)]);
        let got = select_archetype(&reg, &SelectionContext::default(), &history, none).unwrap();
        assert_eq!(got, "Psyche");
    }

    #[test]
    fn explicit_request_cannot_reach_sylph() {
        let reg = Registry::default();
        let ctx = SelectionContext {
            requested: Some("Sylph"),
            ..Default::default()
        };
        assert!(matches!(
            select_archetype(&reg, &ctx, &BTreeMap::new(), none),
            Err(Error::NotInvocable(_))
        ));
        let ctx = SelectionContext {
            requested: Some("muse"),
            ..Default::default()
        };
        assert_eq!(select_archetype(&reg, &ctx, &BTreeMap::new(), none).unwrap(), "Muse");
    }

    #[test]
    fn no_invocable_is_an_error() {
        let reg = Registry::new(vec![Archetype::new("Sylph", false)]).unwrap();
        assert!(matches!(
            select_archetype(&reg, &SelectionContext::default(), &BTreeMap::new(), none),
            Err(Error::NoInvocableArchetype)
        ));
    }

    proptest! {
        #[test]
        fn never_selects_non_invocable(
            flags in proptest::collection::vec(any::<bool>(), 1..7),
            text in "[a-z ]{0,40}",
            label in "[A-Za-z]{0,8}",
            freq in proptest::collection::vec(0u64..5, 7),
        ) {
            let names = ["Ariadne", "Beatrice", "Daimon", "Muse", "Musubi", "Psyche", "Sylph"];
            let hints: [&[&str]; 7] = [&["lost"], &["plan"], &["honest"], &["idea"], &["connect"], &["feel"], &["lovely"]];
            let reg = Registry::new(
                flags.iter().enumerate().map(|(i, f)| Archetype::new(names[i], *f).with_hints(hints[i])).collect(),
            ).unwrap();
            let history: BTreeMap<String, u64> =
                names.iter().zip(freq.iter()).map(|(n, f)| (n.to_string(), *f)).collect();
            let recent = vec![text];
            let ctx = SelectionContext { recent: &recent, depth: Some(Depth::Listen), requested: None };
            match select_archetype(&reg, &ctx, &history, |_| Some(label.clone())) {
                Ok(name) => prop_assert!(reg.get(&name).unwrap().invocable),
                Err(Error::NoInvocableArchetype) => prop_assert!(flags.iter().all(|f| !f)),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
