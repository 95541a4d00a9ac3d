//! Is a delta document more than the sum of the two profiles it sits between?

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::text::{content_set, sentences};

/// Sections of a delta that carry its claims; sources and headings do not.
pub const DELTA_SECTIONS: [&str; 3] = ["Focus Shift", "Calibration Arc", "Partnership Alignment"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reducibility {
    pub sentences: usize,
    pub covered: usize,
    pub coverage: f64,
    pub reducible: bool,
    /// Sentences with at least one word absent from both profiles.
    pub novel: Vec<String>,
}

/// Body text under `## <name>` up to the next `## ` heading.
pub fn section<'a>(body: &'a str, name: &str) -> Option<&'a str> {
    let head = format!("## {name}");
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        offset += line.len();
        if line.trim_end() == head {
            let rest = &body[offset..];
            let end = rest.find("\n## ").map(|i| i + 1).unwrap_or(rest.len());
            let end = if rest.starts_with("## ") { 0 } else { end };
            return Some(&rest[..end]);
        }
    }
    None
}

/// Coverage of `text` by the union of the profiles' content words.
/// Sentences without content words say nothing and are not counted.
pub fn reducibility(text: &str, profiles: &[&str], threshold: f64) -> Reducibility {
    let vocab: BTreeSet<String> = profiles.iter().flat_map(|p| content_set(p)).collect();
    let mut total = 0;
    let mut covered = 0;
    let mut novel = Vec::new();
    for s in sentences(text) {
        let words = content_set(&s);
        if words.is_empty() {
            continue;
        }
        total += 1;
        if words.is_subset(&vocab) {
            covered += 1;
        } else {
            novel.push(s);
        }
    }
    let coverage = if total == 0 { 1.0 } else { covered as f64 / total as f64 };
    Reducibility {
        sentences: total,
        covered,
        coverage,
        reducible: coverage >= threshold,
        novel,
    }
}

/// Reducibility of a delta body, judged over its three claim sections only.
/// A missing profile contributes no vocabulary.
pub fn delta_reducibility(delta_body: &str, agent_profile: Option<&str>, partner_profile: Option<&str>, threshold: f64) -> Reducibility {
    let claims: Vec<&str> = DELTA_SECTIONS.iter().filter_map(|s| section(delta_body, s)).collect();
    let profiles: Vec<&str> = [agent_profile, partner_profile].into_iter().flatten().collect();
    reducibility(&claims.join("\n"), &profiles, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concatenation_is_fully_covered() {
        let a = "Beatrice carried most replies. Loops ran on schedule.";
        let p = "Voice notes arrived daily. Sleep was short.";
        let r = reducibility(&format!("{a}\n{p}"), &[a, p], 0.9);
        assert_eq!(r.coverage, 1.0);
        assert!(r.reducible);
    }

    #[test]
    fn one_novel_in_ten_is_boundary() {
        let profile = "alpha bravo charlie delta echo foxtrot golf hotel india juliet";
        let mut text: Vec<String> = profile.split(' ').map(|w| format!("{w} {w}.")).collect();
        text.pop();
        text.push("kilo lima.".into());
        let r = reducibility(&text.join(" "), &[profile], 0.9);
        assert_eq!((r.sentences, r.covered), (10, 9));
        assert!((r.coverage - 0.9).abs() < 1e-12);
        assert!(r.reducible);
        assert_eq!(r.novel, vec!["kilo lima"]);
    }

    #[test]
    fn sources_section_is_ignored() {
        let body = "## Focus Shift\n\nGrammar work.\n\n## Calibration Arc\n\nGrammar work.\n\n## Partnership Alignment\n\nGrammar work.\n\n## Sources\n\n- novel unseen citation words\n";
        let r = delta_reducibility(body, Some("grammar work"), None, 0.9);
        assert!(r.reducible);
        assert_eq!(r.sentences, 3);
    }

    #[test]
    fn section_extraction() {
        let body = "## A\nx\n## B\ny\nz\n";
        assert_eq!(section(body, "A"), Some("x\n"));
        assert_eq!(section(body, "B"), Some("y\nz\n"));
        assert_eq!(section(body, "C"), None);
    }
}
