//! Lexical basis shared by uptake detection and delta reducibility.

use std::collections::BTreeSet;
use std::sync::OnceLock;

const STOPWORDS_TXT: &str = include_str!("../../data/stopwords.txt");

fn stopwords() -> &'static BTreeSet<&'static str> {
    static SET: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_TXT
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_stopword(word: &str) -> bool {
    stopwords().contains(word)
}

/// Strip one inflectional suffix of at most two letters.
///
/// `-ed`, `-es` after a sibilant, otherwise `-s` (but not `-ss`). Words of
/// four letters or fewer are left alone.
pub fn stem(word: &str) -> String {
    if word.chars().count() <= 4 || !word.is_ascii() {
        return word.to_string();
    }
    if let Some(base) = word.strip_suffix("ed") {
        return base.to_string();
    }
    if let Some(base) = word.strip_suffix("es") {
        if ["s", "x", "z", "ch", "sh"].iter().any(|s| base.ends_with(s)) {
            return base.to_string();
        }
    }
    if word.ends_with('s') && !word.ends_with("ss") {
        return word[..word.len() - 1].to_string();
    }
    word.to_string()
}

/// Lowercased alphanumeric runs. Apostrophes split words, so contractions
/// fall apart into stopword fragments.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Stemmed, non-stopword tokens in order. Single letters and bare numbers
/// carry no topic and are dropped.
pub fn content_words(text: &str) -> Vec<String> {
    tokens(text)
        .filter(|t| t.chars().count() > 1 && !t.chars().all(|c| c.is_ascii_digit()))
        .filter(|t| !is_stopword(t))
        .map(|t| stem(&t))
        .collect()
}

pub fn content_set(text: &str) -> BTreeSet<String> {
    content_words(text).into_iter().collect()
}

/// Contiguous runs of `n` content words, joined by single spaces.
pub fn ngrams(text: &str, n: usize) -> BTreeSet<String> {
    let words = content_words(text);
    if n == 0 || words.len() < n {
        return BTreeSet::new();
    }
    words.windows(n).map(|w| w.join(" ")).collect()
}

/// Sentences of running prose: headings, list markers and blank lines are
/// not sentences; everything else splits on `.`, `!`, `?` and newlines.
pub fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "---" {
            continue;
        }
        let line = line.trim_start_matches(['-', '*', '>', ' ']);
        for s in line.split(['.', '!', '?']) {
            let s = s.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopword_file_loads() {
        assert!(is_stopword("the"));
        assert!(is_stopword("we"));
        assert!(!is_stopword("grammar"));
    }

    #[test]
    fn stemming_keeps_short_words() {
        assert_eq!(stem("grammars"), "grammar");
        assert_eq!(stem("shared"), "shar");
        assert_eq!(stem("watches"), "watch");
        assert_eq!(stem("glasses"), "glass");
        assert_eq!(stem("class"), "class");
        assert_eq!(stem("uses"), "uses");
        assert_eq!(stem("bus"), "bus");
    }

    #[test]
    fn contractions_and_case() {
        assert_eq!(content_words("The Grammar that we're seeking"), vec!["grammar", "seeking"]);
    }

    #[test]
    fn ngrams_normalise_inflection() {
        let a = ngrams("a shared living grammar", 3);
        let b = ngrams("Our SHARED living grammars!", 3);
        assert_eq!(a, b);
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn sentences_skip_headings() {
        let s = sentences("## Focus Shift\n\nOne. Two!\n- three\n");
        assert_eq!(s, vec!["One", "Two", "three"]);
    }
}
