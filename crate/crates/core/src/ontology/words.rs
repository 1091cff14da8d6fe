//! Whole-word phrase lookup over free text.
//!
//! Text is split into runs of alphanumeric characters; a phrase matches a
//! run of consecutive words. Matching is case-insensitive and never lands
//! inside a word, which gives word-boundary semantics for free.

use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct Words<'a> {
    text: &'a str,
    spans: Vec<(usize, usize)>,
    lower: Vec<String>,
}

impl<'a> Words<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut spans = Vec::new();
        let mut start = None;
        for (i, ch) in text.char_indices() {
            match (ch.is_alphanumeric(), start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    spans.push((s, i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            spans.push((s, text.len()));
        }
        let lower = spans.iter().map(|&(s, e)| text[s..e].to_lowercase()).collect();
        Words { text, spans, lower }
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn word(&self, i: usize) -> &str {
        &self.lower[i]
    }

    /// Source text from the start of word `first` to the end of word `last`.
    pub fn surface(&self, first: usize, last: usize) -> &'a str {
        &self.text[self.spans[first].0..self.spans[last].1]
    }

    pub fn byte_start(&self, i: usize) -> usize {
        self.spans[i].0
    }
}

pub fn tokenize(phrase: &str) -> Vec<String> {
    Words::new(phrase).lower
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hit {
    pub first: usize,
    pub last: usize,
    /// Index of the matched phrase in insertion order.
    pub phrase: usize,
}

/// A set of phrases indexed by first word.
#[derive(Debug, Clone, Default)]
pub struct PhraseSet {
    by_first: HashMap<String, Vec<usize>>,
    phrases: Vec<Vec<String>>,
    plural: bool,
}

impl PhraseSet {
    /// With `plural`, the last word of a phrase also matches with an `s` or
    /// `es` suffix.
    pub fn new<I, S>(phrases: I, plural: bool) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = PhraseSet {
            plural,
            ..Default::default()
        };
        for p in phrases {
            set.insert(p.as_ref());
        }
        set
    }

    pub fn insert(&mut self, phrase: &str) {
        let words = tokenize(phrase);
        if words.is_empty() {
            return;
        }
        let idx = self.phrases.len();
        self.by_first.entry(words[0].clone()).or_default().push(idx);
        self.phrases.push(words);
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    fn word_matches(&self, want: &str, got: &str, is_last: bool) -> bool {
        if want == got {
            return true;
        }
        self.plural
            && is_last
            && got
                .strip_prefix(want)
                .is_some_and(|rest| rest == "s" || rest == "es")
    }

    /// Longest phrase starting at word `i`, if any.
    pub fn longest_at(&self, words: &Words<'_>, i: usize) -> Option<Hit> {
        let first = words.word(i);
        let mut candidates: Vec<usize> = self.by_first.get(first).cloned().unwrap_or_default();
        if self.plural {
            for suffix in ["s", "es"] {
                if let Some(stem) = first.strip_suffix(suffix) {
                    candidates.extend(self.by_first.get(stem).into_iter().flatten());
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        let mut best: Option<Hit> = None;
        for idx in candidates {
            let phrase = &self.phrases[idx];
            if i + phrase.len() > words.len() {
                continue;
            }
            let ok = phrase
                .iter()
                .enumerate()
                .all(|(k, w)| self.word_matches(w, words.word(i + k), k + 1 == phrase.len()));
            if ok && best.is_none_or(|b| phrase.len() > b.last + 1 - b.first) {
                best = Some(Hit {
                    first: i,
                    last: i + phrase.len() - 1,
                    phrase: idx,
                });
            }
        }
        best
    }

    /// Leftmost-longest, non-overlapping hits in text order.
    pub fn find_all(&self, words: &Words<'_>) -> Vec<Hit> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < words.len() {
            match self.longest_at(words, i) {
                Some(hit) => {
                    i = hit.last + 1;
                    out.push(hit);
                }
                None => i += 1,
            }
        }
        out
    }

    pub fn phrase(&self, idx: usize) -> String {
        self.phrases[idx].join(" ")
    }
}
