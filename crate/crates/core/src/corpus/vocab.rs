use std::collections::{BTreeMap, HashMap};

use super::{AlignedSentencePair, PairSource};
use crate::error::{Error, Result};

/// English and language-tagged foreign vocabularies with dense ids.
///
/// Ids are assigned by descending count, ties broken lexicographically.
/// Foreign ids are grouped by language (languages in sorted order), so the
/// same surface form in two languages gets two ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    en_words: Vec<String>,
    en_counts: Vec<u64>,
    en_index: HashMap<String, u32>,
    fg_words: Vec<(String, String)>,
    fg_counts: Vec<u64>,
    fg_index: BTreeMap<String, HashMap<String, u32>>,
    n_e: u64,
    n_f: u64,
}

fn sorted_by_count<K: Ord>(counts: impl IntoIterator<Item = (K, u64)>, min_count: u64) -> Vec<(K, u64)> {
    let mut kept: Vec<(K, u64)> = counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    kept
}

impl Vocabulary {
    /// Builds a vocabulary from raw counts, dropping entries below `min_count`.
    ///
    /// `fg` is keyed by `(word, lang)`.
    pub fn from_counts(
        en: impl IntoIterator<Item = (String, u64)>,
        fg: impl IntoIterator<Item = ((String, String), u64)>,
        min_count: u64,
    ) -> Result<Self> {
        let en = sorted_by_count(en, min_count);
        if en.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        // group foreign words by language first
        let mut fg: Vec<((String, String), u64)> = fg
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .map(|((w, l), c)| ((l, w), c))
            .collect();
        fg.sort_by(|a, b| {
            a.0 .0
                .cmp(&b.0 .0)
                .then_with(|| b.1.cmp(&a.1))
                .then_with(|| a.0 .1.cmp(&b.0 .1))
        });

        let fg = fg.into_iter().map(|((lang, word), count)| (word, lang, count)).collect();
        let vocab = Vocabulary::from_ordered(en, fg);
        Ok(vocab)
    }

    /// Rebuilds a vocabulary whose entries are already in id order.
    pub(crate) fn from_ordered(en: Vec<(String, u64)>, fg: Vec<(String, String, u64)>) -> Self {
        let mut vocab = Vocabulary::default();
        for (word, count) in en {
            vocab.en_index.insert(word.clone(), vocab.en_words.len() as u32);
            vocab.en_words.push(word);
            vocab.en_counts.push(count);
            vocab.n_e += count;
        }
        for (word, lang, count) in fg {
            let id = vocab.fg_words.len() as u32;
            vocab.fg_index.entry(lang.clone()).or_default().insert(word.clone(), id);
            vocab.fg_words.push((word, lang));
            vocab.fg_counts.push(count);
            vocab.n_f += count;
        }
        vocab
    }

    pub fn en_len(&self) -> usize {
        self.en_words.len()
    }

    pub fn fg_len(&self) -> usize {
        self.fg_words.len()
    }

    /// Retained English token occurrences.
    pub fn n_e(&self) -> u64 {
        self.n_e
    }

    /// Retained foreign token occurrences.
    pub fn n_f(&self) -> u64 {
        self.n_f
    }

    pub fn en_id(&self, word: &str) -> Option<u32> {
        self.en_index.get(word).copied()
    }

    pub fn fg_id(&self, word: &str, lang: &str) -> Option<u32> {
        self.fg_index.get(lang)?.get(word).copied()
    }

    pub fn en_word(&self, id: u32) -> &str {
        &self.en_words[id as usize]
    }

    /// `(word, lang)` of a foreign id.
    pub fn fg_word(&self, id: u32) -> (&str, &str) {
        let (w, l) = &self.fg_words[id as usize];
        (w, l)
    }

    pub fn en_count(&self, id: u32) -> u64 {
        self.en_counts[id as usize]
    }

    pub fn fg_count(&self, id: u32) -> u64 {
        self.fg_counts[id as usize]
    }

    pub fn en_counts(&self) -> &[u64] {
        &self.en_counts
    }

    pub fn fg_counts(&self) -> &[u64] {
        &self.fg_counts
    }

    /// Foreign languages present, sorted.
    pub fn langs(&self) -> impl Iterator<Item = &str> {
        self.fg_index.keys().map(String::as_str)
    }

    /// Foreign ids belonging to `lang`, in id order.
    pub fn fg_ids_of(&self, lang: &str) -> Vec<u32> {
        (0..self.fg_words.len() as u32)
            .filter(|&id| self.fg_words[id as usize].1 == lang)
            .collect()
    }

    /// Iterates `(word, count)` over the English side in id order.
    pub fn en_entries(&self) -> impl Iterator<Item = (&str, u64)> {
        self.en_words.iter().map(String::as_str).zip(self.en_counts.iter().copied())
    }

    /// Iterates `(word, lang, count)` over the foreign side in id order.
    pub fn fg_entries(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.fg_words
            .iter()
            .zip(self.fg_counts.iter().copied())
            .map(|((w, l), c)| (w.as_str(), l.as_str(), c))
    }
}

/// Raw occurrence counts gathered in one pass.
#[derive(Debug, Default)]
pub(crate) struct Counts {
    pub en: HashMap<String, u64>,
    pub fg: HashMap<(String, String), u64>,
}

impl Counts {
    pub fn add(&mut self, pair: &AlignedSentencePair) {
        for w in &pair.en {
            *self.en.entry(w.clone()).or_default() += 1;
        }
        for w in &pair.fg {
            *self.fg.entry((w.clone(), pair.lang.clone())).or_default() += 1;
        }
    }
}

/// Counts every word of `source` and keeps those seen at least `min_count` times.
pub fn build_vocabulary<S: PairSource + ?Sized>(source: &S, min_count: u64) -> Result<Vocabulary> {
    let mut counts = Counts::default();
    source.for_each_pair(&mut |pair| {
        counts.add(&pair);
        Ok(())
    })?;
    Vocabulary::from_counts(counts.en, counts.fg, min_count)
}

impl Vocabulary {
    /// See [`build_vocabulary`].
    pub fn build<S: PairSource + ?Sized>(source: &S, min_count: u64) -> Result<Self> {
        build_vocabulary(source, min_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(en: &str, fg: &str, lang: &str) -> AlignedSentencePair {
        let en: Vec<String> = en.split_whitespace().map(String::from).collect();
        let fg: Vec<String> = fg.split_whitespace().map(String::from).collect();
        AlignedSentencePair::new(en, fg, lang, &[]).unwrap().0
    }

    #[test]
    fn min_count_threshold() {
        let vocab = Vocabulary::from_counts(
            [("the".to_string(), 10), ("zyx".to_string(), 1)],
            std::iter::empty(),
            5,
        )
        .unwrap();
        assert_eq!(vocab.en_len(), 1);
        assert_eq!(vocab.en_id("the"), Some(0));
        assert_eq!(vocab.en_id("zyx"), None);
        assert_eq!(vocab.n_e(), 10);
    }

    #[test]
    fn languages_do_not_collide() {
        let pairs = vec![pair("bread", "pain", "fr"), pair("pain", "pan", "es"), pair("pain", "pain", "fr")];
        let vocab = build_vocabulary(&pairs, 1).unwrap();
        assert!(vocab.en_id("pain").is_some());
        let fr = vocab.fg_id("pain", "fr").unwrap();
        assert_eq!(vocab.fg_count(fr), 2);
        assert_eq!(vocab.fg_word(fr), ("pain", "fr"));
        assert!(vocab.fg_id("pain", "es").is_none());
        assert!(vocab.fg_id("pan", "es").is_some());
        assert_eq!(vocab.fg_len(), 2);
        assert_eq!(vocab.langs().collect::<Vec<_>>(), ["es", "fr"]);
    }

    #[test]
    fn token_totals_match_sentence_lengths() {
        let pairs = vec![pair("a b c", "x y", "fr"), pair("a b", "x", "fr"), pair("c a b c", "y y y", "fr")];
        let vocab = build_vocabulary(&pairs, 1).unwrap();
        assert_eq!(vocab.n_e(), 9);
        assert_eq!(vocab.n_f(), 6);
        assert_eq!(vocab.en_counts().iter().sum::<u64>(), vocab.n_e());
    }

    #[test]
    fn ids_are_dense_and_count_ordered() {
        let pairs = vec![pair("b a a c c c", "", "fr")];
        let vocab = build_vocabulary(&pairs, 1).unwrap();
        let words: Vec<_> = (0..vocab.en_len() as u32).map(|id| vocab.en_word(id)).collect();
        assert_eq!(words, ["c", "a", "b"]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let pairs: Vec<AlignedSentencePair> = Vec::new();
        assert!(matches!(build_vocabulary(&pairs, 1), Err(Error::EmptyCorpus)));
        let pairs = vec![pair("rare", "", "fr")];
        assert!(matches!(build_vocabulary(&pairs, 5), Err(Error::EmptyCorpus)));
    }
}
