//! Parallel corpus ingestion: sentence pairs, word alignments, vocabularies,
//! context windows and negative-sampling noise tables.

mod noise;
mod vocab;

pub use noise::NoiseTable;
pub use vocab::{build_vocabulary, Vocabulary};

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Language tag of the (single) polysemous side.
pub const ENGLISH: &str = "en";

/// A word together with the language it belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    pub surface: String,
    pub lang: String,
}

impl Token {
    pub fn new(surface: impl Into<String>, lang: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            lang: lang.into(),
        }
    }

    pub fn en(surface: impl Into<String>) -> Self {
        Token::new(surface, ENGLISH)
    }

    pub fn is_english(&self) -> bool {
        self.lang == ENGLISH
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.surface, self.lang)
    }
}

/// One English sentence, its translation and the word alignment between them.
///
/// `a_ef[i]` is the foreign position aligned to English position `i`, and
/// `a_fe[j]` the English position aligned to foreign position `j`. Both are
/// functions; `a_fe` is the inverse of `a_ef` with colliding links dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignedSentencePair {
    pub en: Vec<String>,
    pub fg: Vec<String>,
    pub lang: String,
    pub a_ef: Vec<Option<usize>>,
    pub a_fe: Vec<Option<usize>>,
}

impl AlignedSentencePair {
    /// Builds a pair from `(english, foreign)` index links.
    ///
    /// Returns the pair and the number of links dropped because they would
    /// make either direction a non-function (first link wins). The reverse
    /// map drops collisions without pruning the forward map.
    pub fn new(
        en: Vec<String>,
        fg: Vec<String>,
        lang: impl Into<String>,
        links: &[(usize, usize)],
    ) -> Result<(Self, usize)> {
        let mut a_ef = vec![None; en.len()];
        let mut a_fe = vec![None; fg.len()];
        let mut collisions = 0;
        for &(i, j) in links {
            if i >= en.len() || j >= fg.len() {
                return Err(Error::AlignmentOutOfBounds {
                    en: i,
                    fg: j,
                    en_len: en.len(),
                    fg_len: fg.len(),
                });
            }
        }
        for &(i, j) in links {
            if a_ef[i].is_some() {
                collisions += 1;
                continue;
            }
            a_ef[i] = Some(j);
        }
        // invert the forward map in link order
        for &(i, j) in links {
            if a_ef[i] != Some(j) {
                continue;
            }
            match a_fe[j] {
                None => a_fe[j] = Some(i),
                Some(prev) if prev == i => {}
                Some(_) => collisions += 1,
            }
        }
        let pair = AlignedSentencePair {
            en,
            fg,
            lang: lang.into(),
            a_ef,
            a_fe,
        };
        Ok((pair, collisions))
    }

    /// An English-only pair with no foreign side.
    pub fn monolingual(en: Vec<String>) -> Self {
        let n = en.len();
        AlignedSentencePair {
            en,
            fg: Vec::new(),
            lang: String::new(),
            a_ef: vec![None; n],
            a_fe: Vec::new(),
        }
    }

    pub fn en_token(&self, i: usize) -> Token {
        Token::en(self.en[i].clone())
    }

    pub fn fg_token(&self, j: usize) -> Token {
        Token::new(self.fg[j].clone(), self.lang.clone())
    }

    /// Alignment links as `(english, foreign)` pairs in English order.
    pub fn links(&self) -> Vec<(usize, usize)> {
        self.a_ef
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
            .collect()
    }
}

/// Parses one line of `i-j` alignment links.
pub fn parse_alignment_line(line: &str) -> Result<Vec<(usize, usize)>> {
    line.split_whitespace()
        .map(|token| {
            let malformed = || Error::MalformedAlignment {
                line: line.to_string(),
                token: token.to_string(),
            };
            let (src, tgt) = token.split_once('-').ok_or_else(malformed)?;
            let src = src.parse::<usize>().map_err(|_| malformed())?;
            let tgt = tgt.parse::<usize>().map_err(|_| malformed())?;
            Ok((src, tgt))
        })
        .collect()
}

/// Tokens within `d` positions of `i` on either side, excluding `i` itself.
pub fn neighborhood<T: Clone>(sentence: &[T], i: usize, d: usize) -> Vec<T> {
    neighbor_positions(sentence.len(), i, d)
        .map(|p| sentence[p].clone())
        .collect()
}

/// Positions within `d` of `i` in a sentence of length `len`, excluding `i`.
pub fn neighbor_positions(len: usize, i: usize, d: usize) -> impl Iterator<Item = usize> {
    debug_assert!(i < len);
    let lo = i.saturating_sub(d);
    let hi = (i + d).min(len.saturating_sub(1));
    (lo..=hi).filter(move |&p| p != i)
}

/// What to do with a sentence pair whose alignment line is unusable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OnBadLine {
    /// Drop the pair and count it.
    #[default]
    Skip,
    /// Stop reading with an error.
    Abort,
}

/// File locations of one English-foreign parallel corpus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusSpec {
    pub en: PathBuf,
    pub fg: PathBuf,
    pub align: PathBuf,
    pub lang: String,
}

impl FromStr for CorpusSpec {
    type Err = Error;

    /// Parses `en.txt,fg.txt,align.txt,LANG`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 || parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!(
                "corpus must be given as en.txt,fg.txt,align.txt,LANG; got {s:?}"
            )));
        }
        if parts[3] == ENGLISH {
            return Err(Error::Config(format!(
                "foreign language tag may not be {ENGLISH:?}"
            )));
        }
        Ok(CorpusSpec {
            en: parts[0].into(),
            fg: parts[1].into(),
            align: parts[2].into(),
            lang: parts[3].to_string(),
        })
    }
}

/// Counts gathered while reading a corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReadStats {
    pub pairs: usize,
    pub rejected: usize,
    pub collisions: usize,
}

impl ReadStats {
    fn merge(&mut self, other: ReadStats) {
        self.pairs += other.pairs;
        self.rejected += other.rejected;
        self.collisions += other.collisions;
    }
}

/// Streaming reader over the three line-aligned files of one corpus.
pub struct ParallelReader {
    spec: CorpusSpec,
    en: Lines<BufReader<File>>,
    fg: Option<Lines<BufReader<File>>>,
    align: Option<Lines<BufReader<File>>>,
    policy: OnBadLine,
    line: usize,
    stats: ReadStats,
    done: bool,
}

fn open_lines(path: &Path) -> Result<Lines<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file).lines())
}

/// Opens a parallel corpus for streaming.
pub fn load_parallel_corpus(spec: &CorpusSpec, policy: OnBadLine) -> Result<ParallelReader> {
    ParallelReader::open(spec, policy, false)
}

impl ParallelReader {
    /// With `english_only` the foreign and alignment files are never opened.
    pub fn open(spec: &CorpusSpec, policy: OnBadLine, english_only: bool) -> Result<Self> {
        let en = open_lines(&spec.en)?;
        let (fg, align) = if english_only {
            (None, None)
        } else {
            (Some(open_lines(&spec.fg)?), Some(open_lines(&spec.align)?))
        };
        Ok(ParallelReader {
            spec: spec.clone(),
            en,
            fg,
            align,
            policy,
            line: 0,
            stats: ReadStats::default(),
            done: false,
        })
    }

    pub fn stats(&self) -> ReadStats {
        self.stats
    }

    fn next_line(
        lines: &mut Lines<BufReader<File>>,
        path: &Path,
    ) -> Option<Result<String>> {
        lines.next().map(|l| l.map_err(|e| Error::io(path, e)))
    }

    fn mismatch(&mut self, detail: String) -> Option<Result<AlignedSentencePair>> {
        self.done = true;
        Some(Err(Error::LineCountMismatch {
            lang: self.spec.lang.clone(),
            detail,
        }))
    }
}

fn tokenize(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_string).collect()
}

impl Iterator for ParallelReader {
    type Item = Result<AlignedSentencePair>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.done {
                return None;
            }
            let en = Self::next_line(&mut self.en, &self.spec.en);
            let (fg, align) = match (&mut self.fg, &mut self.align) {
                (Some(fg), Some(align)) => (
                    Self::next_line(fg, &self.spec.fg),
                    Self::next_line(align, &self.spec.align),
                ),
                _ => {
                    // english-only stream
                    return match en {
                        None => {
                            self.done = true;
                            None
                        }
                        Some(Err(e)) => {
                            self.done = true;
                            Some(Err(e))
                        }
                        Some(Ok(line)) => {
                            self.line += 1;
                            self.stats.pairs += 1;
                            Some(Ok(AlignedSentencePair::monolingual(tokenize(&line))))
                        }
                    };
                }
            };
            let (en, fg, align) = match (en, fg, align) {
                (None, None, None) => {
                    self.done = true;
                    return None;
                }
                (Some(en), Some(fg), Some(align)) => (en, fg, align),
                (en, fg, align) => {
                    let ended: Vec<&str> = [("en", en.is_none()), ("fg", fg.is_none()), ("align", align.is_none())]
                        .iter()
                        .filter(|(_, ended)| *ended)
                        .map(|(name, _)| *name)
                        .collect();
                    let detail = format!(
                        "{} ended after {} lines while the others continue",
                        ended.join("/"),
                        self.line
                    );
                    return self.mismatch(detail);
                }
            };
            self.line += 1;
            let parsed = en.and_then(|en| {
                let fg = fg?;
                let align = align?;
                let links = parse_alignment_line(&align)?;
                AlignedSentencePair::new(tokenize(&en), tokenize(&fg), self.spec.lang.clone(), &links)
            });
            match parsed {
                Ok((pair, collisions)) => {
                    self.stats.pairs += 1;
                    self.stats.collisions += collisions;
                    return Some(Ok(pair));
                }
                Err(e @ Error::Io { .. }) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Err(e) => match self.policy {
                    OnBadLine::Skip => {
                        self.stats.rejected += 1;
                        continue;
                    }
                    OnBadLine::Abort => {
                        self.done = true;
                        return Some(Err(Error::at_line(&self.spec.align, self.line, e)));
                    }
                },
            }
        }
    }
}

/// A re-iterable collection of sentence pairs.
///
/// Training makes one pass per epoch, so sources must yield the same pairs
/// in the same order every time.
pub trait PairSource {
    /// Visits every pair in order.
    fn for_each_pair(&self, f: &mut dyn FnMut(AlignedSentencePair) -> Result<()>) -> Result<ReadStats>;
}

impl PairSource for [AlignedSentencePair] {
    fn for_each_pair(&self, f: &mut dyn FnMut(AlignedSentencePair) -> Result<()>) -> Result<ReadStats> {
        for pair in self {
            f(pair.clone())?;
        }
        Ok(ReadStats {
            pairs: self.len(),
            ..ReadStats::default()
        })
    }
}

impl PairSource for Vec<AlignedSentencePair> {
    fn for_each_pair(&self, f: &mut dyn FnMut(AlignedSentencePair) -> Result<()>) -> Result<ReadStats> {
        self.as_slice().for_each_pair(f)
    }
}

/// Several parallel corpora read back to back, forming one multilingual stream.
#[derive(Clone, Debug, Default)]
pub struct Manifest {
    pub corpora: Vec<CorpusSpec>,
    pub on_bad_line: OnBadLine,
    /// Read only the English files (monolingual training).
    pub english_only: bool,
}

impl Manifest {
    pub fn new(corpora: Vec<CorpusSpec>) -> Self {
        Manifest {
            corpora,
            ..Manifest::default()
        }
    }

    pub fn langs(&self) -> Vec<String> {
        let mut langs: Vec<String> = self.corpora.iter().map(|c| c.lang.clone()).collect();
        langs.dedup();
        langs
    }
}

impl PairSource for Manifest {
    fn for_each_pair(&self, f: &mut dyn FnMut(AlignedSentencePair) -> Result<()>) -> Result<ReadStats> {
        let mut total = ReadStats::default();
        for spec in &self.corpora {
            let mut reader = ParallelReader::open(spec, self.on_bad_line, self.english_only)?;
            for pair in reader.by_ref() {
                f(pair?)?;
            }
            total.merge(reader.stats());
        }
        Ok(total)
    }
}

/// Reads every pair of a source into memory.
pub fn collect_pairs<S: PairSource + ?Sized>(source: &S) -> Result<Vec<AlignedSentencePair>> {
    let mut pairs = Vec::new();
    source.for_each_pair(&mut |pair| {
        pairs.push(pair);
        Ok(())
    })?;
    Ok(pairs)
}
