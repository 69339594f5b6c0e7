//! Test-time sense inference from monolingual context, and sense-aware
//! similarity queries over a trained model.

use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::inference::{dot, log_sigmoid};
use crate::model::{ContextWord, SenseDistribution, SenseModel};

/// Posterior over the senses of English word `w` given English context ids.
///
/// Only active senses can receive mass; the rest are exactly zero.
pub fn disambiguate_ids(model: &SenseModel, w: u32, context: &[u32]) -> SenseDistribution {
    let prior = model.expected_sense_prior(w);
    let mut active = model.active_senses(w);
    if active.is_empty() {
        active.push(prior.argmax());
    }
    let mut scores: Vec<f64> = active
        .iter()
        .map(|&k| {
            let x = model.sense_vector(w, k);
            let evidence: f64 = context
                .iter()
                .map(|&y| log_sigmoid(dot(x, model.context_vector(ContextWord::En(y)))))
                .sum();
            prior.probs()[k].ln() + evidence
        })
        .collect();
    crate::inference::renormalize_in_place(&mut scores);
    let mut probs = vec![0.0; model.max_senses()];
    for (&k, p) in active.iter().zip(scores) {
        probs[k] = p;
    }
    SenseDistribution::new(probs)
}

/// Posterior over the senses of `word` given surrounding English words.
/// Context words outside the vocabulary are ignored.
pub fn disambiguate<S: AsRef<str>>(model: &SenseModel, word: &str, context: &[S]) -> Result<SenseDistribution> {
    let w = model.en_id(word)?;
    let ids: Vec<u32> = context.iter().filter_map(|c| model.vocab.en_id(c.as_ref())).collect();
    Ok(disambiguate_ids(model, w, &ids))
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        return 0.0;
    }
    (dot(a, b) / denom).clamp(-1.0, 1.0)
}

/// How two sense posteriors are combined into one similarity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum SimilarityMode {
    /// Posterior-weighted average cosine over all sense pairs.
    #[default]
    Average,
    /// Cosine of the two most probable senses.
    MaxSense,
}

/// Similarity of senses of `w1` and `w2` weighted by the given posteriors.
pub fn similarity_from_posteriors(
    model: &SenseModel,
    w1: u32,
    z1: &SenseDistribution,
    w2: u32,
    z2: &SenseDistribution,
    mode: SimilarityMode,
) -> f64 {
    match mode {
        SimilarityMode::MaxSense => cosine(model.sense_vector(w1, z1.argmax()), model.sense_vector(w2, z2.argmax())),
        SimilarityMode::Average => {
            let mut total = 0.0;
            for (k, &p) in z1.probs().iter().enumerate().filter(|(_, &p)| p > 0.0) {
                for (l, &q) in z2.probs().iter().enumerate().filter(|(_, &q)| q > 0.0) {
                    total += p * q * cosine(model.sense_vector(w1, k), model.sense_vector(w2, l));
                }
            }
            total
        }
    }
}

/// Similarity of two words, each in its own context.
pub fn contextual_similarity<S: AsRef<str>>(
    model: &SenseModel,
    w1: &str,
    ctx1: &[S],
    w2: &str,
    ctx2: &[S],
    mode: SimilarityMode,
) -> Result<f64> {
    let z1 = disambiguate(model, w1, ctx1)?;
    let z2 = disambiguate(model, w2, ctx2)?;
    Ok(similarity_from_posteriors(model, model.en_id(w1)?, &z1, model.en_id(w2)?, &z2, mode))
}

/// A row of the embedding space: one sense of an English word or a foreign word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Neighbor {
    Sense { word: String, sense: usize },
    Foreign { word: String, lang: String },
}

impl fmt::Display for Neighbor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Neighbor::Sense { word, sense } => write!(f, "{word}#{sense}"),
            Neighbor::Foreign { word, lang } => write!(f, "{word}@{lang}"),
        }
    }
}

/// The `n` vectors closest in cosine to sense `sense` of `word`, best first.
///
/// Searches every active English sense, and foreign words when
/// `include_foreign` is set. The query itself is excluded.
pub fn nearest_neighbors(
    model: &SenseModel,
    word: &str,
    sense: usize,
    n: usize,
    include_foreign: bool,
) -> Result<Vec<(Neighbor, f64)>> {
    let w = model.en_id(word)?;
    if !model.active_senses(w).contains(&sense) {
        return Err(Error::InactiveSense {
            word: word.to_string(),
            sense,
        });
    }
    let query = model.sense_vector(w, sense);
    let mut hits: Vec<(Neighbor, f64)> = Vec::new();
    for v in 0..model.vocab.en_len() as u32 {
        for k in model.active_senses(v) {
            if (v, k) == (w, sense) {
                continue;
            }
            let neighbor = Neighbor::Sense {
                word: model.vocab.en_word(v).to_string(),
                sense: k,
            };
            hits.push((neighbor, cosine(query, model.sense_vector(v, k))));
        }
    }
    if include_foreign {
        for f in 0..model.vocab.fg_len() as u32 {
            let (word, lang) = model.vocab.fg_word(f);
            let neighbor = Neighbor::Foreign {
                word: word.to_string(),
                lang: lang.to_string(),
            };
            hits.push((neighbor, cosine(query, model.foreign_vector(f))));
        }
    }
    hits.sort_by(|a, b| b.1.total_cmp(&a.1));
    hits.truncate(n);
    Ok(hits)
}

/// Disambiguates every line `word \t context words...` of `input`, writing
/// `word \t best_sense \t p_0 \t ... \t p_{T-1}` to `output`. Returns the
/// number of lines processed.
pub fn disambiguate_batch<R: BufRead, W: Write>(model: &SenseModel, input: R, mut output: W) -> Result<usize> {
    let io = |e| Error::io("<output>", e);
    let mut done = 0;
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (word, rest) = line.split_once('\t').unwrap_or((line.as_str(), ""));
        let context: Vec<&str> = rest.split_whitespace().collect();
        let z = disambiguate(model, word.trim(), &context).map_err(|e| Error::at_line("<input>", lineno + 1, e))?;
        write!(output, "{}\t{}", word.trim(), z.argmax()).map_err(io)?;
        for p in z.probs() {
            write!(output, "\t{p:.6}").map_err(io)?;
        }
        writeln!(output).map_err(io)?;
        done += 1;
    }
    Ok(done)
}
