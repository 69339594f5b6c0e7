//! Word-sense-induction scoring, rank correlation for contextual similarity,
//! and a synthetic parallel-corpus generator with gold senses.

mod synth;

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub use synth::{generate_synthetic, PlantedWord, SynthCorpus, SynthLanguage, SynthSpec};

use crate::disambig::{disambiguate, similarity_from_posteriors, SimilarityMode};
use crate::error::{Error, Result};
use crate::model::SenseModel;

fn choose2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand Index between two labelings of the same items.
///
/// Two trivial identical partitions (all singletons, or a single cluster)
/// score 1.0.
pub fn adjusted_rand_index<A: Hash + Eq, B: Hash + Eq>(pred: &[A], gold: &[B]) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::Data(format!(
            "label lengths differ: {} predicted, {} gold",
            pred.len(),
            gold.len()
        )));
    }
    let n = pred.len();
    if n < 2 {
        return Err(Error::Data("need at least two items".into()));
    }
    let mut cells: HashMap<(&A, &B), usize> = HashMap::new();
    let mut rows: HashMap<&A, usize> = HashMap::new();
    let mut cols: HashMap<&B, usize> = HashMap::new();
    for (a, b) in pred.iter().zip(gold) {
        *cells.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let index: f64 = cells.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let expected = sum_a * sum_b / choose2(n);
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation, ties given their average rank.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Data(format!("lengths differ: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::Data("need at least three pairs".into()));
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Data("rank correlation is undefined for constant input".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// One usage of a target word with its gold sense cluster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WsiInstance {
    pub target: String,
    pub context: Vec<String>,
    pub gold: String,
}

/// Scores of a WSI run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WsiReport {
    /// `(target, ARI, instances)` for every scored target, sorted by target.
    pub per_word: Vec<(String, f64, usize)>,
    /// Macro average of the per-word ARIs.
    pub average: f64,
    /// ARI over all instances at once, clusters keyed by (target, sense).
    pub pooled: f64,
    /// Targets missing from the vocabulary.
    pub oov: Vec<String>,
    /// Targets with fewer than two instances.
    pub too_small: Vec<String>,
}

/// Assigns each instance its most probable sense and scores the induced
/// clusters against gold.
pub fn wsi_evaluate(model: &SenseModel, instances: &[WsiInstance]) -> Result<WsiReport> {
    let mut by_target: BTreeMap<&str, Vec<(usize, &str)>> = BTreeMap::new();
    let mut oov = Vec::new();
    for inst in instances {
        match disambiguate(model, &inst.target, &inst.context) {
            Ok(z) => by_target.entry(&inst.target).or_default().push((z.argmax(), &inst.gold)),
            Err(Error::UnknownWord(_)) => {
                if !oov.contains(&inst.target) {
                    oov.push(inst.target.clone());
                }
            }
            Err(e) => return Err(e),
        }
    }
    oov.sort();
    let mut report = WsiReport {
        oov,
        ..WsiReport::default()
    };
    let mut pooled_pred = Vec::new();
    let mut pooled_gold = Vec::new();
    for (target, labels) in by_target {
        if labels.len() < 2 {
            report.too_small.push(target.to_string());
            continue;
        }
        let pred: Vec<usize> = labels.iter().map(|l| l.0).collect();
        let gold: Vec<&str> = labels.iter().map(|l| l.1).collect();
        report
            .per_word
            .push((target.to_string(), adjusted_rand_index(&pred, &gold)?, labels.len()));
        pooled_pred.extend(pred.iter().map(|&p| (target, p)));
        pooled_gold.extend(gold.iter().map(|&g| (target, g)));
    }
    if report.per_word.is_empty() {
        return Err(Error::Data("no target word has two or more scorable instances".into()));
    }
    report.average = report.per_word.iter().map(|w| w.1).sum::<f64>() / report.per_word.len() as f64;
    report.pooled = adjusted_rand_index(&pooled_pred, &pooled_gold)?;
    Ok(report)
}

fn read_lines(path: &Path) -> Result<impl Iterator<Item = (usize, Result<String>)> + '_> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(move |(i, l)| (i + 1, l.map_err(|e| Error::io(path, e)))))
}

/// Parses one `target \t gold \t context...` line.
pub fn parse_wsi_line(line: &str) -> Result<WsiInstance> {
    let mut fields = line.splitn(3, '\t');
    let target = fields.next().unwrap_or("").trim();
    let gold = fields.next().map(str::trim).unwrap_or("");
    let context: Vec<String> = fields.next().unwrap_or("").split_whitespace().map(String::from).collect();
    if target.is_empty() || gold.is_empty() {
        return Err(Error::Data("expected target \\t gold \\t context".into()));
    }
    if context.is_empty() {
        return Err(Error::Data("empty context".into()));
    }
    Ok(WsiInstance {
        target: target.to_string(),
        context,
        gold: gold.to_string(),
    })
}

/// Reads a WSI dataset, one instance per non-blank line.
pub fn read_wsi_tsv(path: impl AsRef<Path>) -> Result<Vec<WsiInstance>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (lineno, line) in read_lines(path)? {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_wsi_line(&line).map_err(|e| Error::at_line(path, lineno, e))?);
    }
    Ok(out)
}

pub fn write_wsi_tsv<W: Write>(instances: &[WsiInstance], mut out: W) -> std::io::Result<()> {
    for inst in instances {
        writeln!(out, "{}\t{}\t{}", inst.target, inst.gold, inst.context.join(" "))?;
    }
    Ok(())
}

/// A human-rated pair of words, each in its own context.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityItem {
    pub w1: String,
    pub ctx1: Vec<String>,
    pub w2: String,
    pub ctx2: Vec<String>,
    pub score: f64,
}

/// Parses one `w1 \t ctx1... \t w2 \t ctx2... \t score` line.
pub fn parse_similarity_line(line: &str) -> Result<SimilarityItem> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(Error::Data(format!("expected 5 tab-separated fields, found {}", fields.len())));
    }
    let words = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    let score = fields[4]
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Data(format!("bad score {:?}", fields[4])))?;
    Ok(SimilarityItem {
        w1: fields[0].trim().to_string(),
        ctx1: words(fields[1]),
        w2: fields[2].trim().to_string(),
        ctx2: words(fields[3]),
        score,
    })
}

pub fn read_similarity_tsv(path: impl AsRef<Path>) -> Result<Vec<SimilarityItem>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (lineno, line) in read_lines(path)? {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_similarity_line(&line).map_err(|e| Error::at_line(path, lineno, e))?);
    }
    Ok(out)
}

/// Result of a contextual-similarity evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct SimEvalReport {
    pub spearman: f64,
    pub scored: usize,
    /// Items skipped because a word is out of vocabulary.
    pub skipped: usize,
}

/// Spearman correlation between model similarities and human scores.
pub fn simeval(model: &SenseModel, items: &[SimilarityItem], mode: SimilarityMode) -> Result<SimEvalReport> {
    let mut predicted = Vec::new();
    let mut human = Vec::new();
    for item in items {
        let (Some(w1), Some(w2)) = (model.vocab.en_id(&item.w1), model.vocab.en_id(&item.w2)) else {
            continue;
        };
        let z1 = disambiguate(model, &item.w1, &item.ctx1)?;
        let z2 = disambiguate(model, &item.w2, &item.ctx2)?;
        predicted.push(similarity_from_posteriors(model, w1, &z1, w2, &z2, mode));
        human.push(item.score);
    }
    Ok(SimEvalReport {
        spearman: spearman(&predicted, &human)?,
        scored: predicted.len(),
        skipped: items.len() - predicted.len(),
    })
}
