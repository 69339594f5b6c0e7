use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{write_wsi_tsv, WsiInstance};
use crate::corpus::{AlignedSentencePair, CorpusSpec};
use crate::error::{Error, Result};

/// An English word with planted senses; `topics[s]` is the vocabulary that
/// surrounds sense `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedWord {
    pub word: String,
    pub topics: Vec<Vec<String>>,
}

impl PlantedWord {
    /// `senses` topics of `topic_size` words each, named `{word}{s}t{i}`.
    pub fn new(word: &str, senses: usize, topic_size: usize) -> Self {
        PlantedWord {
            word: word.to_string(),
            topics: (0..senses)
                .map(|s| (0..topic_size).map(|i| format!("{word}{s}t{i}")).collect())
                .collect(),
        }
    }

    pub fn senses(&self) -> usize {
        self.topics.len()
    }
}

/// A foreign language of the synthetic suite. When `merge` is set, every
/// sense of a planted word translates to the same foreign word.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthLanguage {
    pub lang: String,
    pub merge: bool,
}

/// Parameters of the synthetic parallel corpus.
///
/// Each pair carries one planted word in a uniformly chosen sense; the other
/// English positions hold a topic word of that sense with probability
/// `topic_rate`, otherwise a Zipf-distributed filler word shared by all
/// senses. The foreign sentence is a word-by-word translation with exact
/// monotone alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub planted: Vec<PlantedWord>,
    pub languages: Vec<SynthLanguage>,
    /// Sentence pairs per language.
    pub pairs: usize,
    pub sentence_len: usize,
    pub topic_rate: f64,
    pub filler_vocab: usize,
    /// Held-out instances per planted word. Their contexts are drawn like
    /// training sentences but always contain at least one topic word.
    pub heldout: usize,
    /// Context words per held-out instance.
    pub heldout_context: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            planted: vec![PlantedWord::new("bank", 2, 40)],
            languages: vec![
                SynthLanguage {
                    lang: "f1".into(),
                    merge: true,
                },
                SynthLanguage {
                    lang: "f2".into(),
                    merge: false,
                },
            ],
            pairs: 20_000,
            sentence_len: 9,
            topic_rate: 0.3,
            filler_vocab: 200,
            heldout: 200,
            heldout_context: 8,
            seed: 1,
        }
    }
}

impl SynthSpec {
    /// The default suite restricted to the given languages, with merge flags.
    pub fn with_languages(langs: &[(&str, bool)]) -> Self {
        SynthSpec {
            languages: langs
                .iter()
                .map(|&(lang, merge)| SynthLanguage {
                    lang: lang.to_string(),
                    merge,
                })
                .collect(),
            ..SynthSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("synthetic spec: {msg}")));
        if self.planted.is_empty() {
            return bad("no planted words");
        }
        if self.planted.iter().any(|p| p.topics.is_empty() || p.topics.iter().any(Vec::is_empty)) {
            return bad("every sense needs a non-empty topic vocabulary");
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.planted {
            if !seen.insert(p.word.as_str()) {
                return bad("planted word listed twice");
            }
        }
        for p in &self.planted {
            for t in p.topics.iter().flatten() {
                if !seen.insert(t.as_str()) {
                    return bad("topic vocabularies must be disjoint from each other and from planted words");
                }
            }
        }
        if self.sentence_len < 2 || self.heldout_context < 1 {
            return bad("sentences need room for context");
        }
        if !(0.0..=1.0).contains(&self.topic_rate) {
            return bad("topic_rate must lie in [0, 1]");
        }
        if self.topic_rate < 1.0 && self.filler_vocab == 0 {
            return bad("filler vocabulary is empty");
        }
        if self.languages.iter().any(|l| l.lang == crate::corpus::ENGLISH || l.lang.is_empty()) {
            return bad("foreign language tags must be non-empty and not \"en\"");
        }
        Ok(())
    }

    /// Foreign word for sense `sense` of planted word `p` in language `lang`.
    pub fn lexicalization(&self, lang: &SynthLanguage, p: usize, sense: usize) -> String {
        let word = &self.planted[p].word;
        if lang.merge {
            format!("{word}_{}", lang.lang)
        } else {
            format!("{word}{sense}_{}", lang.lang)
        }
    }

    /// Foreign translation of a non-planted English word.
    pub fn translate(word: &str, lang: &str) -> String {
        format!("{word}_{lang}")
    }
}

/// Generated corpora and held-out evaluation data.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    /// `(lang, pairs)` in the order of `SynthSpec::languages`.
    pub corpora: Vec<(String, Vec<AlignedSentencePair>)>,
    /// Gold sense of the planted word in each pair, parallel to `corpora`.
    pub gold: Vec<Vec<(usize, usize)>>,
    pub instances: Vec<WsiInstance>,
}

impl SynthCorpus {
    pub fn pairs(&self, lang: &str) -> Option<&[AlignedSentencePair]> {
        self.corpora.iter().find(|c| c.0 == lang).map(|c| c.1.as_slice())
    }

    /// Concatenation of the named languages' corpora, in the given order.
    pub fn combined(&self, langs: &[&str]) -> Vec<AlignedSentencePair> {
        langs
            .iter()
            .filter_map(|l| self.pairs(l))
            .flat_map(|p| p.iter().cloned())
            .collect()
    }

    /// Writes `{lang}.en`, `{lang}.{lang}`, `{lang}.align` per language and
    /// `wsi.tsv`, returning a corpus spec per language.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<Vec<CorpusSpec>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut specs = Vec::new();
        for (lang, pairs) in &self.corpora {
            let spec = CorpusSpec {
                en: dir.join(format!("{lang}.en")),
                fg: dir.join(format!("{lang}.{lang}")),
                align: dir.join(format!("{lang}.align")),
                lang: lang.clone(),
            };
            let create = |p: &Path| -> Result<BufWriter<fs::File>> {
                Ok(BufWriter::new(fs::File::create(p).map_err(|e| Error::io(p, e))?))
            };
            let (mut en, mut fg, mut al) = (create(&spec.en)?, create(&spec.fg)?, create(&spec.align)?);
            for pair in pairs {
                writeln!(en, "{}", pair.en.join(" ")).map_err(|e| Error::io(&spec.en, e))?;
                writeln!(fg, "{}", pair.fg.join(" ")).map_err(|e| Error::io(&spec.fg, e))?;
                let links: Vec<String> = pair.links().iter().map(|(i, j)| format!("{i}-{j}")).collect();
                writeln!(al, "{}", links.join(" ")).map_err(|e| Error::io(&spec.align, e))?;
            }
            for (w, path) in [(en, &spec.en), (fg, &spec.fg), (al, &spec.align)] {
                w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
            }
            specs.push(spec);
        }
        let path = dir.join("wsi.tsv");
        let mut out = BufWriter::new(fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
        write_wsi_tsv(&self.instances, &mut out).map_err(|e| Error::io(&path, e))?;
        out.flush().map_err(|e| Error::io(&path, e))?;
        Ok(specs)
    }
}

struct Sampler<'a> {
    spec: &'a SynthSpec,
    filler: Vec<String>,
    zipf: Option<WeightedIndex<f64>>,
}

impl Sampler<'_> {
    /// An English sentence of `len` words with planted word `p` in sense `s`,
    /// plus the planted position.
    fn sentence<R: Rng>(&self, rng: &mut R, p: usize, s: usize, len: usize) -> (Vec<String>, usize) {
        let planted = &self.spec.planted[p];
        let at = rng.gen_range(0..len);
        let words = (0..len)
            .map(|i| {
                if i == at {
                    planted.word.clone()
                } else if rng.gen::<f64>() < self.spec.topic_rate || self.zipf.is_none() {
                    let topic = &planted.topics[s];
                    topic[rng.gen_range(0..topic.len())].clone()
                } else {
                    self.filler[self.zipf.as_ref().unwrap().sample(rng)].clone()
                }
            })
            .collect();
        (words, at)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates the corpora and held-out instances described by `spec`.
/// Output depends only on `spec`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let sampler = Sampler {
        spec,
        filler: (0..spec.filler_vocab).map(|i| format!("w{i}")).collect(),
        zipf: (spec.filler_vocab > 0)
            .then(|| WeightedIndex::new((0..spec.filler_vocab).map(|i| 1.0 / (i as f64 + 1.0))).unwrap()),
    };
    let mut corpora = Vec::new();
    let mut gold = Vec::new();
    for (l, lang) in spec.languages.iter().enumerate() {
        let mut rng = stream_rng(spec.seed, l as u64 + 1);
        let mut pairs = Vec::with_capacity(spec.pairs);
        let mut labels = Vec::with_capacity(spec.pairs);
        for _ in 0..spec.pairs {
            let p = rng.gen_range(0..spec.planted.len());
            let s = rng.gen_range(0..spec.planted[p].senses());
            let (en, at) = sampler.sentence(&mut rng, p, s, spec.sentence_len);
            let fg: Vec<String> = en
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    if i == at {
                        spec.lexicalization(lang, p, s)
                    } else {
                        SynthSpec::translate(w, &lang.lang)
                    }
                })
                .collect();
            let links: Vec<(usize, usize)> = (0..en.len()).map(|i| (i, i)).collect();
            pairs.push(AlignedSentencePair::new(en, fg, &lang.lang, &links)?.0);
            labels.push((p, s));
        }
        corpora.push((lang.lang.clone(), pairs));
        gold.push(labels);
    }
    let mut rng = stream_rng(spec.seed, 0);
    let mut instances = Vec::new();
    for (p, planted) in spec.planted.iter().enumerate() {
        for _ in 0..spec.heldout {
            let s = rng.gen_range(0..planted.senses());
            // a context without any topic word carries no evidence about the sense; draw again
            let words = loop {
                let (mut words, at) = sampler.sentence(&mut rng, p, s, spec.heldout_context + 1);
                words.remove(at);
                if spec.topic_rate == 0.0 || words.iter().any(|w| planted.topics[s].contains(w)) {
                    break words;
                }
            };
            instances.push(WsiInstance {
                target: planted.word.clone(),
                context: words,
                gold: s.to_string(),
            });
        }
    }
    Ok(SynthCorpus {
        corpora,
        gold,
        instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{collect_pairs, Manifest};

    fn small() -> SynthSpec {
        SynthSpec {
            pairs: 500,
            heldout: 20,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn merged_language_shares_one_word() {
        let spec = small();
        let corpus = generate_synthetic(&spec).unwrap();
        for (l, (lang, pairs)) in corpus.corpora.iter().enumerate() {
            let mut forms = std::collections::BTreeSet::new();
            for (pair, &(_, s)) in pairs.iter().zip(&corpus.gold[l]) {
                let i = pair.en.iter().position(|w| w == "bank").unwrap();
                let j = pair.a_ef[i].unwrap();
                assert_eq!(pair.fg[j], spec.lexicalization(&spec.languages[l], 0, s));
                forms.insert(pair.fg[j].clone());
            }
            let expected = if lang == "f1" { 1 } else { 2 };
            assert_eq!(forms.len(), expected, "{lang}: {forms:?}");
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_synthetic(&small()).unwrap().write_to(a.path()).unwrap();
        generate_synthetic(&small()).unwrap().write_to(b.path()).unwrap();
        for name in ["f1.en", "f1.f1", "f1.align", "f2.en", "f2.f2", "f2.align", "wsi.tsv"] {
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap(),
                "{name}"
            );
        }
        let other = generate_synthetic(&SynthSpec { seed: 2, ..small() }).unwrap();
        assert_ne!(other, generate_synthetic(&small()).unwrap());
    }

    #[test]
    fn written_files_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = generate_synthetic(&small()).unwrap();
        let specs = corpus.write_to(dir.path()).unwrap();
        let back = collect_pairs(&Manifest::new(specs)).unwrap();
        assert_eq!(back, corpus.combined(&["f1", "f2"]));
        let wsi = super::super::read_wsi_tsv(dir.path().join("wsi.tsv")).unwrap();
        assert_eq!(wsi, corpus.instances);
    }

    #[test]
    fn heldout_instances_have_requested_shape() {
        let corpus = generate_synthetic(&small()).unwrap();
        assert_eq!(corpus.instances.len(), 20);
        for inst in &corpus.instances {
            assert_eq!(inst.target, "bank");
            assert_eq!(inst.context.len(), 8);
            assert!(inst.gold == "0" || inst.gold == "1");
            let s: usize = inst.gold.parse().unwrap();
            // topical words come from the gold sense, and there is at least one
            let topical: Vec<_> = inst.context.iter().filter(|w| w.starts_with("bank")).collect();
            assert!(!topical.is_empty());
            for w in topical {
                assert!(w.starts_with(&format!("bank{s}t")));
            }
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = small();
        spec.planted[0].topics[1] = spec.planted[0].topics[0].clone();
        assert!(generate_synthetic(&spec).is_err());
        let spec = SynthSpec {
            topic_rate: 1.5,
            ..small()
        };
        assert!(generate_synthetic(&spec).is_err());
        let spec = SynthSpec::with_languages(&[("en", false)]);
        assert!(generate_synthetic(&spec).is_err());
    }
}
