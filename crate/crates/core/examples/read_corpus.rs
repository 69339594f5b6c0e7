//! Read a word-aligned parallel corpus (one sentence per line, alignments as
//! `i-j` pairs) and show the vocabulary and the context each English token sees.
//!
//!     cargo run --example read_corpus

use std::fs;

use polysense::corpus::{build_vocabulary, load_parallel_corpus, CorpusSpec, OnBadLine};
use polysense::inference::build_english_context;
use polysense::{TrainConfig, Variant};

fn main() -> polysense::Result<()> {
    let dir = std::env::temp_dir().join(format!("polysense-read-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let spec = CorpusSpec {
        en: dir.join("en.txt"),
        fg: dir.join("fr.txt"),
        align: dir.join("align.txt"),
        lang: "fr".into(),
    };
    fs::write(&spec.en, "the bank raised interest rates\nwe sat on the bank of the river\n").unwrap();
    fs::write(&spec.fg, "la banque a relevé les taux\nnous étions assis sur la rive du fleuve\n").unwrap();
    fs::write(&spec.align, "0-0 1-1 2-3 3-5 4-5\n0-0 1-2 2-3 3-4 4-5 5-6 6-6 7-7 8-8\n").unwrap();

    let mut reader = load_parallel_corpus(&spec, OnBadLine::Skip)?;
    let pairs: Vec<_> = reader.by_ref().collect::<polysense::Result<_>>()?;
    println!("read {:?}", reader.stats());

    let vocab = build_vocabulary(&pairs, 1)?;
    println!("{} English types, {} foreign types", vocab.en_len(), vocab.fg_len());

    for variant in [Variant::Full, Variant::Mono] {
        let config = TrainConfig {
            window: 2,
            variant,
            ..TrainConfig::default()
        };
        for pair in &pairs {
            let i = pair.en.iter().position(|w| w == "bank").unwrap();
            let context: Vec<String> = build_english_context(pair, i, &config).iter().map(ToString::to_string).collect();
            println!("{variant:>5}: bank -> {}", context.join(" "));
        }
    }
    fs::remove_dir_all(&dir).ok();
    Ok(())
}
