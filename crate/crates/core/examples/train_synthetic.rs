//! Plant a two-sense word in a synthetic English-foreign corpus, train on it,
//! and check that the induced senses match the planted ones.
//!
//!     cargo run --release --example train_synthetic

use polysense::eval::{generate_synthetic, wsi_evaluate, SynthSpec};
use polysense::inference::Trainer;
use polysense::{TrainConfig, Variant};

fn main() -> polysense::Result<()> {
    let spec = SynthSpec {
        pairs: 4000,
        ..SynthSpec::with_languages(&[("f2", false)])
    };
    let corpus = generate_synthetic(&spec)?;
    let pairs = corpus.combined(&["f2"]);
    println!("{} sentence pairs, e.g.\n  {}\n  {}", pairs.len(), pairs[0].en.join(" "), pairs[0].fg.join(" "));

    let config = TrainConfig {
        dim: 50,
        epochs: 3,
        variant: Variant::Full,
        ..TrainConfig::default()
    };
    println!("{}", config.summary());
    let model = Trainer::new(&pairs, config)?.verbose(true).run()?;

    let bank = model.en_id("bank")?;
    let prior = model.expected_sense_prior(bank);
    println!("bank: active senses {:?}", model.active_senses(bank));
    for k in model.active_senses(bank) {
        println!("  sense {k}: prior {:.3}", prior[k]);
    }
    let report = wsi_evaluate(&model, &corpus.instances)?;
    println!("held-out ARI {:.3} over {} instances", report.average, corpus.instances.len());
    println!("active-sense histogram {:?}", model.active_sense_histogram());
    Ok(())
}
