//! Training foreign words against the aligned English side pulls the vector
//! spaces of different foreign languages together. Compare translation pairs
//! across two languages under the full and the one-sided objective.
//!
//!     cargo run --release --example crosslingual

use polysense::disambig::cosine;
use polysense::eval::{generate_synthetic, SynthSpec};
use polysense::inference::train;
use polysense::{SenseModel, TrainConfig, Variant};

fn translation_cosine(model: &SenseModel) -> f64 {
    let mut total = 0.0;
    let mut n = 0;
    for (word, _) in model.vocab.en_entries() {
        let a = model.vocab.fg_id(&SynthSpec::translate(word, "f1"), "f1");
        let b = model.vocab.fg_id(&SynthSpec::translate(word, "f2"), "f2");
        if let (Some(a), Some(b)) = (a, b) {
            total += cosine(model.foreign_vector(a), model.foreign_vector(b));
            n += 1;
        }
    }
    total / n.max(1) as f64
}

fn main() -> polysense::Result<()> {
    let spec = SynthSpec {
        pairs: 2000,
        ..SynthSpec::default()
    };
    let corpus = generate_synthetic(&spec)?;
    let pairs = corpus.combined(&["f1", "f2"]);
    for variant in [Variant::Full, Variant::OneSided] {
        let config = TrainConfig {
            dim: 50,
            epochs: 3,
            variant,
            ..TrainConfig::default()
        };
        let model = train(&pairs, config)?;
        println!("{variant:>9}: mean cosine of f1/f2 translation pairs {:.3}", translation_cosine(&model));
    }
    Ok(())
}
