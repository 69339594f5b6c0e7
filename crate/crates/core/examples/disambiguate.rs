//! Sense posteriors for a planted word in different contexts, plus the
//! nearest neighbors of each of its senses.
//!
//!     cargo run --release --example disambiguate

use polysense::disambig::{disambiguate, nearest_neighbors};
use polysense::eval::{generate_synthetic, SynthSpec};
use polysense::inference::train;
use polysense::TrainConfig;

fn main() -> polysense::Result<()> {
    let spec = SynthSpec {
        pairs: 4000,
        ..SynthSpec::with_languages(&[("f2", false)])
    };
    let corpus = generate_synthetic(&spec)?;
    let config = TrainConfig {
        dim: 50,
        epochs: 3,
        ..TrainConfig::default()
    };
    let model = train(&corpus.combined(&["f2"]), config)?;

    let topics = &spec.planted[0].topics;
    for (s, topic) in topics.iter().enumerate() {
        let context: Vec<&str> = topic.iter().take(3).map(String::as_str).collect();
        let z = disambiguate(&model, "bank", &context)?;
        let shown: Vec<String> = z.probs().iter().map(|p| format!("{p:.3}")).collect();
        println!("planted sense {s}, context {context:?}\n  posterior [{}] -> sense {}", shown.join(", "), z.argmax());
    }
    let bank = model.en_id("bank")?;
    for k in model.active_senses(bank) {
        let hits = nearest_neighbors(&model, "bank", k, 5, true)?;
        let shown: Vec<String> = hits.iter().map(|(n, c)| format!("{n} {c:.2}")).collect();
        println!("bank#{k}: {}", shown.join(", "));
    }
    Ok(())
}
