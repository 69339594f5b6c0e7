//! Contextual word similarity: compare two words, each in its own context,
//! and correlate the model's scores with reference judgements.
//!
//!     cargo run --release --example similarity

use polysense::disambig::{contextual_similarity, SimilarityMode};
use polysense::eval::{generate_synthetic, simeval, SimilarityItem, SynthSpec};
use polysense::inference::train;
use polysense::TrainConfig;

fn main() -> polysense::Result<()> {
    let spec = SynthSpec {
        pairs: 4000,
        ..SynthSpec::with_languages(&[("f2", false)])
    };
    let corpus = generate_synthetic(&spec)?;
    let model = train(
        &corpus.combined(&["f2"]),
        TrainConfig {
            dim: 50,
            epochs: 3,
            ..TrainConfig::default()
        },
    )?;

    let topics = &spec.planted[0].topics;
    let ctx = |s: usize, from: usize| -> Vec<String> { topics[s][from..from + 3].to_vec() };
    // bank in a sense-0 context against topic words of either sense
    let mut items = Vec::new();
    for (s, score) in [(0, 9.0), (1, 1.0)] {
        for i in 0..5 {
            items.push(SimilarityItem {
                w1: "bank".into(),
                ctx1: ctx(0, 0),
                w2: topics[s][10 + i].clone(),
                ctx2: ctx(s, 20),
                score: score + i as f64 * 0.1,
            });
        }
    }
    for mode in [SimilarityMode::Average, SimilarityMode::MaxSense] {
        let near = contextual_similarity(&model, "bank", &ctx(0, 0), &topics[0][10], &ctx(0, 20), mode)?;
        let far = contextual_similarity(&model, "bank", &ctx(0, 0), &topics[1][10], &ctx(1, 20), mode)?;
        let report = simeval(&model, &items, mode)?;
        println!("{mode:?}: same-topic {near:.3}, other-topic {far:.3}, Spearman {:.3} over {} items", report.spearman, report.scored);
    }
    Ok(())
}
