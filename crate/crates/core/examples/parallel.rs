//! Lock-free multi-threaded training next to the deterministic single-threaded
//! run on the same data.
//!
//!     cargo run --release --example parallel -- 4

use std::time::Instant;

use polysense::eval::{generate_synthetic, wsi_evaluate, SynthSpec};
use polysense::inference::Trainer;
use polysense::TrainConfig;

fn main() -> polysense::Result<()> {
    let threads: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2);
    let spec = SynthSpec {
        pairs: 4000,
        ..SynthSpec::with_languages(&[("f2", false)])
    };
    let corpus = generate_synthetic(&spec)?;
    let pairs = corpus.combined(&["f2"]);
    let config = TrainConfig {
        dim: 50,
        epochs: 3,
        ..TrainConfig::default()
    };
    for n in [1, threads] {
        let start = Instant::now();
        let model = Trainer::new(&pairs, config.clone())?.run_parallel(n)?;
        let ari = wsi_evaluate(&model, &corpus.instances)?.average;
        println!("{n} thread(s): {:.1}s, held-out ARI {ari:.3}", start.elapsed().as_secs_f64());
    }
    Ok(())
}
