//! Save a model after one epoch, resume it, and check the result is identical
//! to an uninterrupted run. Then export the vectors as text.
//!
//!     cargo run --release --example persistence

use polysense::eval::{generate_synthetic, SynthSpec};
use polysense::inference::Trainer;
use polysense::model::{export_text, load_model, read_text_export, save_model};
use polysense::TrainConfig;

fn main() -> polysense::Result<()> {
    let corpus = generate_synthetic(&SynthSpec {
        pairs: 1000,
        ..SynthSpec::default()
    })?;
    let pairs = corpus.combined(&["f1", "f2"]);
    let config = TrainConfig {
        dim: 20,
        epochs: 2,
        ..TrainConfig::default()
    };
    let dir = std::env::temp_dir().join(format!("polysense-persistence-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| polysense::Error::Data(e.to_string()))?;

    let straight = Trainer::new(&pairs, config.clone())?.run()?;

    let checkpoint = dir.join("epoch1.psns");
    let first = Trainer::new(&pairs, config)?.stop_after(1).run()?;
    save_model(&first, &checkpoint)?;
    println!("saved {} after epoch {}", checkpoint.display(), first.progress.epochs_done);
    let resumed = Trainer::resume(&pairs, load_model(&checkpoint)?)?.run()?;
    println!("resumed run identical to uninterrupted run: {}", resumed == straight);

    let text = dir.join("vectors.txt");
    let rows = export_text(&resumed, &text)?;
    println!("exported {rows} rows; re-read {} rows", read_text_export(&text)?.len());
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
