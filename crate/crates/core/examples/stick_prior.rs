//! How the stick-breaking prior turns expected sense counts into sense
//! probabilities, and which senses count as active.
//!
//!     cargo run --example stick_prior

use polysense::model::sticks::{active_senses, expected_log_prior, expected_sense_prior};

fn main() {
    let alpha = 0.1;
    let threshold = 0.001;
    let cases: [(&str, [f64; 5]); 4] = [
        ("fresh word", [0.0; 5]),
        ("one dominant sense", [10_000.0, 0.0, 0.0, 0.0, 0.0]),
        ("two balanced senses", [600.0, 400.0, 0.0, 0.0, 0.0]),
        ("long tail", [500.0, 50.0, 5.0, 0.5, 0.0]),
    ];
    for (name, counts) in cases {
        let prior = expected_sense_prior(&counts, alpha);
        let log_prior = expected_log_prior(&counts, alpha);
        println!("{name}: counts {counts:?}");
        for k in 0..counts.len() {
            println!("  sense {k}: p = {:.6}  E[log p] = {:+.4}", prior[k], log_prior[k]);
        }
        println!("  active (p > {threshold}): {:?}", active_senses(&counts, alpha, threshold));
    }
}
