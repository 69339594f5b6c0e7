//! Word-sense-induction scoring: adjusted Rand index between induced and gold
//! clusterings, and a round trip through the TSV instance format.
//!
//!     cargo run --example wsi_eval

use polysense::eval::{adjusted_rand_index, parse_wsi_line, write_wsi_tsv, WsiInstance};

fn main() -> polysense::Result<()> {
    let gold = ["money", "money", "money", "river", "river", "river"];
    let runs: [(&str, [u32; 6]); 4] = [
        ("perfect", [1, 1, 1, 0, 0, 0]),
        ("one sense for everything", [0; 6]),
        ("over-split", [0, 1, 2, 3, 4, 5]),
        ("one mistake", [0, 0, 1, 1, 1, 1]),
    ];
    for (name, pred) in runs {
        println!("{name:>26}: ARI {:+.3}", adjusted_rand_index(&pred, &gold)?);
    }

    let instances = vec![
        WsiInstance {
            target: "bank".into(),
            context: vec!["interest".into(), "loan".into()],
            gold: "money".into(),
        },
        WsiInstance {
            target: "bank".into(),
            context: vec!["river".into(), "shore".into()],
            gold: "river".into(),
        },
    ];
    let mut buf = Vec::new();
    write_wsi_tsv(&instances, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    print!("{text}");
    let back: Vec<WsiInstance> = text.lines().map(parse_wsi_line).collect::<polysense::Result<_>>()?;
    assert_eq!(back, instances);
    Ok(())
}
