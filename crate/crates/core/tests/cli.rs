use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use polysense::eval::{generate_synthetic, SynthLanguage, SynthSpec};
use polysense::inference::train;
use polysense::model::{read_text_export, save_model, ExportRow};
use polysense::TrainConfig;
use tempfile::TempDir;

fn polysense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polysense")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a small synthetic suite with f1 merging the senses and returns the
/// `--corpus` values followed by the WSI file.
fn synth(dir: &Path, pairs: usize) -> (Vec<String>, String) {
    let out = polysense(&[
        "synth",
        "-o",
        dir.to_str().unwrap(),
        "--merge",
        "f1",
        "--pairs",
        &pairs.to_string(),
        "--heldout",
        "30",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines: Vec<&str> = text.lines().collect();
    let wsi = lines.pop().unwrap().to_string();
    let corpora = lines.iter().map(|l| l.strip_prefix("--corpus ").unwrap().to_string()).collect();
    (corpora, wsi)
}

fn train_args<'a>(corpora: &'a [String], model: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec!["train", "-q", "-o", model];
    for c in corpora {
        args.extend(["--corpus", c.as_str()]);
    }
    args.extend(extra);
    args
}

fn trained(dir: &TempDir) -> (String, String) {
    let (corpora, wsi) = synth(dir.path(), 400);
    let model = dir.path().join("m.bin").to_str().unwrap().to_string();
    let out = polysense(&train_args(&corpora, &model, &["--dim", "16", "--epochs", "2"]));
    assert!(out.status.success(), "{}", stderr(&out));
    (model, wsi)
}

#[test]
fn synth_merge_reproduces_the_two_language_scenario() {
    let dir = TempDir::new().unwrap();
    let (corpora, wsi) = synth(dir.path(), 200);
    assert_eq!(corpora.len(), 2);
    let foreign = |c: &str| std::fs::read_to_string(c.split(',').nth(1).unwrap()).unwrap();
    let f1 = foreign(&corpora[0]);
    let f2 = foreign(&corpora[1]);
    assert!(corpora[0].ends_with(",f1") && corpora[1].ends_with(",f2"));
    // f1 has one word for both senses, f2 one per sense
    assert!(f1.contains("bank_f1") && !f1.contains("bank0_f1") && !f1.contains("bank1_f1"));
    assert!(f2.contains("bank0_f2") && f2.contains("bank1_f2") && !f2.contains("bank_f2"));
    assert_eq!(std::fs::read_to_string(wsi).unwrap().lines().count(), 30);
}

#[test]
fn train_echoes_defaults_and_reports_senses() {
    let dir = TempDir::new().unwrap();
    let (corpora, _) = synth(dir.path(), 150);
    let model = dir.path().join("m.bin");
    let out = polysense(&train_args(&corpora, model.to_str().unwrap(), &[]));
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("α=0.1 T=10 dim=100 d=4 d′=0 ε=0.001 lr=0.025 iters=10"));
    let text = stdout(&out);
    assert!(text.contains("active senses\t"));
    assert!(text.contains("polysemy rate\t"));
    assert!(model.exists());
}

#[test]
fn identical_command_lines_give_identical_model_files() {
    let dir = TempDir::new().unwrap();
    let (corpora, _) = synth(dir.path(), 300);
    let a = dir.path().join("a.bin");
    let b = dir.path().join("b.bin");
    for m in [&a, &b] {
        let out = polysense(&train_args(&corpora, m.to_str().unwrap(), &["--dim", "12", "--epochs", "2", "--seed", "7"]));
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn two_corpora_train_like_their_concatenation() {
    let dir = TempDir::new().unwrap();
    let (corpora, _) = synth(dir.path(), 300);
    let cli_model = dir.path().join("cli.bin");
    let out = polysense(&train_args(&corpora, cli_model.to_str().unwrap(), &["--dim", "12", "--epochs", "2"]));
    assert!(out.status.success(), "{}", stderr(&out));

    let spec = SynthSpec {
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
        pairs: 300,
        heldout: 30,
        ..SynthSpec::default()
    };
    let pairs = generate_synthetic(&spec).unwrap().combined(&["f1", "f2"]);
    let config = TrainConfig {
        dim: 12,
        epochs: 2,
        ..TrainConfig::default()
    };
    let lib_model = dir.path().join("lib.bin");
    save_model(&train(&pairs, config).unwrap(), &lib_model).unwrap();
    assert_eq!(std::fs::read(&cli_model).unwrap(), std::fs::read(&lib_model).unwrap());
}

#[test]
fn stop_and_resume_matches_a_straight_run() {
    let dir = TempDir::new().unwrap();
    let (corpora, _) = synth(dir.path(), 300);
    let path = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let (straight, ckpt, resumed) = (path("s.bin"), path("c.bin"), path("r.bin"));
    let hyper = ["--dim", "12", "--epochs", "3"];
    assert!(polysense(&train_args(&corpora, &straight, &hyper)).status.success());
    let mut first = hyper.to_vec();
    first.extend(["--stop-after", "1"]);
    let out = polysense(&train_args(&corpora, &ckpt, &first));
    assert!(stdout(&out).contains("epochs 1/3"), "{}", stdout(&out));
    let out = polysense(&train_args(&corpora, &resumed, &["--resume", &ckpt]));
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(std::fs::read(&straight).unwrap(), std::fs::read(&resumed).unwrap());

    // hyperparameters cannot change on resume
    let out = polysense(&train_args(&corpora, &resumed, &["--resume", &ckpt, "--dim", "8"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mono_warns_about_foreign_files_and_rejects_foreign_window() {
    let dir = TempDir::new().unwrap();
    let (corpora, _) = synth(dir.path(), 150);
    let model = dir.path().join("m.bin");
    let m = model.to_str().unwrap();
    let out = polysense(&train_args(&corpora, m, &["--variant", "mono", "--dim", "8", "--epochs", "1"]));
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("warning: the mono variant ignores foreign and alignment files"));

    let out = polysense(&train_args(&corpora, m, &["--variant", "mono", "--foreign-window", "1"]));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error[usage]: "));
    assert_eq!(stderr(&out).lines().count(), 1);
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = TempDir::new().unwrap();
    let (corpora, _) = synth(dir.path(), 150);
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "dim = 8\nepochs = 1\nalpha = 0.5\n").unwrap();
    let model = dir.path().join("m.bin");
    let out = polysense(&train_args(
        &corpora,
        model.to_str().unwrap(),
        &["--config", cfg.to_str().unwrap(), "--alpha", "0.2"],
    ));
    assert!(out.status.success(), "{}", stderr(&out));
    let echo = stderr(&out);
    assert!(echo.contains("α=0.2 ") && echo.contains("dim=8 ") && echo.contains("iters=1 ") && echo.contains("d=4 "));
}

#[test]
fn evaluation_commands_on_a_trained_model() {
    let dir = TempDir::new().unwrap();
    let (model, wsi) = trained(&dir);

    let out = polysense(&["wsi", "-m", &model, "-d", &wsi, "--pooled"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("bank\t")));
    assert!(text.lines().any(|l| l.starts_with("average\t")));
    assert!(text.lines().any(|l| l.starts_with("pooled\t")));

    let mut child = Command::new(env!("CARGO_BIN_EXE_polysense"))
        .args(["disambiguate", "-m", &model])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"bank\tbank0t1 w3 bank0t7\nbank\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row.len(), 2 + 10);
        let total: f64 = row[2..].iter().map(|p| p.parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-4);
    }

    let out = polysense(&["neighbors", "-m", &model, "-w", "bank", "-n", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 3);

    let sim = dir.path().join("sim.tsv");
    std::fs::write(
        &sim,
        "bank\tbank0t1 w1\tbank0t2\tw2\t8.0\nbank\tbank1t1\tw5\tw7 w9\t2.5\nw1\tw2\tw3\tw4\t5.0\n",
    )
    .unwrap();
    let out = polysense(&["simeval", "-m", &model, "-d", sim.to_str().unwrap(), "--mode", "max-sense"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("spearman\t"));
}

#[test]
fn export_writes_a_parseable_file() {
    let dir = TempDir::new().unwrap();
    let (model, _) = trained(&dir);
    let path = dir.path().join("vectors.txt");
    let out = polysense(&["export", "-m", &model, "-o", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_text_export(&path).unwrap();
    assert!(stdout(&out).starts_with(&format!("wrote {} vectors", rows.len())));
    assert!(rows.iter().all(|r| r.vector().len() == 16));
    assert!(rows.iter().any(|r| matches!(r, ExportRow::Sense { word, .. } if word == "bank")));
    assert!(rows.iter().any(|r| matches!(r, ExportRow::Foreign { lang, .. } if lang == "f2")));
}

#[test]
fn failures_exit_with_one_machine_readable_line() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.bin");
    let out = polysense(&["export", "-m", missing.to_str().unwrap(), "-o", "x.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[io]: "));
    assert_eq!(stderr(&out).lines().count(), 1);

    let (model, _) = trained(&dir);
    let bad = dir.path().join("bad.tsv");
    std::fs::write(&bad, "bank\tonly two fields\n").unwrap();
    let out = polysense(&["wsi", "-m", &model, "-d", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error["));

    let out = polysense(&["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error[usage]: "));

    let out = polysense(&["train", "-o", "m.bin", "--corpus", "a,b,c"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn every_command_has_help() {
    for cmd in ["train", "disambiguate", "wsi", "simeval", "neighbors", "export", "synth"] {
        let out = polysense(&[cmd, "--help"]);
        assert!(out.status.success(), "{cmd}");
        assert!(stdout(&out).contains("Usage:"), "{cmd}");
    }
    let help = stdout(&polysense(&["train", "--help"]));
    for flag in [
        "--alpha",
        "--max-senses",
        "--dim",
        "--window",
        "--foreign-window",
        "--sense-threshold",
        "--learning-rate",
        "--epochs",
        "--negatives",
        "--noise-power",
        "--min-count",
        "--variant",
        "--seed",
        "--subsample",
        "--stick-decay",
        "--threads",
    ] {
        assert!(help.contains(flag), "{flag}");
    }
    assert!(help.contains("[default: 0.1]"));
}
