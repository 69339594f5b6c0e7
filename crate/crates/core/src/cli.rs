//! The `polysense` command line.
//!
//! Errors are reported as a single line `error[kind]: message` on stderr and
//! mapped to exit codes: 1 usage, 2 data, 3 numerical failure.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{CorpusSpec, Manifest, OnBadLine};
use crate::disambig::{disambiguate_batch, nearest_neighbors, SimilarityMode};
use crate::error::{Error, Result};
use crate::eval::{generate_synthetic, read_similarity_tsv, read_wsi_tsv, simeval, wsi_evaluate, SynthLanguage, SynthSpec};
use crate::inference::Trainer;
use crate::model::{export_text, load_model, save_model, SenseModel, TrainConfig, Variant};

#[derive(Debug, Parser)]
#[command(name = "polysense", version, about = "Multi-sense word embeddings from multilingual parallel text")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on one or more word-aligned parallel corpora.
    Train(TrainArgs),
    /// Sense posteriors for `word<TAB>context...` lines.
    Disambiguate(DisambiguateArgs),
    /// Word-sense-induction scoring (ARI) on a `target<TAB>gold<TAB>context` file.
    Wsi(WsiArgs),
    /// Contextual word similarity: Spearman correlation with human scores.
    Simeval(SimevalArgs),
    /// Nearest neighbors of one sense.
    Neighbors(NeighborsArgs),
    /// Write active sense vectors and foreign vectors as text.
    Export(ExportArgs),
    /// Generate a synthetic parallel corpus with planted senses.
    Synth(SynthArgs),
}

/// Hyperparameter flags. Each one overrides the config file, which overrides
/// the built-in defaults.
#[derive(Debug, Default, Args)]
pub struct HyperParams {
    /// DP concentration α [default: 0.1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Maximum senses per word T [default: 10]
    #[arg(long)]
    pub max_senses: Option<usize>,
    /// Embedding dimension [default: 100]
    #[arg(long)]
    pub dim: Option<usize>,
    /// English window d [default: 4]
    #[arg(long)]
    pub window: Option<usize>,
    /// Window around the aligned word in the other language d′ [default: 0]
    #[arg(long)]
    pub foreign_window: Option<usize>,
    /// Sense activity threshold ε [default: 0.001]
    #[arg(long)]
    pub sense_threshold: Option<f64>,
    /// Initial learning rate, decayed linearly [default: 0.025]
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Passes over the corpus [default: 10]
    #[arg(long)]
    pub epochs: Option<u32>,
    /// Noise samples per update [default: 5]
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Exponent of the unigram noise distribution [default: 0.75]
    #[arg(long)]
    pub noise_power: Option<f64>,
    /// Drop words seen fewer times [default: 5]
    #[arg(long)]
    pub min_count: Option<u64>,
    /// Which factors to train [default: full]
    #[arg(long, value_enum)]
    pub variant: Option<Variant>,
    /// Seed for initialization and sampling [default: 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Frequent-word subsampling threshold [default: off]
    #[arg(long)]
    pub subsample: Option<f64>,
    /// Forgetting rate for stick counts [default: off]
    #[arg(long)]
    pub stick_decay: Option<f64>,
}

impl HyperParams {
    fn any(&self) -> bool {
        let HyperParams {
            alpha,
            max_senses,
            dim,
            window,
            foreign_window,
            sense_threshold,
            learning_rate,
            epochs,
            negatives,
            noise_power,
            min_count,
            variant,
            seed,
            subsample,
            stick_decay,
        } = self;
        alpha.is_some()
            || max_senses.is_some()
            || dim.is_some()
            || window.is_some()
            || foreign_window.is_some()
            || sense_threshold.is_some()
            || learning_rate.is_some()
            || epochs.is_some()
            || negatives.is_some()
            || noise_power.is_some()
            || min_count.is_some()
            || variant.is_some()
            || seed.is_some()
            || subsample.is_some()
            || stick_decay.is_some()
    }

    /// Overlays the flags that were given onto `config`.
    pub fn apply(&self, config: &mut TrainConfig) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    config.$field = v;
                }
            )*};
        }
        set!(
            alpha,
            max_senses,
            dim,
            window,
            foreign_window,
            sense_threshold,
            learning_rate,
            epochs,
            negatives,
            noise_power,
            min_count,
            variant,
            seed
        );
        if self.subsample.is_some() {
            config.subsample = self.subsample;
        }
        if self.stick_decay.is_some() {
            config.stick_decay = self.stick_decay;
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Parallel corpus as `en.txt,fg.txt,align.txt,LANG`; repeat for several languages
    #[arg(long = "corpus", required = true)]
    pub corpora: Vec<CorpusSpec>,
    /// Where to write the model
    #[arg(long, short)]
    pub output: PathBuf,
    /// TOML file with hyperparameters (same names as the flags, with underscores)
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: HyperParams,
    /// Worker threads; more than one trades bitwise reproducibility for speed
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Continue training a checkpoint written by an earlier run on the same corpora
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Run at most this many epochs, then save a resumable checkpoint
    #[arg(long)]
    pub stop_after: Option<u32>,
    /// Abort on a malformed alignment line instead of skipping the pair
    #[arg(long)]
    pub strict: bool,
    /// No progress lines
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct DisambiguateArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Input file; standard input when absent
    #[arg(long, short)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WsiArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Instances as `target<TAB>gold<TAB>context words`
    #[arg(long, short)]
    pub data: PathBuf,
    /// Also report ARI pooled over all targets
    #[arg(long)]
    pub pooled: bool,
}

#[derive(Debug, Args)]
pub struct SimevalArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Items as `w1<TAB>ctx1<TAB>w2<TAB>ctx2<TAB>score`
    #[arg(long, short)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = SimilarityMode::Average)]
    pub mode: SimilarityMode,
}

#[derive(Debug, Args)]
pub struct NeighborsArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub word: String,
    /// Sense index, counted from 0
    #[arg(long, short, default_value_t = 0)]
    pub sense: usize,
    #[arg(long, short = 'n', default_value_t = 10)]
    pub count: usize,
    /// Search foreign vectors too
    #[arg(long)]
    pub foreign: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long, short)]
    pub output: PathBuf,
    /// Foreign languages to generate
    #[arg(long = "lang", default_values_t = ["f1".to_string(), "f2".to_string()])]
    pub langs: Vec<String>,
    /// Languages that translate every sense of the planted word identically
    #[arg(long)]
    pub merge: Vec<String>,
    /// Sentence pairs per language
    #[arg(long, default_value_t = SynthSpec::default().pairs)]
    pub pairs: usize,
    #[arg(long, default_value_t = SynthSpec::default().sentence_len)]
    pub sentence_len: usize,
    /// Probability that a context position holds a topic word
    #[arg(long, default_value_t = SynthSpec::default().topic_rate)]
    pub topic_rate: f64,
    /// Held-out WSI instances
    #[arg(long, default_value_t = SynthSpec::default().heldout)]
    pub heldout: usize,
    #[arg(long, default_value_t = SynthSpec::default().seed)]
    pub seed: u64,
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return 1;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.kind());
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(args) => cmd_train(args),
        Command::Disambiguate(args) => cmd_disambiguate(args),
        Command::Wsi(args) => cmd_wsi(args),
        Command::Simeval(args) => cmd_simeval(args),
        Command::Neighbors(args) => cmd_neighbors(args),
        Command::Export(args) => cmd_export(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

/// Defaults, overlaid by the config file, overlaid by flags.
pub fn effective_config(file: Option<&Path>, params: &HyperParams) -> Result<TrainConfig> {
    let mut config = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?
        }
        None => TrainConfig::default(),
    };
    params.apply(&mut config);
    config.validate()?;
    Ok(config)
}

fn stdout_err(e: io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    if args.threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let mut manifest = Manifest::new(args.corpora.clone());
    if args.strict {
        manifest.on_bad_line = OnBadLine::Abort;
    }
    let trainer = match &args.resume {
        Some(path) => {
            if args.config.is_some() || args.params.any() {
                return Err(Error::Config(
                    "hyperparameters are fixed by the checkpoint; drop them when using --resume".into(),
                ));
            }
            let model = load_model(path)?;
            manifest.english_only = model.config.variant == Variant::Mono;
            eprintln!(
                "resuming {} after epoch {}: {}",
                path.display(),
                model.progress.epochs_done,
                model.config.summary()
            );
            Trainer::resume(&manifest, model)?
        }
        None => {
            let config = effective_config(args.config.as_deref(), &args.params)?;
            if config.variant == Variant::Mono {
                eprintln!("warning: the mono variant ignores foreign and alignment files");
                manifest.english_only = true;
            }
            eprintln!("{}", config.summary());
            Trainer::new(&manifest, config)?
        }
    };
    let mut trainer = trainer.verbose(!args.quiet);
    if let Some(n) = args.stop_after {
        trainer = trainer.stop_after(n);
    }
    let model = trainer.run_parallel(args.threads)?;
    save_model(&model, &args.output)?;
    report_model(&model, &args.output).map_err(stdout_err)
}

fn report_model(model: &SenseModel, path: &Path) -> io::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "model\t{}\tepochs {}/{}",
        path.display(),
        model.progress.epochs_done,
        model.config.epochs
    )?;
    writeln!(out, "vocabulary\ten {}\tforeign {}", model.vocab.en_len(), model.vocab.fg_len())?;
    let hist = model.active_sense_histogram();
    let hist: Vec<String> = hist.iter().enumerate().map(|(i, n)| format!("{}:{n}", i + 1)).collect();
    writeln!(out, "active senses\t{}", hist.join(" "))?;
    writeln!(out, "polysemy rate\t{:.4}", model.polysemy_rate())
}

fn cmd_disambiguate(args: DisambiguateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let stdout = io::stdout();
    let out = BufWriter::new(stdout.lock());
    let input: Box<dyn BufRead> = match &args.input {
        Some(path) => Box::new(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?)),
        None => Box::new(io::stdin().lock()),
    };
    disambiguate_batch(&model, input, out).map(|_| ())
}

fn cmd_wsi(args: WsiArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let instances = read_wsi_tsv(&args.data)?;
    let report = wsi_evaluate(&model, &instances)?;
    let mut out = io::stdout().lock();
    let mut write = || -> io::Result<()> {
        for (word, ari, n) in &report.per_word {
            writeln!(out, "{word}\t{ari:.4}\t{n}")?;
        }
        writeln!(out, "average\t{:.4}\t{}", report.average, report.per_word.len())?;
        if args.pooled {
            writeln!(out, "pooled\t{:.4}", report.pooled)?;
        }
        if !report.oov.is_empty() {
            writeln!(out, "oov\t{}", report.oov.join(" "))?;
        }
        if !report.too_small.is_empty() {
            writeln!(out, "too-small\t{}", report.too_small.join(" "))?;
        }
        Ok(())
    };
    write().map_err(stdout_err)
}

fn cmd_simeval(args: SimevalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let items = read_similarity_tsv(&args.data)?;
    let report = simeval(&model, &items, args.mode)?;
    println!(
        "spearman\t{:.4}\tscored {}\tskipped {}",
        report.spearman, report.scored, report.skipped
    );
    Ok(())
}

fn cmd_neighbors(args: NeighborsArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let hits = nearest_neighbors(&model, &args.word, args.sense, args.count, args.foreign)?;
    let mut out = io::stdout().lock();
    for (neighbor, cos) in hits {
        writeln!(out, "{neighbor}\t{cos:.4}").map_err(stdout_err)?;
    }
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let rows = export_text(&model, &args.output)?;
    println!("wrote {rows} vectors to {}", args.output.display());
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    if let Some(m) = args.merge.iter().find(|m| !args.langs.contains(m)) {
        return Err(Error::Config(format!("--merge {m}: not among the generated languages")));
    }
    let spec = SynthSpec {
        languages: args
            .langs
            .iter()
            .map(|lang| SynthLanguage {
                lang: lang.clone(),
                merge: args.merge.contains(lang),
            })
            .collect(),
        pairs: args.pairs,
        sentence_len: args.sentence_len,
        topic_rate: args.topic_rate,
        heldout: args.heldout,
        seed: args.seed,
        ..SynthSpec::default()
    };
    let corpus = generate_synthetic(&spec)?;
    let specs = corpus.write_to(&args.output)?;
    let mut out = io::stdout().lock();
    for s in specs {
        writeln!(
            out,
            "--corpus {},{},{},{}",
            s.en.display(),
            s.fg.display(),
            s.align.display(),
            s.lang
        )
        .map_err(stdout_err)?;
    }
    writeln!(out, "{}", args.output.join("wsi.tsv").display()).map_err(stdout_err)
}
