//! Learned state: sense, context and foreign embeddings, stick statistics,
//! hyperparameters and training progress.

mod io;
pub mod sticks;

pub use io::{export_text, load_model, read_text_export, save_model, ExportRow, FORMAT_VERSION, MAGIC};
pub use sticks::{SenseDistribution, StickStats};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Which factors of the crosslingual objective are trained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// English senses see English and aligned foreign context; foreign words
    /// predict their own neighbors and the aligned English side.
    #[default]
    Full,
    /// Like `Full`, but foreign words only predict foreign neighbors.
    OneSided,
    /// English side only.
    Mono,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::OneSided => "one-sided",
            Variant::Mono => "mono",
        }
    }

    fn code(self) -> u8 {
        match self {
            Variant::Full => 0,
            Variant::OneSided => 1,
            Variant::Mono => 2,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Variant::Full),
            1 => Some(Variant::OneSided),
            2 => Some(Variant::Mono),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "one-sided" | "onesided" => Ok(Variant::OneSided),
            "mono" => Ok(Variant::Mono),
            _ => Err(Error::Config(format!("unknown variant {s:?}"))),
        }
    }
}

/// Every training hyperparameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Dirichlet-process concentration.
    pub alpha: f64,
    /// Truncation level: maximum senses per English word.
    pub max_senses: usize,
    pub dim: usize,
    /// English window on either side.
    pub window: usize,
    /// Window in the other language around the aligned word.
    pub foreign_window: usize,
    /// A sense takes part in an update, and survives in the final model,
    /// only above this probability.
    pub sense_threshold: f64,
    pub learning_rate: f64,
    pub epochs: u32,
    pub negatives: usize,
    pub noise_power: f64,
    pub min_count: u64,
    pub variant: Variant,
    pub seed: u64,
    /// Frequent-word subsampling threshold; off when `None`.
    pub subsample: Option<f64>,
    /// Forgetting rate for the stick counts; plain accumulation when `None`.
    pub stick_decay: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 0.1,
            max_senses: 10,
            dim: 100,
            window: 4,
            foreign_window: 0,
            sense_threshold: 0.001,
            learning_rate: 0.025,
            epochs: 10,
            negatives: 5,
            noise_power: 0.75,
            min_count: 5,
            variant: Variant::Full,
            seed: 1,
            subsample: None,
            stick_decay: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be > 0, got {}", self.alpha));
        }
        if self.max_senses < 1 {
            return fail("max_senses must be >= 1".into());
        }
        if self.dim < 1 {
            return fail("dim must be >= 1".into());
        }
        if !(self.sense_threshold > 0.0 && self.sense_threshold < 1.0) {
            return fail(format!("sense_threshold must lie in (0, 1), got {}", self.sense_threshold));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if self.epochs < 1 {
            return fail("epochs must be >= 1".into());
        }
        if self.negatives < 1 {
            return fail("negatives must be >= 1".into());
        }
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return fail(format!("noise_power must be >= 0, got {}", self.noise_power));
        }
        if self.variant == Variant::Mono && self.foreign_window > 0 {
            return fail("the mono variant has no foreign side; foreign_window must be 0".into());
        }
        if let Some(t) = self.subsample {
            if !(t > 0.0 && t.is_finite()) {
                return fail(format!("subsample threshold must be > 0, got {t}"));
            }
        }
        if let Some(g) = self.stick_decay {
            if !(g > 0.0 && g < 1.0) {
                return fail(format!("stick_decay must lie in (0, 1), got {g}"));
            }
        }
        Ok(())
    }

    /// English window used for monolingual training: the foreign slot is
    /// given back to English context.
    pub fn mono_window(&self) -> usize {
        self.window + 1
    }

    /// One-line summary of the hyperparameters.
    pub fn summary(&self) -> String {
        format!(
            "α={} T={} dim={} d={} d′={} ε={} lr={} iters={} negatives={} variant={} seed={}",
            self.alpha,
            self.max_senses,
            self.dim,
            self.window,
            self.foreign_window,
            self.sense_threshold,
            self.learning_rate,
            self.epochs,
            self.negatives,
            self.variant,
            self.seed
        )
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn fill_uniform<R: Rng>(&mut self, rng: &mut R, half_width: f64) {
        for x in &mut self.data {
            *x = (rng.gen::<f64>() - 0.5) * 2.0 * half_width;
        }
    }
}

/// Where training stopped; persisted so a run can be resumed exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Progress {
    pub epochs_done: u32,
    pub tokens_done: u64,
    pub rng: ChaCha8Rng,
}

/// All learned parameters of the multi-sense model.
#[derive(Clone, Debug, PartialEq)]
pub struct SenseModel {
    pub config: TrainConfig,
    pub vocab: Vocabulary,
    /// `V_en * T` rows; row `w * T + k` is sense `k` of English word `w`.
    pub sense: Matrix,
    pub ctx_en: Matrix,
    pub in_fg: Matrix,
    pub ctx_fg: Matrix,
    pub sticks: StickStats,
    pub progress: Progress,
}

/// A context word in one of the two context matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ContextWord {
    En(u32),
    Fg(u32),
}

/// Allocates a model with random input vectors and zero context vectors.
pub fn init_model(vocab: Vocabulary, config: TrainConfig) -> SenseModel {
    let t = config.max_senses;
    let m = config.dim;
    let half = 0.5 / m as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sense = Matrix::zeros(vocab.en_len() * t, m);
    sense.fill_uniform(&mut rng, half);
    let mut in_fg = Matrix::zeros(vocab.fg_len(), m);
    in_fg.fill_uniform(&mut rng, half);
    SenseModel {
        ctx_en: Matrix::zeros(vocab.en_len(), m),
        ctx_fg: Matrix::zeros(vocab.fg_len(), m),
        sticks: StickStats::new(vocab.en_len(), t),
        sense,
        in_fg,
        progress: Progress {
            epochs_done: 0,
            tokens_done: 0,
            rng,
        },
        vocab,
        config,
    }
}

impl SenseModel {
    pub fn new(vocab: Vocabulary, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(init_model(vocab, config))
    }

    pub fn max_senses(&self) -> usize {
        self.config.max_senses
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn sense_vector(&self, w: u32, k: usize) -> &[f64] {
        self.sense.row(w as usize * self.config.max_senses + k)
    }

    pub fn sense_vector_mut(&mut self, w: u32, k: usize) -> &mut [f64] {
        self.sense.row_mut(w as usize * self.config.max_senses + k)
    }

    /// All `T` sense rows of `w`, contiguous.
    pub fn sense_block(&self, w: u32) -> &[f64] {
        let t = self.config.max_senses;
        let m = self.config.dim;
        let start = w as usize * t * m;
        &self.sense.as_slice()[start..start + t * m]
    }

    pub fn foreign_vector(&self, f: u32) -> &[f64] {
        self.in_fg.row(f as usize)
    }

    pub fn context_vector(&self, y: ContextWord) -> &[f64] {
        match y {
            ContextWord::En(id) => self.ctx_en.row(id as usize),
            ContextWord::Fg(id) => self.ctx_fg.row(id as usize),
        }
    }

    pub fn context_vector_mut(&mut self, y: ContextWord) -> &mut [f64] {
        match y {
            ContextWord::En(id) => self.ctx_en.row_mut(id as usize),
            ContextWord::Fg(id) => self.ctx_fg.row_mut(id as usize),
        }
    }

    pub fn en_id(&self, word: &str) -> Result<u32> {
        self.vocab.en_id(word).ok_or_else(|| Error::UnknownWord(word.to_string()))
    }

    /// `E_q[log p(z = k)]` for English word `w`.
    pub fn expected_log_prior(&self, w: u32, k: usize) -> f64 {
        self.expected_log_priors(w)[k]
    }

    pub fn expected_log_priors(&self, w: u32) -> Vec<f64> {
        sticks::expected_log_prior(self.sticks.counts(w), self.config.alpha)
    }

    pub fn expected_sense_prior(&self, w: u32) -> SenseDistribution {
        sticks::expected_sense_prior(self.sticks.counts(w), self.config.alpha)
    }

    /// Senses of `w` whose expected prior exceeds the sense threshold.
    pub fn active_senses(&self, w: u32) -> Vec<usize> {
        sticks::active_senses(self.sticks.counts(w), self.config.alpha, self.config.sense_threshold)
    }

    /// Fraction of the English vocabulary with more than one active sense.
    pub fn polysemy_rate(&self) -> f64 {
        let n = self.vocab.en_len();
        if n == 0 {
            return 0.0;
        }
        let poly = (0..n as u32).filter(|&w| self.active_senses(w).len() > 1).count();
        poly as f64 / n as f64
    }

    /// `hist[j]` = number of English words with `j + 1` active senses.
    pub fn active_sense_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.config.max_senses];
        for w in 0..self.vocab.en_len() as u32 {
            let n = self.active_senses(w).len();
            if n > 0 {
                hist[n - 1] += 1;
            }
        }
        hist
    }

    /// First non-finite parameter, if any, as `(matrix, index)`.
    pub fn find_non_finite(&self) -> Option<(&'static str, usize)> {
        let mats = [
            ("sense", &self.sense),
            ("ctx_en", &self.ctx_en),
            ("in_fg", &self.in_fg),
            ("ctx_fg", &self.ctx_fg),
        ];
        for (name, m) in mats {
            if let Some(i) = m.as_slice().iter().position(|x| !x.is_finite()) {
                return Some((name, i));
            }
        }
        self.sticks
            .raw()
            .iter()
            .position(|x| !x.is_finite())
            .map(|i| ("sticks", i))
    }
}
