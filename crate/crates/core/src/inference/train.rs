use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    english_context_slots, foreign_context_slots, learning_rate, log_sigmoid, renormalize_in_place, dot,
    skip_gram_step, theta_step, AtomicParams, InputRow, Params, Scratch, Slot,
};
use crate::corpus::{build_vocabulary, AlignedSentencePair, NoiseTable, PairSource, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{sticks, ContextWord, SenseDistribution, SenseModel, TrainConfig, Variant};

/// Hooks into single-threaded training, for diagnostics and invariant checks.
pub trait TrainObserver {
    /// Called once the posterior of an English occurrence is known and the
    /// stick counts are updated, before any parameter moves.
    fn before_theta(&mut self, _model: &SenseModel, _w: u32, _posterior: &SenseDistribution) {}

    /// Called after all gradient steps for the occurrence.
    fn after_theta(&mut self, _model: &SenseModel, _w: u32, _posterior: &SenseDistribution) {}
}

/// Observer that does nothing.
pub struct NoOpObserver;

impl TrainObserver for NoOpObserver {}

/// Per-language negative-sampling tables.
pub(crate) struct NoiseTables {
    en: NoiseTable,
    fg: Vec<NoiseTable>,
    fg_table: Vec<u16>,
}

impl NoiseTables {
    pub fn build(vocab: &Vocabulary, power: f64) -> Result<Self> {
        let en = NoiseTable::from_counts(vocab.en_counts(), power)?;
        let mut fg = Vec::new();
        let mut fg_table = vec![0u16; vocab.fg_len()];
        for lang in vocab.langs() {
            let ids = vocab.fg_ids_of(lang);
            for &id in &ids {
                fg_table[id as usize] = fg.len() as u16;
            }
            fg.push(NoiseTable::new(ids.iter().map(|&id| (id, vocab.fg_count(id))), power)?);
        }
        Ok(NoiseTables { en, fg, fg_table })
    }

    fn sample<R: Rng>(&self, y: ContextWord, n: usize, rng: &mut R, out: &mut Vec<u32>) {
        match y {
            ContextWord::En(id) => self.en.sample_excluding(rng, n, id, out),
            ContextWord::Fg(id) => self.fg[self.fg_table[id as usize] as usize].sample_excluding(rng, n, id, out),
        }
    }
}

/// A sentence pair mapped to vocabulary ids, out-of-vocabulary tokens removed
/// and alignments re-indexed.
#[derive(Default)]
struct Encoded {
    en: Vec<u32>,
    fg: Vec<u32>,
    a_ef: Vec<Option<usize>>,
    a_fe: Vec<Option<usize>>,
    en_pos: Vec<Option<usize>>,
    fg_pos: Vec<Option<usize>>,
}

struct Subsampler {
    threshold: f64,
    en_total: f64,
    fg_total: f64,
}

impl Subsampler {
    fn keep<R: Rng>(&self, count: u64, total: f64, rng: &mut R) -> bool {
        let freq = count as f64 / total;
        let keep = (self.threshold / freq).sqrt();
        keep >= 1.0 || rng.gen::<f64>() < keep
    }
}

impl Encoded {
    /// Returns the number of in-vocabulary English and foreign tokens read.
    fn fill<R: Rng>(
        &mut self,
        pair: &AlignedSentencePair,
        vocab: &Vocabulary,
        foreign: bool,
        subsample: Option<&Subsampler>,
        rng: &mut R,
    ) -> (u64, u64) {
        self.en.clear();
        self.fg.clear();
        self.en_pos.clear();
        self.fg_pos.clear();
        let mut read = (0, 0);
        for w in &pair.en {
            let kept = vocab.en_id(w).filter(|&id| {
                read.0 += 1;
                subsample.is_none_or(|s| s.keep(vocab.en_count(id), s.en_total, rng))
            });
            self.en_pos.push(kept.map(|id| {
                self.en.push(id);
                self.en.len() - 1
            }));
        }
        if foreign {
            for f in &pair.fg {
                let kept = vocab.fg_id(f, &pair.lang).filter(|&id| {
                    read.1 += 1;
                    subsample.is_none_or(|s| s.keep(vocab.fg_count(id), s.fg_total, rng))
                });
                self.fg_pos.push(kept.map(|id| {
                    self.fg.push(id);
                    self.fg.len() - 1
                }));
            }
        }
        self.a_ef.clear();
        self.a_ef.resize(self.en.len(), None);
        self.a_fe.clear();
        self.a_fe.resize(self.fg.len(), None);
        if foreign {
            for (i, j) in pair.a_ef.iter().enumerate() {
                if let (Some(ei), Some(fj)) = (self.en_pos[i], j.and_then(|j| self.fg_pos[j])) {
                    self.a_ef[ei] = Some(fj);
                }
            }
            for (j, i) in pair.a_fe.iter().enumerate() {
                if let (Some(fj), Some(ei)) = (self.fg_pos[j], i.and_then(|i| self.en_pos[i])) {
                    self.a_fe[fj] = Some(ei);
                }
            }
        }
        read
    }
}

/// When in a pair's English update a hook fires.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    BeforeTheta,
    AfterTheta,
}

/// Buffers and read-only state for processing sentence pairs.
struct Worker<'c> {
    config: &'c TrainConfig,
    vocab: &'c Vocabulary,
    noise: &'c NoiseTables,
    subsample: Option<Subsampler>,
    scratch: Scratch,
    enc: Encoded,
    slots: Vec<Slot>,
    context: Vec<ContextWord>,
    scores: Vec<f64>,
    counts: Vec<f64>,
    senses: Vec<f64>,
    ctx_row: Vec<f64>,
    negatives: Vec<u32>,
    neg_flat: Vec<u32>,
    neg_ranges: Vec<(usize, usize)>,
}

impl<'c> Worker<'c> {
    fn new(config: &'c TrainConfig, vocab: &'c Vocabulary, noise: &'c NoiseTables) -> Self {
        let t = config.max_senses;
        Worker {
            config,
            vocab,
            noise,
            subsample: config.subsample.map(|threshold| Subsampler {
                threshold,
                en_total: vocab.n_e().max(1) as f64,
                fg_total: vocab.n_f().max(1) as f64,
            }),
            scratch: Scratch::default(),
            enc: Encoded::default(),
            slots: Vec::new(),
            context: Vec::new(),
            scores: vec![0.0; t],
            counts: vec![0.0; t],
            senses: vec![0.0; t * config.dim],
            ctx_row: vec![0.0; config.dim],
            negatives: Vec::new(),
            neg_flat: Vec::new(),
            neg_ranges: Vec::new(),
        }
    }

    fn slot_words(&mut self, slots_en: bool) {
        let enc = &self.enc;
        self.context.clear();
        self.context.extend(self.slots.iter().map(|s| match *s {
            Slot::En(i) => ContextWord::En(enc.en[i]),
            Slot::Fg(j) => ContextWord::Fg(enc.fg[j]),
        }));
        let _ = slots_en;
    }

    /// Processes one pair. `lr` maps the running token count to a step size;
    /// `hook` sees the parameters around every English θ update.
    fn process_pair<P, R, L, H>(
        &mut self,
        params: &mut P,
        pair: &AlignedSentencePair,
        rng: &mut R,
        mut lr: L,
        mut hook: H,
    ) -> Result<()>
    where
        P: Params + ?Sized,
        R: Rng,
        L: FnMut(u64) -> f64,
        H: FnMut(Phase, &P, u32, &SenseDistribution),
    {
        let config = self.config;
        let foreign = config.variant != Variant::Mono;
        let (en_read, fg_read) = self.enc.fill(pair, self.vocab, foreign, self.subsample.as_ref(), rng);
        // spread the token count over the kept positions
        let en_kept = self.enc.en.len() as u64;
        let mut rate = lr(0);
        for i in 0..self.enc.en.len() {
            let w = self.enc.en[i];
            english_context_slots(&self.enc.a_ef, self.enc.fg.len(), i, config, &mut self.slots);
            self.slot_words(true);
            self.draw_negatives(rng);
            let posterior = self.posterior(params, w)?;
            params.observe(w, posterior.probs(), config.stick_decay);
            hook(Phase::BeforeTheta, params, w, &posterior);
            for c in 0..self.context.len() {
                let y = self.context[c];
                let (a, b) = self.neg_ranges[c];
                theta_step(
                    params,
                    w,
                    &posterior,
                    config.sense_threshold,
                    y,
                    &self.neg_flat[a..b],
                    rate,
                    &mut self.scratch,
                );
            }
            hook(Phase::AfterTheta, params, w, &posterior);
            rate = lr(1);
        }
        if en_read > en_kept {
            rate = lr(en_read - en_kept);
        }
        if !foreign {
            return Ok(());
        }
        let fg_kept = self.enc.fg.len() as u64;
        for j in 0..self.enc.fg.len() {
            let f = self.enc.fg[j];
            foreign_context_slots(&self.enc.a_fe, self.enc.en.len(), j, config, &mut self.slots);
            self.slot_words(false);
            for c in 0..self.context.len() {
                let y = self.context[c];
                self.noise.sample(y, config.negatives, rng, &mut self.negatives);
                skip_gram_step(params, f, y, &self.negatives, rate, &mut self.scratch);
            }
            rate = lr(1);
        }
        if fg_read > fg_kept {
            lr(fg_read - fg_kept);
        }
        Ok(())
    }

    fn draw_negatives<R: Rng>(&mut self, rng: &mut R) {
        self.neg_flat.clear();
        self.neg_ranges.clear();
        for &y in &self.context {
            self.noise.sample(y, self.config.negatives, rng, &mut self.negatives);
            let a = self.neg_flat.len();
            self.neg_flat.extend_from_slice(&self.negatives);
            self.neg_ranges.push((a, self.neg_flat.len()));
        }
    }

    /// E-step for one occurrence: prior, context evidence, softmax.
    fn posterior<P: Params + ?Sized>(&mut self, params: &P, w: u32) -> Result<SenseDistribution> {
        let t = self.config.max_senses;
        let m = self.config.dim;
        params.read_counts(w, &mut self.counts);
        sticks::expected_log_prior_into(&self.counts, self.config.alpha, &mut self.scores);
        for k in 0..t {
            params.read_input(InputRow::Sense(w, k), &mut self.senses[k * m..(k + 1) * m]);
        }
        for &y in &self.context {
            params.read_ctx(y, &mut self.ctx_row);
            for k in 0..t {
                self.scores[k] += log_sigmoid(dot(&self.senses[k * m..(k + 1) * m], &self.ctx_row));
            }
        }
        renormalize_in_place(&mut self.scores);
        if self.scores.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite sense posterior for {:?} (counts {:?})",
                self.vocab.en_word(w),
                self.counts
            )));
        }
        Ok(SenseDistribution::new(self.scores.clone()))
    }
}

/// Runs the learning algorithm over a [`PairSource`].
///
/// Single-threaded runs are deterministic given the seed; a model saved
/// between epochs resumes to the same result as an uninterrupted run.
pub struct Trainer<'a, S: PairSource + ?Sized> {
    source: &'a S,
    model: SenseModel,
    noise: NoiseTables,
    total_tokens: u64,
    verbose: bool,
    budget: u32,
}

fn scheduled_tokens(vocab: &Vocabulary, config: &TrainConfig) -> u64 {
    let per_epoch = match config.variant {
        Variant::Mono => vocab.n_e(),
        _ => vocab.n_e() + vocab.n_f(),
    };
    per_epoch * config.epochs as u64
}

impl<'a, S: PairSource + ?Sized> Trainer<'a, S> {
    /// Builds the vocabulary from `source` and initializes a fresh model.
    pub fn new(source: &'a S, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let vocab = build_vocabulary(source, config.min_count)?;
        Self::resume(source, SenseModel::new(vocab, config)?)
    }

    /// Continues training `model`, which must have been built from `source`.
    pub fn resume(source: &'a S, model: SenseModel) -> Result<Self> {
        model.config.validate()?;
        let noise = NoiseTables::build(&model.vocab, model.config.noise_power)?;
        let total_tokens = scheduled_tokens(&model.vocab, &model.config);
        Ok(Trainer {
            source,
            model,
            noise,
            total_tokens,
            verbose: false,
            budget: u32::MAX,
        })
    }

    /// Print a status line to stderr every 100k tokens.
    pub fn verbose(mut self, on: bool) -> Self {
        self.verbose = on;
        self
    }

    /// Stop `run*` after at most `epochs` epochs, leaving the model resumable.
    pub fn stop_after(mut self, epochs: u32) -> Self {
        self.budget = epochs;
        self
    }

    fn may_continue(&self, done: u32) -> bool {
        self.epochs_remaining() > 0 && done < self.budget
    }

    pub fn model(&self) -> &SenseModel {
        &self.model
    }

    pub fn into_model(self) -> SenseModel {
        self.model
    }

    pub fn epochs_remaining(&self) -> u32 {
        self.model.config.epochs.saturating_sub(self.model.progress.epochs_done)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// One pass over the corpus.
    pub fn run_epoch(&mut self) -> Result<()> {
        self.run_epoch_observed(&mut NoOpObserver)
    }

    pub fn run_epoch_observed<O: TrainObserver>(&mut self, observer: &mut O) -> Result<()> {
        let Trainer {
            source,
            model,
            noise,
            total_tokens,
            verbose,
            ..
        } = self;
        let config = model.config.clone();
        let vocab = model.vocab.clone();
        let mut worker = Worker::new(&config, &vocab, noise);
        let mut rng = model.progress.rng.clone();
        let total = *total_tokens;
        let lr0 = config.learning_rate;
        let mut tokens = model.progress.tokens_done;
        let epoch = model.progress.epochs_done + 1;
        let started = Instant::now();
        let start_tokens = tokens;
        let mut next_report = (tokens / 100_000 + 1) * 100_000;
        source.for_each_pair(&mut |pair| {
            let mut report = false;
            worker.process_pair(
                model,
                &pair,
                &mut rng,
                |n| {
                    tokens += n;
                    if tokens >= next_report {
                        report = true;
                        next_report += 100_000;
                    }
                    learning_rate(tokens, total, lr0)
                },
                |phase, m: &SenseModel, w, z| match phase {
                    Phase::BeforeTheta => observer.before_theta(m, w, z),
                    Phase::AfterTheta => observer.after_theta(m, w, z),
                },
            )?;
            if report && *verbose {
                let secs = started.elapsed().as_secs_f64().max(1e-9);
                eprintln!(
                    "epoch {epoch} tokens {tokens}/{total} {:.0} tok/s lr {:.6} senses {:?}",
                    (tokens - start_tokens) as f64 / secs,
                    learning_rate(tokens, total, lr0),
                    model.active_sense_histogram()
                );
            }
            Ok(())
        })?;
        model.progress.rng = rng;
        model.progress.tokens_done = tokens;
        model.progress.epochs_done += 1;
        if let Some((matrix, index)) = model.find_non_finite() {
            return Err(Error::Numerical(format!(
                "non-finite value in {matrix}[{index}] after epoch {epoch}"
            )));
        }
        Ok(())
    }

    /// Trains for the remaining epochs.
    pub fn run(mut self) -> Result<SenseModel> {
        let mut done = 0;
        while self.may_continue(done) {
            self.run_epoch()?;
            done += 1;
        }
        Ok(self.model)
    }

    pub fn run_observed<O: TrainObserver>(mut self, observer: &mut O) -> Result<SenseModel> {
        let mut done = 0;
        while self.may_continue(done) {
            self.run_epoch_observed(observer)?;
            done += 1;
        }
        Ok(self.model)
    }
}

impl<S: PairSource + Sync + ?Sized> Trainer<'_, S> {
    /// Trains the remaining epochs with `threads` workers sharing the
    /// parameters without locks. Pairs are dealt round-robin to workers.
    /// Results are not bitwise reproducible.
    pub fn run_parallel(mut self, threads: usize) -> Result<SenseModel> {
        if threads <= 1 {
            return self.run();
        }
        let shared = AtomicParams::from_model(&self.model);
        let tokens = AtomicU64::new(self.model.progress.tokens_done);
        let total = self.total_tokens;
        let config = self.model.config.clone();
        let vocab = self.model.vocab.clone();
        let failure: Mutex<Option<Error>> = Mutex::new(None);
        let mut done = 0;
        while self.may_continue(done) {
            done += 1;
            let epoch = self.model.progress.epochs_done;
            std::thread::scope(|scope| {
                for t in 0..threads {
                    let (shared, tokens, failure) = (&shared, &tokens, &failure);
                    let (config, vocab, noise, source) = (&config, &vocab, &self.noise, self.source);
                    scope.spawn(move || {
                        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                        rng.set_stream(((epoch as u64) << 16) | (t as u64 + 1));
                        let mut worker = Worker::new(config, vocab, noise);
                        let mut params = shared;
                        let mut index = 0usize;
                        let result = source.for_each_pair(&mut |pair| {
                            let mine = index % threads == t;
                            index += 1;
                            if !mine {
                                return Ok(());
                            }
                            worker.process_pair(
                                &mut params,
                                &pair,
                                &mut rng,
                                |n| {
                                    let done = tokens.fetch_add(n, Ordering::Relaxed) + n;
                                    learning_rate(done, total, config.learning_rate)
                                },
                                |_, _, _, _| {},
                            )
                        });
                        if let Err(e) = result {
                            failure.lock().unwrap().get_or_insert(e);
                        }
                    });
                }
            });
            if let Some(e) = failure.lock().unwrap().take() {
                return Err(e);
            }
            self.model.progress.epochs_done += 1;
            if self.verbose {
                eprintln!(
                    "epoch {} done, tokens {}/{total}",
                    self.model.progress.epochs_done,
                    tokens.load(Ordering::Relaxed)
                );
            }
        }
        shared.store_into(&mut self.model);
        self.model.progress.tokens_done = tokens.load(Ordering::Relaxed);
        if let Some((matrix, index)) = self.model.find_non_finite() {
            return Err(Error::Numerical(format!("non-finite value in {matrix}[{index}]")));
        }
        Ok(self.model)
    }
}

/// Builds a vocabulary from `source` and trains a model for `config.epochs` epochs.
pub fn train<S: PairSource + ?Sized>(source: &S, config: TrainConfig) -> Result<SenseModel> {
    Trainer::new(source, config)?.run()
}
