//! Per-occurrence variational updates: sense scoring, renormalization, context
//! construction, and the negative-sampling gradient steps for English sense
//! vectors and foreign vectors.

mod params;
mod train;

pub use train::{train, NoOpObserver, TrainObserver, Trainer};

pub(crate) use params::{AtomicParams, Params};

use crate::corpus::{neighbor_positions, AlignedSentencePair, Token};
use crate::model::{ContextWord, SenseDistribution, SenseModel, TrainConfig, Variant};

/// Dot products are clamped to this magnitude before the sigmoid.
pub const SCORE_CLAMP: f64 = 30.0;

#[inline(always)]
fn dot_body(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators so the loop vectorizes; the summation order is fixed,
    // so every code path below gives bit-identical results
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4 * 4;
    for i in (0..chunks).step_by(4) {
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks..n {
        sum += a[i] * b[i];
    }
    sum
}

#[inline(always)]
fn axpy_body(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(target_arch = "x86_64")]
mod wide {
    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn dot(a: &[f64], b: &[f64]) -> f64 {
        super::dot_body(a, b)
    }

    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
        super::axpy_body(y, a, x)
    }
}

#[cfg(target_arch = "x86_64")]
fn has_avx2() -> bool {
    std::is_x86_feature_detected!("avx2")
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    #[cfg(target_arch = "x86_64")]
    if has_avx2() {
        // SAFETY: the CPU supports AVX2.
        return unsafe { wide::dot(a, b) };
    }
    dot_body(a, b)
}

pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    #[cfg(target_arch = "x86_64")]
    if has_avx2() {
        // SAFETY: the CPU supports AVX2.
        return unsafe { wide::axpy(y, a, x) };
    }
    axpy_body(y, a, x)
}

/// `log σ(x)` with `x` clamped to `±SCORE_CLAMP`.
pub fn log_sigmoid(x: f64) -> f64 {
    let x = x.clamp(-SCORE_CLAMP, SCORE_CLAMP);
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `σ(x)` with `x` clamped to `±SCORE_CLAMP`.
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-SCORE_CLAMP, SCORE_CLAMP);
    1.0 / (1.0 + (-x).exp())
}

/// `log σ(ctx(y) · x)`: how well input vector `x` predicts context word `y`.
pub fn log_sigmoid_score(model: &SenseModel, x: &[f64], y: ContextWord) -> f64 {
    log_sigmoid(dot(x, model.context_vector(y)))
}

/// Adds `log σ(ctx(y) · x_k)` to the running log-score of every sense of `w`.
pub fn sense_update(log_scores: &mut [f64], model: &SenseModel, w: u32, y: ContextWord) {
    let ctx = model.context_vector(y);
    for (k, score) in log_scores.iter_mut().enumerate() {
        *score += log_sigmoid(dot(model.sense_vector(w, k), ctx));
    }
}

/// Softmax with max subtraction.
pub fn renormalize(log_scores: &[f64]) -> SenseDistribution {
    let mut probs = log_scores.to_vec();
    renormalize_in_place(&mut probs);
    SenseDistribution::new(probs)
}

pub(crate) fn renormalize_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}

/// A position in one side of a sentence pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    En(usize),
    Fg(usize),
}

/// Context positions for English position `i`.
///
/// Mono: English neighbors within `window + 1`. Otherwise English neighbors
/// within `window`, plus, when `i` is aligned, the foreign neighbors of the
/// aligned word within `foreign_window` and the aligned word itself.
pub fn english_context_slots(
    a_ef: &[Option<usize>],
    fg_len: usize,
    i: usize,
    config: &TrainConfig,
    out: &mut Vec<Slot>,
) {
    out.clear();
    let en_len = a_ef.len();
    if config.variant == Variant::Mono {
        out.extend(neighbor_positions(en_len, i, config.mono_window()).map(Slot::En));
        return;
    }
    out.extend(neighbor_positions(en_len, i, config.window).map(Slot::En));
    if let Some(j) = a_ef[i] {
        if config.foreign_window > 0 {
            out.extend(neighbor_positions(fg_len, j, config.foreign_window).map(Slot::Fg));
        }
        out.push(Slot::Fg(j));
    }
}

/// Context positions for foreign position `j`.
///
/// Full: foreign neighbors within `window`, plus, when aligned, the English
/// neighbors within `foreign_window` and the aligned English word. OneSided
/// keeps only the foreign neighbors; Mono has no foreign updates at all.
pub fn foreign_context_slots(
    a_fe: &[Option<usize>],
    en_len: usize,
    j: usize,
    config: &TrainConfig,
    out: &mut Vec<Slot>,
) {
    out.clear();
    let fg_len = a_fe.len();
    match config.variant {
        Variant::Mono => {}
        Variant::OneSided => out.extend(neighbor_positions(fg_len, j, config.window).map(Slot::Fg)),
        Variant::Full => {
            out.extend(neighbor_positions(fg_len, j, config.window).map(Slot::Fg));
            if let Some(i) = a_fe[j] {
                if config.foreign_window > 0 {
                    out.extend(neighbor_positions(en_len, i, config.foreign_window).map(Slot::En));
                }
                out.push(Slot::En(i));
            }
        }
    }
}

fn slot_tokens(pair: &AlignedSentencePair, slots: &[Slot]) -> Vec<Token> {
    slots
        .iter()
        .map(|s| match *s {
            Slot::En(i) => pair.en_token(i),
            Slot::Fg(j) => pair.fg_token(j),
        })
        .collect()
}

/// The combined monolingual and crosslingual context of English position `i`.
pub fn build_english_context(pair: &AlignedSentencePair, i: usize, config: &TrainConfig) -> Vec<Token> {
    let mut slots = Vec::new();
    english_context_slots(&pair.a_ef, pair.fg.len(), i, config, &mut slots);
    slot_tokens(pair, &slots)
}

/// The context predicted by the foreign word at position `j`.
pub fn build_foreign_context(pair: &AlignedSentencePair, j: usize, config: &TrainConfig) -> Vec<Token> {
    let mut slots = Vec::new();
    foreign_context_slots(&pair.a_fe, pair.en.len(), j, config, &mut slots);
    slot_tokens(pair, &slots)
}

/// Linearly decayed learning rate, floored at `lr0 * 1e-4`.
pub fn learning_rate(t: u64, total: u64, lr0: f64) -> f64 {
    let frac = if total == 0 { 1.0 } else { (t as f64 / total as f64).min(1.0) };
    (lr0 * (1.0 - frac)).max(lr0 * 1e-4)
}

/// An input row whose vector is trained against context words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum InputRow {
    Sense(u32, usize),
    Foreign(u32),
}

/// Reusable buffers for the gradient kernels.
#[derive(Default)]
pub(crate) struct Scratch {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    grad_inputs: Vec<f64>,
    grad_targets: Vec<f64>,
    rows: Vec<(InputRow, f64)>,
    target_ids: Vec<ContextWord>,
}

/// Gradient of `Σ_r weight_r [log σ(x_r·c_y) + Σ_n log σ(-x_r·c_n)]` with
/// respect to every input row `x_r` and every target context row.
///
/// Negatives share the kind (English or foreign) of `positive`.
pub(crate) fn ns_gradient<P: Params + ?Sized>(
    params: &P,
    rows: &[(InputRow, f64)],
    positive: ContextWord,
    negatives: &[u32],
    s: &mut Scratch,
) {
    let m = params.dim();
    s.target_ids.clear();
    s.target_ids.push(positive);
    s.target_ids.extend(negatives.iter().map(|&n| match positive {
        ContextWord::En(_) => ContextWord::En(n),
        ContextWord::Fg(_) => ContextWord::Fg(n),
    }));
    let n_targets = s.target_ids.len();
    s.inputs.resize(rows.len() * m, 0.0);
    s.targets.resize(n_targets * m, 0.0);
    s.grad_inputs.clear();
    s.grad_inputs.resize(rows.len() * m, 0.0);
    s.grad_targets.clear();
    s.grad_targets.resize(n_targets * m, 0.0);
    for (r, (row, _)) in rows.iter().enumerate() {
        params.read_input(*row, &mut s.inputs[r * m..(r + 1) * m]);
    }
    for (t, y) in s.target_ids.iter().enumerate() {
        params.read_ctx(*y, &mut s.targets[t * m..(t + 1) * m]);
    }
    for (r, (_, weight)) in rows.iter().enumerate() {
        let x = &s.inputs[r * m..(r + 1) * m];
        for t in 0..n_targets {
            let c = &s.targets[t * m..(t + 1) * m];
            let label = if t == 0 { 1.0 } else { 0.0 };
            let g = weight * (label - sigmoid(dot(x, c)));
            axpy(&mut s.grad_inputs[r * m..(r + 1) * m], g, c);
            axpy(&mut s.grad_targets[t * m..(t + 1) * m], g, x);
        }
    }
}

/// Applies the gradient held in `s` with step size `lr`.
pub(crate) fn ns_apply<P: Params + ?Sized>(params: &mut P, rows: &[(InputRow, f64)], lr: f64, s: &Scratch) {
    let m = params.dim();
    for (r, (row, _)) in rows.iter().enumerate() {
        params.add_input(*row, lr, &s.grad_inputs[r * m..(r + 1) * m]);
    }
    for (t, y) in s.target_ids.iter().enumerate() {
        params.add_ctx(*y, lr, &s.grad_targets[t * m..(t + 1) * m]);
    }
}

/// Active `(sense row, weight)` pairs: senses whose posterior exceeds `threshold`.
fn weighted_sense_rows(w: u32, senses: &SenseDistribution, threshold: f64, out: &mut Vec<(InputRow, f64)>) {
    out.clear();
    out.extend(
        senses
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &z)| z > threshold)
            .map(|(k, &z)| (InputRow::Sense(w, k), z)),
    );
}

/// Gradient of the posterior-weighted negative-sampling objective for one
/// English occurrence and one context word.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaGradient {
    /// `(sense, gradient)` for every sense above the threshold.
    pub senses: Vec<(usize, Vec<f64>)>,
    /// Gradient of each target context row: the positive first, then the
    /// negatives in order.
    pub contexts: Vec<(ContextWord, Vec<f64>)>,
}

pub(crate) fn theta_rows_and_gradient<P: Params + ?Sized>(
    params: &P,
    w: u32,
    senses: &SenseDistribution,
    threshold: f64,
    y: ContextWord,
    negatives: &[u32],
    s: &mut Scratch,
) -> Vec<(InputRow, f64)> {
    let mut rows = std::mem::take(&mut s.rows);
    weighted_sense_rows(w, senses, threshold, &mut rows);
    if !rows.is_empty() {
        ns_gradient(params, &rows, y, negatives, s);
    }
    rows
}

/// Analytic gradient of `Σ_{k: z_k > ε} z_k [log σ(x_k·c_y) + Σ_n log σ(-x_k·c_n)]`.
pub fn theta_gradient(
    model: &SenseModel,
    w: u32,
    senses: &SenseDistribution,
    y: ContextWord,
    negatives: &[u32],
) -> ThetaGradient {
    let mut s = Scratch::default();
    let rows = theta_rows_and_gradient(model, w, senses, model.config.sense_threshold, y, negatives, &mut s);
    let m = model.dim();
    if rows.is_empty() {
        return ThetaGradient {
            senses: Vec::new(),
            contexts: Vec::new(),
        };
    }
    ThetaGradient {
        senses: rows
            .iter()
            .enumerate()
            .map(|(r, (row, _))| match row {
                InputRow::Sense(_, k) => (*k, s.grad_inputs[r * m..(r + 1) * m].to_vec()),
                InputRow::Foreign(_) => unreachable!(),
            })
            .collect(),
        contexts: s
            .target_ids
            .iter()
            .enumerate()
            .map(|(t, y)| (*y, s.grad_targets[t * m..(t + 1) * m].to_vec()))
            .collect(),
    }
}

pub(crate) fn theta_step<P: Params + ?Sized>(
    params: &mut P,
    w: u32,
    senses: &SenseDistribution,
    threshold: f64,
    y: ContextWord,
    negatives: &[u32],
    lr: f64,
    s: &mut Scratch,
) {
    let rows = theta_rows_and_gradient(params, w, senses, threshold, y, negatives, s);
    if !rows.is_empty() {
        ns_apply(params, &rows, lr, s);
    }
    s.rows = rows;
}

/// One posterior-weighted negative-sampling step for English word `w`
/// against context `y`. Senses at or below the threshold are left untouched.
pub fn gradient_step_theta(
    model: &mut SenseModel,
    w: u32,
    senses: &SenseDistribution,
    y: ContextWord,
    negatives: &[u32],
    lr: f64,
) {
    let threshold = model.config.sense_threshold;
    theta_step(model, w, senses, threshold, y, negatives, lr, &mut Scratch::default());
}

pub(crate) fn skip_gram_step<P: Params + ?Sized>(
    params: &mut P,
    f: u32,
    y: ContextWord,
    negatives: &[u32],
    lr: f64,
    s: &mut Scratch,
) {
    let rows = [(InputRow::Foreign(f), 1.0)];
    ns_gradient(params, &rows, y, negatives, s);
    ns_apply(params, &rows, lr, s);
}

/// Standard single-vector negative-sampling update of foreign word `f`
/// against context `y`.
pub fn skip_gram_update(model: &mut SenseModel, f: u32, y: ContextWord, negatives: &[u32], lr: f64) {
    skip_gram_step(model, f, y, negatives, lr, &mut Scratch::default());
}
