use std::sync::atomic::{AtomicU64, Ordering};

use super::{axpy, InputRow};
use crate::model::{sticks::StickStats, ContextWord, Matrix, SenseModel};

/// Row-level access to the trainable parameters.
///
/// Implemented by [`SenseModel`] for deterministic single-threaded training and
/// by [`AtomicParams`] for lock-free parallel training.
pub(crate) trait Params {
    fn dim(&self) -> usize;
    fn read_input(&self, row: InputRow, out: &mut [f64]);
    fn read_ctx(&self, y: ContextWord, out: &mut [f64]);
    fn add_input(&mut self, row: InputRow, a: f64, x: &[f64]);
    fn add_ctx(&mut self, y: ContextWord, a: f64, x: &[f64]);
    fn read_counts(&self, w: u32, out: &mut [f64]);
    fn observe(&mut self, w: u32, posterior: &[f64], decay: Option<f64>);
}

impl SenseModel {
    fn input_row(&self, row: InputRow) -> &[f64] {
        match row {
            InputRow::Sense(w, k) => self.sense_vector(w, k),
            InputRow::Foreign(f) => self.in_fg.row(f as usize),
        }
    }

    fn input_row_mut(&mut self, row: InputRow) -> &mut [f64] {
        match row {
            InputRow::Sense(w, k) => self.sense_vector_mut(w, k),
            InputRow::Foreign(f) => self.in_fg.row_mut(f as usize),
        }
    }
}

impl Params for SenseModel {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn read_input(&self, row: InputRow, out: &mut [f64]) {
        out.copy_from_slice(self.input_row(row));
    }

    fn read_ctx(&self, y: ContextWord, out: &mut [f64]) {
        out.copy_from_slice(self.context_vector(y));
    }

    fn add_input(&mut self, row: InputRow, a: f64, x: &[f64]) {
        axpy(self.input_row_mut(row), a, x);
    }

    fn add_ctx(&mut self, y: ContextWord, a: f64, x: &[f64]) {
        axpy(self.context_vector_mut(y), a, x);
    }

    fn read_counts(&self, w: u32, out: &mut [f64]) {
        out.copy_from_slice(self.sticks.counts(w));
    }

    fn observe(&mut self, w: u32, posterior: &[f64], decay: Option<f64>) {
        self.sticks.observe(w, posterior, decay);
    }
}

fn to_atomic(data: &[f64]) -> Vec<AtomicU64> {
    data.iter().map(|x| AtomicU64::new(x.to_bits())).collect()
}

fn from_atomic(data: &[AtomicU64]) -> Vec<f64> {
    data.iter().map(|x| f64::from_bits(x.load(Ordering::Relaxed))).collect()
}

/// Shared parameters with relaxed per-coordinate reads and writes.
///
/// Concurrent updates to one coordinate may be lost; there is no tearing and
/// no locking.
pub(crate) struct AtomicParams {
    dim: usize,
    senses: usize,
    sense: Vec<AtomicU64>,
    ctx_en: Vec<AtomicU64>,
    in_fg: Vec<AtomicU64>,
    ctx_fg: Vec<AtomicU64>,
    sticks: Vec<AtomicU64>,
}

impl AtomicParams {
    pub fn from_model(model: &SenseModel) -> Self {
        AtomicParams {
            dim: model.config.dim,
            senses: model.config.max_senses,
            sense: to_atomic(model.sense.as_slice()),
            ctx_en: to_atomic(model.ctx_en.as_slice()),
            in_fg: to_atomic(model.in_fg.as_slice()),
            ctx_fg: to_atomic(model.ctx_fg.as_slice()),
            sticks: to_atomic(model.sticks.raw()),
        }
    }

    /// Copies the shared state back into `model`.
    pub fn store_into(&self, model: &mut SenseModel) {
        let m = self.dim;
        model.sense = Matrix::from_raw(model.sense.rows(), m, from_atomic(&self.sense));
        model.ctx_en = Matrix::from_raw(model.ctx_en.rows(), m, from_atomic(&self.ctx_en));
        model.in_fg = Matrix::from_raw(model.in_fg.rows(), m, from_atomic(&self.in_fg));
        model.ctx_fg = Matrix::from_raw(model.ctx_fg.rows(), m, from_atomic(&self.ctx_fg));
        model.sticks = StickStats::from_raw(self.senses, from_atomic(&self.sticks));
    }

    fn input(&self, row: InputRow) -> &[AtomicU64] {
        let m = self.dim;
        match row {
            InputRow::Sense(w, k) => {
                let r = w as usize * self.senses + k;
                &self.sense[r * m..(r + 1) * m]
            }
            InputRow::Foreign(f) => &self.in_fg[f as usize * m..(f as usize + 1) * m],
        }
    }

    fn ctx(&self, y: ContextWord) -> &[AtomicU64] {
        let m = self.dim;
        match y {
            ContextWord::En(id) => &self.ctx_en[id as usize * m..(id as usize + 1) * m],
            ContextWord::Fg(id) => &self.ctx_fg[id as usize * m..(id as usize + 1) * m],
        }
    }
}

fn load_row(row: &[AtomicU64], out: &mut [f64]) {
    for (o, a) in out.iter_mut().zip(row) {
        *o = f64::from_bits(a.load(Ordering::Relaxed));
    }
}

fn add_row(row: &[AtomicU64], a: f64, x: &[f64]) {
    for (cell, xi) in row.iter().zip(x) {
        let v = f64::from_bits(cell.load(Ordering::Relaxed)) + a * xi;
        cell.store(v.to_bits(), Ordering::Relaxed);
    }
}

impl Params for &AtomicParams {
    fn dim(&self) -> usize {
        self.dim
    }

    fn read_input(&self, row: InputRow, out: &mut [f64]) {
        load_row(self.input(row), out);
    }

    fn read_ctx(&self, y: ContextWord, out: &mut [f64]) {
        load_row(self.ctx(y), out);
    }

    fn add_input(&mut self, row: InputRow, a: f64, x: &[f64]) {
        add_row(self.input(row), a, x);
    }

    fn add_ctx(&mut self, y: ContextWord, a: f64, x: &[f64]) {
        add_row(self.ctx(y), a, x);
    }

    fn read_counts(&self, w: u32, out: &mut [f64]) {
        let t = self.senses;
        load_row(&self.sticks[w as usize * t..(w as usize + 1) * t], out);
    }

    fn observe(&mut self, w: u32, posterior: &[f64], decay: Option<f64>) {
        let t = self.senses;
        let cells = &self.sticks[w as usize * t..(w as usize + 1) * t];
        for (cell, p) in cells.iter().zip(posterior) {
            let mut v = f64::from_bits(cell.load(Ordering::Relaxed));
            if let Some(g) = decay {
                v *= 1.0 - g;
            }
            cell.store((v + p).to_bits(), Ordering::Relaxed);
        }
    }
}
