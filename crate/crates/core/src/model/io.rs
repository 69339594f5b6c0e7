//! Binary model files and plain-text vector export.
//!
//! Binary layout, all little-endian: magic `PSNS`, format version (u32),
//! config, vocabulary, the four embedding matrices, stick counts, training
//! progress, and a CRC-64/XZ of everything before it.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crc::{Crc, Digest, CRC_64_XZ};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Matrix, Progress, SenseModel, StickStats, TrainConfig, Variant};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PSNS";
pub const FORMAT_VERSION: u32 = 1;

static CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

struct CrcWriter<'a, W: Write> {
    inner: W,
    digest: Digest<'a, u64>,
}

impl<W: Write> CrcWriter<'_, W> {
    fn bytes(&mut self, buf: &[u8]) -> std::io::Result<()> {
        self.digest.update(buf);
        self.inner.write_all(buf)
    }

    fn u8(&mut self, v: u8) -> std::io::Result<()> {
        self.bytes(&[v])
    }

    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn opt_f64(&mut self, v: Option<f64>) -> std::io::Result<()> {
        self.u8(v.is_some() as u8)?;
        self.f64(v.unwrap_or(0.0))
    }

    fn str(&mut self, s: &str) -> std::io::Result<()> {
        self.u32(s.len() as u32)?;
        self.bytes(s.as_bytes())
    }

    fn f64s(&mut self, data: &[f64]) -> std::io::Result<()> {
        self.u64(data.len() as u64)?;
        let mut buf = Vec::with_capacity(8 * 1024);
        for chunk in data.chunks(1024) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            self.bytes(&buf)?;
        }
        Ok(())
    }

    fn matrix(&mut self, m: &Matrix) -> std::io::Result<()> {
        self.u64(m.rows() as u64)?;
        self.u64(m.cols() as u64)?;
        self.f64s(m.as_slice())
    }
}

fn write_config<W: Write>(w: &mut CrcWriter<'_, W>, c: &TrainConfig) -> std::io::Result<()> {
    w.f64(c.alpha)?;
    w.u64(c.max_senses as u64)?;
    w.u64(c.dim as u64)?;
    w.u64(c.window as u64)?;
    w.u64(c.foreign_window as u64)?;
    w.f64(c.sense_threshold)?;
    w.f64(c.learning_rate)?;
    w.u32(c.epochs)?;
    w.u64(c.negatives as u64)?;
    w.f64(c.noise_power)?;
    w.u64(c.min_count)?;
    w.u8(c.variant.code())?;
    w.u64(c.seed)?;
    w.opt_f64(c.subsample)?;
    w.opt_f64(c.stick_decay)
}

/// Writes `model` to `path` in the binary format.
pub fn save_model(model: &SenseModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = CrcWriter {
        inner: BufWriter::new(file),
        digest: CRC64.digest(),
    };
    let io = |e| Error::io(path, e);
    (|| -> std::io::Result<()> {
        w.bytes(MAGIC)?;
        w.u32(FORMAT_VERSION)?;
        write_config(&mut w, &model.config)?;

        w.u64(model.vocab.en_len() as u64)?;
        for (word, count) in model.vocab.en_entries() {
            w.str(word)?;
            w.u64(count)?;
        }
        w.u64(model.vocab.fg_len() as u64)?;
        for (word, lang, count) in model.vocab.fg_entries() {
            w.str(word)?;
            w.str(lang)?;
            w.u64(count)?;
        }

        w.matrix(&model.sense)?;
        w.matrix(&model.ctx_en)?;
        w.matrix(&model.in_fg)?;
        w.matrix(&model.ctx_fg)?;

        w.u64(model.sticks.senses() as u64)?;
        w.f64s(model.sticks.raw())?;

        let p = &model.progress;
        w.u32(p.epochs_done)?;
        w.u64(p.tokens_done)?;
        w.bytes(&p.rng.get_seed())?;
        w.u64(p.rng.get_stream())?;
        w.bytes(&p.rng.get_word_pos().to_le_bytes())?;
        Ok(())
    })()
    .map_err(io)?;
    let crc = w.digest.finalize();
    w.inner.write_all(&crc.to_le_bytes()).map_err(io)?;
    w.inner.flush().map_err(io)
}

struct CrcReader<'a, R: Read> {
    inner: R,
    digest: Digest<'a, u64>,
}

fn format_err(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated file".into())
    } else {
        Error::Format(e.to_string())
    }
}

impl<R: Read> CrcReader<'_, R> {
    fn bytes(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(format_err)?;
        self.digest.update(buf);
        Ok(())
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.bytes(&mut buf)?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("size out of range".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn opt_f64(&mut self) -> Result<Option<f64>> {
        let flag = self.u8()?;
        let v = self.f64()?;
        Ok((flag != 0).then_some(v))
    }

    fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut buf = vec![0u8; len];
        self.bytes(&mut buf)?;
        String::from_utf8(buf).map_err(|_| Error::Format("invalid UTF-8 in vocabulary".into()))
    }

    fn f64s(&mut self, expected: usize) -> Result<Vec<f64>> {
        let len = self.usize()?;
        if len != expected {
            return Err(Error::Format(format!("expected {expected} values, found {len}")));
        }
        let mut data = Vec::with_capacity(len);
        let mut buf = vec![0u8; 8 * 1024];
        let mut left = len;
        while left > 0 {
            let n = left.min(1024);
            self.bytes(&mut buf[..8 * n])?;
            data.extend(buf[..8 * n].chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())));
            left -= n;
        }
        Ok(data)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let (r, c) = (self.usize()?, self.usize()?);
        if (r, c) != (rows, cols) {
            return Err(Error::Format(format!("matrix is {r}x{c}, expected {rows}x{cols}")));
        }
        Ok(Matrix::from_raw(rows, cols, self.f64s(rows * cols)?))
    }
}

fn read_config<R: Read>(r: &mut CrcReader<'_, R>) -> Result<TrainConfig> {
    Ok(TrainConfig {
        alpha: r.f64()?,
        max_senses: r.usize()?,
        dim: r.usize()?,
        window: r.usize()?,
        foreign_window: r.usize()?,
        sense_threshold: r.f64()?,
        learning_rate: r.f64()?,
        epochs: r.u32()?,
        negatives: r.usize()?,
        noise_power: r.f64()?,
        min_count: r.u64()?,
        variant: Variant::from_code(r.u8()?).ok_or_else(|| Error::Format("unknown variant code".into()))?,
        seed: r.u64()?,
        subsample: r.opt_f64()?,
        stick_decay: r.opt_f64()?,
    })
}

/// Reads a model written by [`save_model`], verifying magic, version and checksum.
pub fn load_model(path: impl AsRef<Path>) -> Result<SenseModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = CrcReader {
        inner: BufReader::new(file),
        digest: CRC64.digest(),
    };
    if &r.array::<4>()? != MAGIC {
        return Err(Error::Format("bad magic bytes; not a model file".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let config = read_config(&mut r)?;
    config.validate().map_err(|e| Error::Format(format!("stored config: {e}")))?;

    let n_en = r.usize()?;
    let mut en = Vec::with_capacity(n_en.min(1 << 24));
    for _ in 0..n_en {
        let word = r.str()?;
        en.push((word, r.u64()?));
    }
    let n_fg = r.usize()?;
    let mut fg = Vec::with_capacity(n_fg.min(1 << 24));
    for _ in 0..n_fg {
        let word = r.str()?;
        let lang = r.str()?;
        fg.push((word, lang, r.u64()?));
    }
    let vocab = Vocabulary::from_ordered(en, fg);

    let (t, m) = (config.max_senses, config.dim);
    let sense = r.matrix(n_en * t, m)?;
    let ctx_en = r.matrix(n_en, m)?;
    let in_fg = r.matrix(n_fg, m)?;
    let ctx_fg = r.matrix(n_fg, m)?;

    let senses = r.usize()?;
    if senses != t {
        return Err(Error::Format("stick statistics do not match max_senses".into()));
    }
    let sticks = StickStats::from_raw(t, r.f64s(n_en * t)?);

    let epochs_done = r.u32()?;
    let tokens_done = r.u64()?;
    let mut rng = ChaCha8Rng::from_seed(r.array()?);
    rng.set_stream(r.u64()?);
    rng.set_word_pos(u128::from_le_bytes(r.array()?));

    let computed = r.digest.finalize();
    let mut trailer = [0u8; 8];
    r.inner.read_exact(&mut trailer).map_err(format_err)?;
    if u64::from_le_bytes(trailer) != computed {
        return Err(Error::Format("checksum mismatch".into()));
    }
    let mut rest = [0u8; 1];
    if r.inner.read(&mut rest).map_err(format_err)? != 0 {
        return Err(Error::Format("trailing bytes after checksum".into()));
    }

    Ok(SenseModel {
        config,
        vocab,
        sense,
        ctx_en,
        in_fg,
        ctx_fg,
        sticks,
        progress: Progress {
            epochs_done,
            tokens_done,
            rng,
        },
    })
}

impl SenseModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_model(self, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        load_model(path)
    }
}

fn push_vector(line: &mut String, v: &[f64]) {
    use std::fmt::Write as _;
    for x in v {
        let _ = write!(line, " {x:.8e}");
    }
}

/// Writes active sense vectors as `word#k p_k v_1 .. v_m` and foreign vectors
/// as `word@lang v_1 .. v_m`, after a `<rows> <dim>` header.
pub fn export_text(model: &SenseModel, path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let mut lines = Vec::new();
    for w in 0..model.vocab.en_len() as u32 {
        let prior = model.expected_sense_prior(w);
        for k in model.active_senses(w) {
            let mut line = format!("{}#{} {:.8e}", model.vocab.en_word(w), k, prior[k]);
            push_vector(&mut line, model.sense_vector(w, k));
            lines.push(line);
        }
    }
    for f in 0..model.vocab.fg_len() as u32 {
        let (word, lang) = model.vocab.fg_word(f);
        let mut line = format!("{word}@{lang}");
        push_vector(&mut line, model.foreign_vector(f));
        lines.push(line);
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{} {}", lines.len(), model.dim()).map_err(io)?;
    for line in &lines {
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)?;
    Ok(lines.len())
}

/// One row of a text export.
#[derive(Clone, Debug, PartialEq)]
pub enum ExportRow {
    Sense {
        word: String,
        sense: usize,
        prob: f64,
        vector: Vec<f64>,
    },
    Foreign {
        word: String,
        lang: String,
        vector: Vec<f64>,
    },
}

impl ExportRow {
    pub fn vector(&self) -> &[f64] {
        match self {
            ExportRow::Sense { vector, .. } | ExportRow::Foreign { vector, .. } => vector,
        }
    }
}

/// Parses a file written by [`export_text`].
pub fn read_text_export(path: impl AsRef<Path>) -> Result<Vec<ExportRow>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |line: usize, msg: &str| Error::at_line(path, line, Error::Data(msg.to_string()));
    let header = lines.next().ok_or_else(|| bad(1, "missing header"))?.map_err(|e| Error::io(path, e))?;
    let mut parts = header.split_whitespace().map(str::parse::<usize>);
    let (rows, dim) = match (parts.next(), parts.next()) {
        (Some(Ok(r)), Some(Ok(d))) => (r, d),
        _ => return Err(bad(1, "header must be `<rows> <dim>`")),
    };
    let mut out = Vec::with_capacity(rows);
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split(' ');
        let key = fields.next().ok_or_else(|| bad(n, "empty line"))?;
        let nums: Vec<f64> = fields
            .map(str::parse::<f64>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(n, "non-numeric field"))?;
        let sense_key = key
            .rsplit_once('#')
            .and_then(|(w, k)| k.parse::<usize>().ok().map(|k| (w, k)));
        let row = match sense_key {
            Some((word, sense)) => {
                if nums.len() != dim + 1 {
                    return Err(bad(n, "wrong number of fields"));
                }
                ExportRow::Sense {
                    word: word.to_string(),
                    sense,
                    prob: nums[0],
                    vector: nums[1..].to_vec(),
                }
            }
            None => {
                let (word, lang) = key.rsplit_once('@').ok_or_else(|| bad(n, "unrecognized row key"))?;
                if nums.len() != dim {
                    return Err(bad(n, "wrong number of fields"));
                }
                ExportRow::Foreign {
                    word: word.to_string(),
                    lang: lang.to_string(),
                    vector: nums,
                }
            }
        };
        out.push(row);
    }
    if out.len() != rows {
        return Err(Error::Data(format!(
            "{}: header announces {rows} rows, found {}",
            path.display(),
            out.len()
        )));
    }
    Ok(out)
}
