use rand::Rng;

use crate::error::{Error, Result};

/// Unigram noise distribution for negative sampling, `P(w) ∝ count(w)^power`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseTable {
    ids: Vec<u32>,
    cumulative: Vec<f64>,
}

impl NoiseTable {
    /// Builds a table over `(id, count)` entries.
    pub fn new(entries: impl IntoIterator<Item = (u32, u64)>, power: f64) -> Result<Self> {
        if !(power >= 0.0 && power.is_finite()) {
            return Err(Error::Config(format!("noise power must be >= 0, got {power}")));
        }
        let (ids, weights): (Vec<u32>, Vec<f64>) = entries
            .into_iter()
            .map(|(id, count)| (id, (count as f64).powf(power)))
            .unzip();
        if ids.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc / total
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(NoiseTable { ids, cumulative })
    }

    /// Table over a dense count vector (ids `0..counts.len()`).
    pub fn from_counts(counts: &[u64], power: f64) -> Result<Self> {
        Self::new(counts.iter().enumerate().map(|(i, &c)| (i as u32, c)), power)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Probability of the entry at table position `pos`.
    pub fn probability_at(&self, pos: usize) -> f64 {
        let prev = if pos == 0 { 0.0 } else { self.cumulative[pos - 1] };
        self.cumulative[pos] - prev
    }

    /// Probability of drawing `id`, zero when absent.
    pub fn probability(&self, id: u32) -> f64 {
        self.ids
            .iter()
            .position(|&x| x == id)
            .map_or(0.0, |pos| self.probability_at(pos))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let pos = self.cumulative.partition_point(|&c| c <= u);
        self.ids[pos.min(self.ids.len() - 1)]
    }

    /// Draws `n` samples, redrawing any equal to `exclude`.
    ///
    /// A draw that keeps colliding after 100 attempts is skipped, so fewer
    /// than `n` ids may be returned.
    pub fn sample_excluding<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, exclude: u32, out: &mut Vec<u32>) {
        out.clear();
        for _ in 0..n {
            for _ in 0..100 {
                let id = self.sample(rng);
                if id != exclude {
                    out.push(id);
                    break;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn power_weighted_probabilities() {
        let table = NoiseTable::from_counts(&[8, 1], 0.75).unwrap();
        // 8^0.75 = 2^2.25 = 4.75682846001088...
        let a = 4.756_828_460_010_884_f64;
        assert!((table.probability(0) - a / (a + 1.0)).abs() < 1e-12);
        assert!((table.probability(0) - 0.8263).abs() < 1e-4);
    }

    #[test]
    fn zero_power_is_uniform() {
        let table = NoiseTable::from_counts(&[100, 5, 1, 7], 0.0).unwrap();
        for id in 0..4 {
            assert!((table.probability(id) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn single_word() {
        let table = NoiseTable::new([(42, 3)], 0.75).unwrap();
        assert_eq!(table.probability(42), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| table.sample(&mut rng) == 42));
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(NoiseTable::from_counts(&[], 0.75), Err(Error::EmptyVocabulary)));
    }

    #[test]
    fn exclusion_skips_after_repeated_collisions() {
        let table = NoiseTable::new([(7, 3)], 0.75).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut out = Vec::new();
        table.sample_excluding(&mut rng, 5, 7, &mut out);
        assert!(out.is_empty());
        let table = NoiseTable::from_counts(&[3, 3], 0.75).unwrap();
        table.sample_excluding(&mut rng, 5, 0, &mut out);
        assert_eq!(out, vec![1; 5]);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let counts: Vec<u64> = (1..500).map(|i| (i * 37 % 101) as u64 + 1).collect();
        let table = NoiseTable::from_counts(&counts, 0.75).unwrap();
        let total: f64 = (0..table.len()).map(|p| table.probability_at(p)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}
