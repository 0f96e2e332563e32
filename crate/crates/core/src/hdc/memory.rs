use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::vector::{bind, Hypervector};
use super::HdcError;
use crate::dsp::ChannelMatrix;
use crate::rng::stream;

const KEY_STREAM: u64 = 1;
const LEVEL_STREAM: u64 = 2;
const TIE_STREAM: u64 = 3;

/// Lower and upper percentiles used for the quantization range.
const RANGE_PERCENTILES: (f64, f64) = (0.01, 0.99);

/// Builds a chain of `levels` correlated hypervectors. Level 0 is random and
/// each subsequent level flips a fresh, disjoint batch of
/// `D / (2 (L - 1))` positions, so neighbours are nearly identical and the
/// two ends are close to orthogonal.
pub fn make_level_vectors(levels: usize, dim: usize, seed: u64) -> Result<Vec<Hypervector>, HdcError> {
    if levels < 2 || levels > dim / 2 {
        return Err(HdcError::BadLevels { levels, dim });
    }
    let mut rng = stream(seed, &[LEVEL_STREAM]);
    let mut order: Vec<usize> = (0..dim).collect();
    order.shuffle(&mut rng);
    let batch = dim / (2 * (levels - 1));

    let mut current = Hypervector::random(dim, &mut rng);
    let mut out = Vec::with_capacity(levels);
    out.push(current.clone());
    for step in 0..levels - 1 {
        for &idx in &order[step * batch..(step + 1) * batch] {
            current.flip(idx);
        }
        out.push(current.clone());
    }
    Ok(out)
}

/// Channel keys, value levels, and per-channel quantization ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemMemory {
    dim: usize,
    seed: u64,
    keys: Vec<Hypervector>,
    levels: Vec<Hypervector>,
    ties: Hypervector,
    ranges: Option<Vec<(f64, f64)>>,
    /// `keys[c] * levels[l]` for every channel and level, laid out as
    /// `[c][l][dim]`.
    bound: Vec<i8>,
}

impl ItemMemory {
    pub fn new(channels: usize, dim: usize, levels: usize, seed: u64) -> Result<Self, HdcError> {
        if channels == 0 || channels > i16::MAX as usize {
            return Err(HdcError::Config("channel count must lie in 1..=32767"));
        }
        let level_vectors = make_level_vectors(levels, dim, seed)?;
        let keys: Vec<Hypervector> = (0..channels)
            .map(|c| Hypervector::random(dim, &mut stream(seed, &[KEY_STREAM, c as u64])))
            .collect();
        let ties = Hypervector::random(dim, &mut stream(seed, &[TIE_STREAM]));
        let mut bound = Vec::with_capacity(channels * levels * dim);
        for key in &keys {
            for level in &level_vectors {
                bound.extend_from_slice(bind(key, level)?.as_slice());
            }
        }
        Ok(Self {
            dim,
            seed,
            keys,
            levels: level_vectors,
            ties,
            ranges: None,
            bound,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn channels(&self) -> usize {
        self.keys.len()
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn keys(&self) -> &[Hypervector] {
        &self.keys
    }

    pub fn levels(&self) -> &[Hypervector] {
        &self.levels
    }

    pub fn ties(&self) -> &Hypervector {
        &self.ties
    }

    pub fn ranges(&self) -> Option<&[(f64, f64)]> {
        self.ranges.as_deref()
    }

    pub fn set_ranges(&mut self, ranges: Vec<(f64, f64)>) -> Result<(), HdcError> {
        if ranges.len() != self.channels() {
            return Err(HdcError::ChannelMismatch {
                expected: self.channels(),
                got: ranges.len(),
            });
        }
        if ranges.iter().any(|(lo, hi)| !lo.is_finite() || !hi.is_finite() || lo > hi) {
            return Err(HdcError::Config("quantization ranges must be finite with lo <= hi"));
        }
        self.ranges = Some(ranges);
        Ok(())
    }

    /// Sets each channel's range to its 1st..99th percentile over the
    /// training windows.
    pub fn fit_ranges(&mut self, windows: &[ChannelMatrix]) -> Result<(), HdcError> {
        let channels = self.channels();
        let mut ranges = Vec::with_capacity(channels);
        for c in 0..channels {
            let mut values: Vec<f64> = Vec::new();
            for w in windows {
                if w.rows() != channels {
                    return Err(HdcError::ChannelMismatch {
                        expected: channels,
                        got: w.rows(),
                    });
                }
                values.extend(w.row(c).iter().copied().filter(|v| v.is_finite()));
            }
            if values.is_empty() {
                return Err(HdcError::Unfitted);
            }
            let lo = percentile(&mut values, RANGE_PERCENTILES.0);
            let hi = percentile(&mut values, RANGE_PERCENTILES.1);
            ranges.push((lo, hi));
        }
        self.set_ranges(ranges)
    }

    /// Level index for `value` on channel `channel`, clamped to the range.
    pub fn quantize(&self, channel: usize, value: f64) -> Result<usize, HdcError> {
        let ranges = self.ranges.as_ref().ok_or(HdcError::Unfitted)?;
        let (lo, hi) = ranges[channel];
        Ok(quantize(value, lo, hi, self.levels.len()))
    }

    /// Key-value encoding of a window:
    /// `sign( sum_t rho^t( sum_c key_c * level(x[c][t]) ) )`.
    pub fn encode(&self, window: &ChannelMatrix) -> Result<Hypervector, HdcError> {
        let ranges = self.ranges.as_ref().ok_or(HdcError::Unfitted)?;
        let channels = self.channels();
        if window.rows() != channels {
            return Err(HdcError::ChannelMismatch {
                expected: channels,
                got: window.rows(),
            });
        }
        let dim = self.dim;
        let n_levels = self.levels.len();
        // Channels are summed per timestep first, then rotated into the
        // accumulator once. The explicit wrapping adds cannot wrap (|tmp| <=
        // channels, |acc| <= channels * cols) and keep the loops vectorized
        // when overflow checks are on.
        let mut acc = vec![0i32; dim];
        let mut tmp = vec![0i16; dim];
        for t in 0..window.cols() {
            tmp.fill(0);
            for (c, &(lo, hi)) in ranges.iter().enumerate() {
                let level = quantize(window.get(c, t), lo, hi, n_levels);
                let start = (c * n_levels + level) * dim;
                for (a, &x) in tmp.iter_mut().zip(&self.bound[start..start + dim]) {
                    *a = a.wrapping_add(x as i16);
                }
            }
            let shift = t % dim;
            let (head, tail) = tmp.split_at(dim - shift);
            for (a, &x) in acc[shift..].iter_mut().zip(head) {
                *a = a.wrapping_add(x as i32);
            }
            for (a, &x) in acc[..shift].iter_mut().zip(tail) {
                *a = a.wrapping_add(x as i32);
            }
        }
        Ok(Hypervector::from_signs(&acc, &self.ties))
    }
}

fn quantize(value: f64, lo: f64, hi: f64, levels: usize) -> usize {
    let top = (levels - 1) as f64;
    if !(hi > lo) {
        return if value > hi { levels - 1 } else { 0 };
    }
    // NaN lands on level 0.
    let pos = ((value - lo) / (hi - lo) * top).clamp(0.0, top);
    if pos.is_nan() {
        return 0;
    }
    libm::round(pos) as usize
}

/// Nearest-rank percentile; reorders `values`.
fn percentile(values: &mut [f64], p: f64) -> f64 {
    let idx = libm::round(p * (values.len() - 1) as f64) as usize;
    let (_, v, _) = values.select_nth_unstable_by(idx, f64::total_cmp);
    *v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdc::cosine_sim;

    fn cos(a: &Hypervector, b: &Hypervector) -> f64 {
        cosine_sim(a.as_slice(), b.as_slice()).unwrap()
    }

    #[test]
    fn level_chain_geometry() {
        let levels = make_level_vectors(64, 3000, 11).unwrap();
        assert_eq!(levels.len(), 64);
        assert!((cos(&levels[5], &levels[5]) - 1.0).abs() < 1e-12);
        // 63 steps of 23 flips: 1 - 2 * 1449 / 3000.
        let ends = cos(&levels[0], &levels[63]);
        assert!((ends - (1.0 - 2.0 * 1449.0 / 3000.0)).abs() < 1e-12);
        assert!(ends.abs() < 0.05);
        for i in 0..64 {
            for j in i + 1..64 {
                if j + 1 < 64 {
                    assert!(cos(&levels[i], &levels[j + 1]) <= cos(&levels[i], &levels[j]) + 0.05);
                }
            }
        }
    }

    #[test]
    fn level_count_limits() {
        assert!(matches!(make_level_vectors(1, 3000, 0), Err(HdcError::BadLevels { .. })));
        assert!(matches!(make_level_vectors(1501, 3000, 0), Err(HdcError::BadLevels { .. })));
        assert!(make_level_vectors(1500, 3000, 0).is_ok());
    }

    #[test]
    fn keys_are_quasi_orthogonal_and_seeded() {
        let m = ItemMemory::new(7, 3000, 64, 5).unwrap();
        for i in 0..7 {
            for j in i + 1..7 {
                assert!(cos(&m.keys()[i], &m.keys()[j]).abs() < 0.1);
            }
        }
        assert_eq!(m, ItemMemory::new(7, 3000, 64, 5).unwrap());
        assert_ne!(m.keys(), ItemMemory::new(7, 3000, 64, 6).unwrap().keys());
    }

    #[test]
    fn quantize_clamps() {
        let mut m = ItemMemory::new(1, 200, 8, 0).unwrap();
        assert_eq!(m.quantize(0, 0.0), Err(HdcError::Unfitted));
        m.set_ranges(vec![(-1.0, 1.0)]).unwrap();
        assert_eq!(m.quantize(0, -5.0), Ok(0));
        assert_eq!(m.quantize(0, 5.0), Ok(7));
        assert_eq!(m.quantize(0, -1.0), Ok(0));
        assert_eq!(m.quantize(0, 1.0), Ok(7));
        assert_eq!(m.quantize(0, 0.0), Ok(4));
    }

    #[test]
    fn unfitted_encode_fails() {
        let m = ItemMemory::new(7, 300, 8, 0).unwrap();
        assert_eq!(m.encode(&ChannelMatrix::zeros(7, 10)), Err(HdcError::Unfitted));
    }

    #[test]
    fn percentile_ranges() {
        let mut m = ItemMemory::new(1, 200, 8, 0).unwrap();
        let row: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        m.fit_ranges(&[ChannelMatrix::from_rows(&[row])]).unwrap();
        assert_eq!(m.ranges().unwrap(), &[(1.0, 99.0)]);
    }
}
