use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::memory::ItemMemory;
use super::vector::{cosine_sim, Hypervector};
use super::HdcError;
use crate::dsp::ChannelMatrix;

/// Fixed-point scale of one unit of weight in the class accumulators.
/// Single-pass training adds each encoding with weight exactly 1, refinement
/// adds fractional weights rounded to multiples of `1 / WEIGHT_ONE`.
pub const WEIGHT_ONE: i64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HdcConfig {
    pub dim: usize,
    pub levels: usize,
    /// Required similarity margin between the true and competing class.
    pub alpha: f64,
    pub refine_epochs: usize,
}

impl Default for HdcConfig {
    fn default() -> Self {
        Self {
            dim: 3000,
            levels: 64,
            alpha: 0.2,
            refine_epochs: 20,
        }
    }
}

impl HdcConfig {
    pub fn validate(&self) -> Result<(), HdcError> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(HdcError::Config("alpha must lie in [0, 1)"));
        }
        if self.refine_epochs == 0 {
            return Err(HdcError::Config("refine_epochs must be positive"));
        }
        if self.dim == 0 {
            return Err(HdcError::Config("dimension must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: bool,
    /// `cos(h, intoxicated) - cos(h, sober)`.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RefineStats {
    /// Updates applied in each epoch that ran.
    pub updates_per_epoch: Vec<usize>,
}

impl RefineStats {
    pub fn epochs(&self) -> usize {
        self.updates_per_epoch.len()
    }
}

/// Two-class HDC model: item memory plus one integer accumulator per class
/// (index 0 = sober, 1 = intoxicated).
#[derive(Debug, Clone, PartialEq)]
pub struct HdcModel {
    config: HdcConfig,
    memory: ItemMemory,
    acc: [Vec<i64>; 2],
    counts: [u64; 2],
}

impl HdcModel {
    pub fn new(config: HdcConfig, channels: usize, seed: u64) -> Result<Self, HdcError> {
        config.validate()?;
        let memory = ItemMemory::new(channels, config.dim, config.levels, seed)?;
        Ok(Self::with_memory(config, memory))
    }

    pub fn with_memory(config: HdcConfig, memory: ItemMemory) -> Self {
        let dim = memory.dim();
        Self {
            config,
            memory,
            acc: [vec![0; dim], vec![0; dim]],
            counts: [0, 0],
        }
    }

    /// Reassembles a model from stored state.
    pub fn from_parts(
        config: HdcConfig,
        memory: ItemMemory,
        acc: [Vec<i64>; 2],
        counts: [u64; 2],
    ) -> Result<Self, HdcError> {
        config.validate()?;
        for a in &acc {
            if a.len() != memory.dim() {
                return Err(HdcError::DimensionMismatch {
                    left: memory.dim(),
                    right: a.len(),
                });
            }
        }
        Ok(Self {
            config,
            memory,
            acc,
            counts,
        })
    }

    pub fn config(&self) -> &HdcConfig {
        &self.config
    }

    pub fn memory(&self) -> &ItemMemory {
        &self.memory
    }

    pub fn memory_mut(&mut self) -> &mut ItemMemory {
        &mut self.memory
    }

    pub fn accumulators(&self) -> &[Vec<i64>; 2] {
        &self.acc
    }

    pub fn counts(&self) -> [u64; 2] {
        self.counts
    }

    pub fn is_trained(&self) -> bool {
        self.counts[0] > 0 && self.counts[1] > 0
    }

    /// Multiplies both accumulators by `factor`.
    pub fn scale_accumulators(&mut self, factor: i64) {
        for a in &mut self.acc {
            for v in a.iter_mut() {
                *v *= factor;
            }
        }
    }

    /// Sign pattern of a class accumulator.
    pub fn prototype(&self, intoxicated: bool) -> Hypervector {
        let signs: Vec<i32> = self.acc[intoxicated as usize]
            .iter()
            .map(|&v| v.signum() as i32)
            .collect();
        Hypervector::from_signs(&signs, self.memory.ties())
    }

    pub fn fit_ranges(&mut self, windows: &[ChannelMatrix]) -> Result<(), HdcError> {
        self.memory.fit_ranges(windows)
    }

    pub fn encode(&self, window: &ChannelMatrix) -> Result<Hypervector, HdcError> {
        self.memory.encode(window)
    }

    pub fn encode_all(&self, windows: &[ChannelMatrix]) -> Result<Vec<Hypervector>, HdcError> {
        windows.iter().map(|w| self.encode(w)).collect()
    }

    /// Resets the accumulators and adds every encoded window once to its
    /// class.
    pub fn train_single_pass(&mut self, windows: &[ChannelMatrix], labels: &[bool]) -> Result<(), HdcError> {
        check_lengths(windows.len(), labels.len())?;
        check_classes(labels)?;
        let encoded = self.encode_all(windows)?;
        self.train_encoded(&encoded, labels)
    }

    pub fn train_encoded(&mut self, encoded: &[Hypervector], labels: &[bool]) -> Result<(), HdcError> {
        check_lengths(encoded.len(), labels.len())?;
        check_classes(labels)?;
        let dim = self.memory.dim();
        self.acc = [vec![0; dim], vec![0; dim]];
        self.counts = [0, 0];
        for (h, &label) in encoded.iter().zip(labels) {
            self.check_dim(h)?;
            add_scaled(&mut self.acc[label as usize], h, WEIGHT_ONE);
            self.counts[label as usize] += 1;
        }
        Ok(())
    }

    /// Adaptive refinement passes over the training set; see
    /// [`HdcModel::update_encoded`] for the per-sample rule. Stops after an
    /// epoch without updates or after `refine_epochs` epochs.
    pub fn refine(&mut self, windows: &[ChannelMatrix], labels: &[bool]) -> Result<RefineStats, HdcError> {
        check_lengths(windows.len(), labels.len())?;
        let encoded = self.encode_all(windows)?;
        self.refine_encoded(&encoded, labels)
    }

    pub fn refine_encoded(&mut self, encoded: &[Hypervector], labels: &[bool]) -> Result<RefineStats, HdcError> {
        check_lengths(encoded.len(), labels.len())?;
        if !self.is_trained() {
            return Err(HdcError::NotTrained);
        }
        let mut stats = RefineStats::default();
        for _ in 0..self.config.refine_epochs {
            let mut updates = 0;
            for (h, &label) in encoded.iter().zip(labels) {
                if self.update_encoded(h, label)? {
                    updates += 1;
                }
            }
            stats.updates_per_epoch.push(updates);
            if updates == 0 {
                break;
            }
        }
        Ok(stats)
    }

    /// Single-sample online update using the refinement rule.
    pub fn online_update(&mut self, window: &ChannelMatrix, label: bool) -> Result<bool, HdcError> {
        let h = self.encode(window)?;
        self.update_encoded(&h, label)
    }

    /// The refinement rule. When the sample is misclassified or its margin
    /// `sim_true - sim_other` is below `alpha`, the encoding is added to the
    /// true class with weight `1 - sim_true` and subtracted from the
    /// competing class with weight `max(sim_other, 0)`. Returns whether an
    /// update happened.
    pub fn update_encoded(&mut self, h: &Hypervector, label: bool) -> Result<bool, HdcError> {
        self.check_dim(h)?;
        let sims = self.similarities(h);
        let (truth, other) = (label as usize, !label as usize);
        let margin = sims[truth] - sims[other];
        let predicted = decide(sims[1] - sims[0]);
        if predicted == label && margin >= self.config.alpha {
            return Ok(false);
        }
        let add = quantize_weight(1.0 - sims[truth]);
        let sub = quantize_weight(sims[other].max(0.0));
        add_scaled(&mut self.acc[truth], h, add);
        add_scaled(&mut self.acc[other], h, -sub);
        Ok(true)
    }

    /// Cosine similarity of `h` to each class accumulator; an all-zero
    /// accumulator scores 0.
    pub fn similarities(&self, h: &Hypervector) -> [f64; 2] {
        let sim = |acc: &[i64]| cosine_sim(h.as_slice(), acc).unwrap_or(0.0);
        [sim(&self.acc[0]), sim(&self.acc[1])]
    }

    pub fn predict(&self, window: &ChannelMatrix) -> Result<Prediction, HdcError> {
        if !self.is_trained() {
            return Err(HdcError::NotTrained);
        }
        let h = self.encode(window)?;
        self.predict_encoded(&h)
    }

    pub fn predict_encoded(&self, h: &Hypervector) -> Result<Prediction, HdcError> {
        if !self.is_trained() {
            return Err(HdcError::NotTrained);
        }
        self.check_dim(h)?;
        let sims = self.similarities(h);
        let score = sims[1] - sims[0];
        Ok(Prediction {
            label: decide(score),
            score,
        })
    }

    fn check_dim(&self, h: &Hypervector) -> Result<(), HdcError> {
        if h.dim() != self.memory.dim() {
            return Err(HdcError::DimensionMismatch {
                left: self.memory.dim(),
                right: h.dim(),
            });
        }
        Ok(())
    }
}

/// Score 0 is sober.
fn decide(score: f64) -> bool {
    score > 0.0
}

fn quantize_weight(w: f64) -> i64 {
    libm::round(w * WEIGHT_ONE as f64) as i64
}

fn add_scaled(acc: &mut [i64], h: &Hypervector, weight: i64) {
    if weight == 0 {
        return;
    }
    for (a, &x) in acc.iter_mut().zip(h.as_slice()) {
        *a += weight * x as i64;
    }
}

fn check_lengths(windows: usize, labels: usize) -> Result<(), HdcError> {
    if windows != labels {
        return Err(HdcError::LengthMismatch { windows, labels });
    }
    Ok(())
}

fn check_classes(labels: &[bool]) -> Result<(), HdcError> {
    let intoxicated = labels.iter().filter(|&&l| l).count();
    let sober = labels.len() - intoxicated;
    if sober == 0 || intoxicated == 0 {
        return Err(HdcError::MissingClass { sober, intoxicated });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::CHANNELS;
    use crate::rng::stream;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn small_config() -> HdcConfig {
        HdcConfig {
            dim: 1000,
            levels: 16,
            ..HdcConfig::default()
        }
    }

    fn noise_window(rng: &mut ChaCha8Rng, cols: usize, offset: f64) -> ChannelMatrix {
        let mut m = ChannelMatrix::zeros(CHANNELS, cols);
        for r in 0..CHANNELS {
            for v in m.row_mut(r) {
                let z: f64 = rng.sample(StandardNormal);
                *v = z + if r == 6 { offset } else { 0.0 };
            }
        }
        m
    }

    /// Two classes separated by a heart-rate offset.
    fn toy_set(seed: u64, n: usize, cols: usize) -> (Vec<ChannelMatrix>, Vec<bool>) {
        let mut rng = stream(seed, &[]);
        let labels: Vec<bool> = (0..n).map(|i| i % 2 == 1).collect();
        let windows = labels
            .iter()
            .map(|&l| noise_window(&mut rng, cols, if l { 1.5 } else { -1.5 }))
            .collect();
        (windows, labels)
    }

    fn fitted(config: HdcConfig, windows: &[ChannelMatrix]) -> HdcModel {
        let mut m = HdcModel::new(config, CHANNELS, 42).unwrap();
        m.fit_ranges(windows).unwrap();
        m
    }

    #[test]
    fn encoding_is_deterministic_and_bipolar() {
        let (ws, _) = toy_set(1, 2, 800);
        let m = fitted(HdcConfig::default(), &ws);
        let a = m.encode(&ws[0]).unwrap();
        assert_eq!(a, m.encode(&ws[0]).unwrap());
        assert!(a.is_bipolar());
        assert_eq!(a.dim(), 3000);
        let clone = fitted(HdcConfig::default(), &ws);
        assert_eq!(a, clone.encode(&ws[0]).unwrap());
    }

    #[test]
    fn encoding_is_local() {
        let mut rng = stream(2, &[]);
        let base = noise_window(&mut rng, 800, 0.0);
        let other = noise_window(&mut rng, 800, 0.0);
        let mut noisy = base.clone();
        for v in noisy.as_mut_slice() {
            let z: f64 = rng.sample(StandardNormal);
            *v += 0.01 * z;
        }
        let m = fitted(HdcConfig::default(), &[base.clone(), other.clone()]);
        let (e, en, eo) = (m.encode(&base).unwrap(), m.encode(&noisy).unwrap(), m.encode(&other).unwrap());
        let near = cosine_sim(e.as_slice(), en.as_slice()).unwrap();
        let far = cosine_sim(e.as_slice(), eo.as_slice()).unwrap();
        assert!(near > far, "near {near} far {far}");
    }

    #[test]
    fn single_sample_per_class_prototypes() {
        let (ws, labels) = toy_set(3, 2, 64);
        let mut m = fitted(small_config(), &ws);
        m.train_single_pass(&ws, &labels).unwrap();
        assert_eq!(m.prototype(false), m.encode(&ws[0]).unwrap());
        assert_eq!(m.prototype(true), m.encode(&ws[1]).unwrap());
        assert_eq!(m.counts(), [1, 1]);
    }

    #[test]
    fn single_pass_is_order_independent() {
        let (ws, labels) = toy_set(4, 30, 64);
        let mut a = fitted(small_config(), &ws);
        a.train_single_pass(&ws, &labels).unwrap();
        let mut order: Vec<usize> = (0..30).collect();
        order.reverse();
        order.swap(3, 17);
        let ws2: Vec<ChannelMatrix> = order.iter().map(|&i| ws[i].clone()).collect();
        let l2: Vec<bool> = order.iter().map(|&i| labels[i]).collect();
        let mut b = fitted(small_config(), &ws);
        b.train_single_pass(&ws2, &l2).unwrap();
        assert_eq!(a.accumulators(), b.accumulators());
    }

    #[test]
    fn missing_class_is_rejected() {
        let (ws, _) = toy_set(5, 4, 16);
        let mut m = fitted(small_config(), &ws);
        assert_eq!(
            m.train_single_pass(&ws, &[true; 4]),
            Err(HdcError::MissingClass { sober: 0, intoxicated: 4 })
        );
        assert_eq!(m.predict(&ws[0]), Err(HdcError::NotTrained));
    }

    #[test]
    fn refine_reaches_fixpoint_on_easy_data() {
        let (ws, labels) = toy_set(6, 40, 64);
        let mut m = fitted(HdcConfig { alpha: 0.0, ..small_config() }, &ws);
        m.train_single_pass(&ws, &labels).unwrap();
        let stats = m.refine(&ws, &labels).unwrap();
        assert_eq!(*stats.updates_per_epoch.last().unwrap(), 0);
        let before = m.clone();
        let again = m.refine(&ws, &labels).unwrap();
        assert_eq!(again.updates_per_epoch, vec![0]);
        assert_eq!(before, m);
    }

    #[test]
    fn refine_fits_training_set() {
        let (ws, labels) = toy_set(7, 60, 128);
        let mut m = fitted(small_config(), &ws);
        m.train_single_pass(&ws, &labels).unwrap();
        m.refine(&ws, &labels).unwrap();
        let correct = ws
            .iter()
            .zip(&labels)
            .filter(|(w, &l)| m.predict(w).unwrap().label == l)
            .count();
        assert!(correct as f64 / 60.0 >= 0.99);
    }

    #[test]
    fn flipped_labels_mirror_predictions() {
        let (ws, labels) = toy_set(8, 24, 64);
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let mut a = fitted(small_config(), &ws);
        let mut b = a.clone();
        a.train_single_pass(&ws, &labels).unwrap();
        a.refine(&ws, &labels).unwrap();
        b.train_single_pass(&ws, &flipped).unwrap();
        b.refine(&ws, &flipped).unwrap();
        let (probe, _) = toy_set(9, 20, 64);
        for w in &probe {
            let (pa, pb) = (a.predict(w).unwrap(), b.predict(w).unwrap());
            assert_eq!(pa.score, -pb.score);
            assert_ne!(pa.label, pb.label);
        }
    }

    #[test]
    fn prediction_is_scale_invariant_and_antisymmetric() {
        let (ws, labels) = toy_set(10, 20, 64);
        let mut m = fitted(small_config(), &ws);
        m.train_single_pass(&ws, &labels).unwrap();
        let mut scaled = m.clone();
        scaled.scale_accumulators(7);
        for w in &ws {
            let (p, q) = (m.predict(w).unwrap(), scaled.predict(w).unwrap());
            assert_eq!(p.label, q.label);
            assert!((p.score - q.score).abs() < 1e-12);
        }
        let [a0, a1] = m.accumulators().clone();
        let swapped = HdcModel::from_parts(*m.config(), m.memory().clone(), [a1, a0], [1, 1]).unwrap();
        for w in &ws {
            assert_eq!(m.predict(w).unwrap().score, -swapped.predict(w).unwrap().score);
        }
    }

    #[test]
    fn prototype_pattern_predicts_its_class() {
        let (ws, labels) = toy_set(11, 20, 64);
        let mut m = fitted(small_config(), &ws);
        m.train_single_pass(&ws, &labels).unwrap();
        let p = m.predict_encoded(&m.prototype(true)).unwrap();
        assert!(p.label);
    }

    #[test]
    fn online_update_matches_one_sample_refine() {
        let (ws, labels) = toy_set(12, 20, 64);
        let mut m = fitted(HdcConfig { refine_epochs: 1, ..small_config() }, &ws);
        m.train_single_pass(&ws, &labels).unwrap();
        // A sample presented with the wrong label always triggers the rule.
        let (w, label) = (&ws[3], !labels[3]);
        let mut online = m.clone();
        assert!(online.online_update(w, label).unwrap());
        let mut batch = m.clone();
        let h = batch.encode(w).unwrap();
        let stats = batch.refine_encoded(&[h], &[label]).unwrap();
        assert_eq!(stats.updates_per_epoch, vec![1]);
        assert_eq!(online, batch);
    }

    #[test]
    fn online_updates_converge() {
        let (ws, labels) = toy_set(13, 20, 64);
        let mut m = fitted(small_config(), &ws);
        m.train_single_pass(&ws, &labels).unwrap();
        let w = &ws[0];
        let label = !labels[0];
        let h = m.encode(w).unwrap();
        let mut steps = 0;
        while m.online_update(w, label).unwrap() {
            steps += 1;
            assert!(steps < 200, "no convergence");
        }
        let sims = m.similarities(&h);
        assert!(sims[label as usize] - sims[!label as usize] >= m.config().alpha);
        // Once satisfied, further updates are no-ops.
        let frozen = m.clone();
        assert!(!m.online_update(w, label).unwrap());
        assert_eq!(frozen, m);
    }
}
