use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{check_batch, to_f32_grid, NnError, Parameters};
use crate::dsp::ChannelMatrix;
use crate::rng::{stream, unit_f64};

pub const SVM_HIDDEN: usize = 128;

/// Identifies one training minibatch for the counter-based dropout mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DropoutKey {
    pub seed: u64,
    pub epoch: u64,
    pub batch: u64,
}

impl DropoutKey {
    /// Inverted-dropout multiplier for feature `feature` of batch item
    /// `item`: 0 when dropped, `1 / (1 - rate)` when kept.
    pub fn multiplier(&self, rate: f64, item: usize, feature: usize) -> f64 {
        if rate == 0.0 {
            return 1.0;
        }
        let u = unit_f64(self.seed, &[self.epoch, self.batch, item as u64, feature as u64]);
        if u < rate {
            0.0
        } else {
            1.0 / (1.0 - rate)
        }
    }
}

/// flatten → dropout → dense(in→128) → ReLU → linear scorer(128→1).
/// Hidden weights are laid out `[hidden][input]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmHead {
    pub in_features: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl SvmHead {
    pub fn zeros(in_features: usize, hidden: usize) -> Self {
        Self {
            in_features,
            hidden,
            w1: vec![0.0; hidden * in_features],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: vec![0.0],
        }
    }

    pub fn init(in_features: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = stream(seed, &[0x5A]);
        let mut m = Self::zeros(in_features, hidden);
        let b1 = libm::sqrt(6.0 / in_features as f64);
        for w in &mut m.w1 {
            *w = to_f32_grid(rng.random_range(-b1..b1));
        }
        let b2 = libm::sqrt(6.0 / hidden as f64);
        for w in &mut m.w2 {
            *w = to_f32_grid(rng.random_range(-b2..b2));
        }
        m
    }

    fn check_input(&self, x: &ChannelMatrix) -> Result<(), NnError> {
        if x.as_slice().len() != self.in_features {
            return Err(NnError::Shape {
                expected_rows: self.in_features,
                min_cols: 1,
                rows: x.rows(),
                cols: x.cols(),
            });
        }
        Ok(())
    }

    /// Hidden pre-activations; `mask(j)` scales input `j`.
    fn hidden_pre(&self, x: &[f64], mask: impl Fn(usize) -> f64) -> Vec<f64> {
        let dropped: Vec<f64> = x.iter().enumerate().map(|(j, v)| v * mask(j)).collect();
        (0..self.hidden)
            .map(|h| {
                let row = &self.w1[h * self.in_features..(h + 1) * self.in_features];
                self.b1[h] + row.iter().zip(&dropped).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    fn score_from_pre(&self, pre: &[f64]) -> f64 {
        self.b2[0] + pre.iter().zip(&self.w2).map(|(z, w)| z.max(0.0) * w).sum::<f64>()
    }

    /// Real-valued margin at inference (no dropout).
    pub fn score(&self, x: &ChannelMatrix) -> Result<f64, NnError> {
        self.check_input(x)?;
        Ok(self.score_from_pre(&self.hidden_pre(x.as_slice(), |_| 1.0)))
    }

    /// Score 0 is sober.
    pub fn predict(&self, x: &ChannelMatrix) -> Result<bool, NnError> {
        Ok(self.score(x)? > 0.0)
    }

    fn penalty(&self, l2: f64) -> f64 {
        let sq: f64 = self.w1.iter().chain(&self.w2).map(|w| w * w).sum();
        0.5 * l2 * sq
    }

    /// Mean hinge loss `max(0, 1 - y s)` with `y = ±1`, plus
    /// `l2 / 2 * (|W1|^2 + |w2|^2)`. With `dropout` set, the training-time
    /// mask for that minibatch is applied.
    pub fn loss(
        &self,
        batch: &[ChannelMatrix],
        labels: &[bool],
        l2: f64,
        dropout: Option<(DropoutKey, f64)>,
    ) -> Result<f64, NnError> {
        check_batch(batch.len(), labels.len())?;
        let mut total = 0.0;
        for (i, (x, &y)) in batch.iter().zip(labels).enumerate() {
            self.check_input(x)?;
            let pre = match dropout {
                Some((key, rate)) => self.hidden_pre(x.as_slice(), |j| key.multiplier(rate, i, j)),
                None => self.hidden_pre(x.as_slice(), |_| 1.0),
            };
            let s = self.score_from_pre(&pre);
            total += (1.0 - sign(y) * s).max(0.0);
        }
        Ok(total / batch.len() as f64 + self.penalty(l2))
    }

    /// Gradient of [`SvmHead::loss`] and the loss value.
    pub fn backward(
        &self,
        batch: &[ChannelMatrix],
        labels: &[bool],
        l2: f64,
        dropout: Option<(DropoutKey, f64)>,
    ) -> Result<(SvmHead, f64), NnError> {
        check_batch(batch.len(), labels.len())?;
        let scale = 1.0 / batch.len() as f64;
        let mut grad = SvmHead::zeros(self.in_features, self.hidden);
        let mut loss = 0.0;
        for (i, (x, &y)) in batch.iter().zip(labels).enumerate() {
            self.check_input(x)?;
            let mult: Vec<f64> = match dropout {
                Some((key, rate)) => (0..self.in_features).map(|j| key.multiplier(rate, i, j)).collect(),
                None => vec![1.0; self.in_features],
            };
            let input: Vec<f64> = x.as_slice().iter().zip(&mult).map(|(v, m)| v * m).collect();
            let pre = self.hidden_pre(&input, |_| 1.0);
            let s = self.score_from_pre(&pre);
            let yv = sign(y);
            let margin = yv * s;
            if margin >= 1.0 {
                continue;
            }
            loss += 1.0 - margin;
            let d_s = -yv * scale;
            grad.b2[0] += d_s;
            for h in 0..self.hidden {
                if pre[h] <= 0.0 {
                    continue;
                }
                grad.w2[h] += d_s * pre[h];
                let d_pre = d_s * self.w2[h];
                grad.b1[h] += d_pre;
                let row = &mut grad.w1[h * self.in_features..(h + 1) * self.in_features];
                for (g, v) in row.iter_mut().zip(&input) {
                    *g += d_pre * v;
                }
            }
        }
        for (g, w) in grad.w1.iter_mut().zip(&self.w1) {
            *g += l2 * w;
        }
        for (g, w) in grad.w2.iter_mut().zip(&self.w2) {
            *g += l2 * w;
        }
        loss = loss * scale + self.penalty(l2);
        if !loss.is_finite() {
            return Err(NnError::NonFinite {
                loss,
                context: alloc::format!("svm backward over batch of {}", batch.len()),
            });
        }
        Ok((grad, loss))
    }
}

fn sign(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

impl Parameters for SvmHead {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("hidden.weight", &self.w1[..]),
            ("hidden.bias", &self.b1[..]),
            ("scorer.weight", &self.w2[..]),
            ("scorer.bias", &self.b2[..]),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("hidden.weight", &mut self.w1[..]),
            ("hidden.bias", &mut self.b1[..]),
            ("scorer.weight", &mut self.w2[..]),
            ("scorer.bias", &mut self.b2[..]),
        ]
    }
}
