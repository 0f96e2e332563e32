use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::layers::{
    global_avg_pool, global_avg_pool_backward, maxpool2, maxpool2_backward, relu, relu_backward, Conv1d,
};
use super::{bce_with_logit, check_batch, sigmoid, to_f32_grid, NnError, Parameters};
use crate::dsp::ChannelMatrix;
use crate::rng::stream;

pub const CNN_FILTERS: usize = 32;
pub const CNN_KERNELS: [usize; 3] = [3, 5, 7];
/// Three pool-by-2 stages need at least 8 samples.
const MIN_LEN: usize = 8;

/// conv(k=3) → ReLU → pool2 → conv(k=5) → ReLU → pool2 → conv(k=7) → ReLU →
/// pool2 → global average pool → dense(32→1) → sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cnn {
    pub conv: [Conv1d; 3],
    pub head_weight: Vec<f64>,
    pub head_bias: Vec<f64>,
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct CnnTrace {
    /// Input to each conv block.
    pub inputs: [ChannelMatrix; 3],
    /// Conv outputs before ReLU.
    pub pre: [ChannelMatrix; 3],
    pub pool_arg: [Vec<usize>; 3],
    /// Output of the last pooling stage.
    pub pooled: ChannelMatrix,
    pub features: Vec<f64>,
    pub logit: f64,
}

impl CnnTrace {
    /// Sample count after each of the three pooling stages.
    pub fn stage_lengths(&self) -> [usize; 3] {
        [self.inputs[1].cols(), self.inputs[2].cols(), self.pooled.cols()]
    }
}

impl Cnn {
    pub fn zeros(in_channels: usize) -> Self {
        Self {
            conv: [
                Conv1d::zeros(in_channels, CNN_FILTERS, CNN_KERNELS[0]),
                Conv1d::zeros(CNN_FILTERS, CNN_FILTERS, CNN_KERNELS[1]),
                Conv1d::zeros(CNN_FILTERS, CNN_FILTERS, CNN_KERNELS[2]),
            ],
            head_weight: vec![0.0; CNN_FILTERS],
            head_bias: vec![0.0],
        }
    }

    pub fn init(in_channels: usize, seed: u64) -> Self {
        let mut rng = stream(seed, &[0xC0]);
        let conv = [
            Conv1d::init(in_channels, CNN_FILTERS, CNN_KERNELS[0], &mut rng),
            Conv1d::init(CNN_FILTERS, CNN_FILTERS, CNN_KERNELS[1], &mut rng),
            Conv1d::init(CNN_FILTERS, CNN_FILTERS, CNN_KERNELS[2], &mut rng),
        ];
        let bound = libm::sqrt(6.0 / CNN_FILTERS as f64);
        let head_weight = (0..CNN_FILTERS)
            .map(|_| to_f32_grid(rng.random_range(-bound..bound)))
            .collect();
        Self {
            conv,
            head_weight,
            head_bias: vec![0.0],
        }
    }

    pub fn in_channels(&self) -> usize {
        self.conv[0].in_channels
    }

    fn check_input(&self, x: &ChannelMatrix) -> Result<(), NnError> {
        if x.rows() != self.in_channels() || x.cols() < MIN_LEN {
            return Err(NnError::Shape {
                expected_rows: self.in_channels(),
                min_cols: MIN_LEN,
                rows: x.rows(),
                cols: x.cols(),
            });
        }
        Ok(())
    }

    pub fn trace(&self, x: &ChannelMatrix) -> Result<CnnTrace, NnError> {
        self.check_input(x)?;
        let mut inputs: Vec<ChannelMatrix> = Vec::with_capacity(3);
        let mut pre: Vec<ChannelMatrix> = Vec::with_capacity(3);
        let mut args: Vec<Vec<usize>> = Vec::with_capacity(3);
        let mut current = x.clone();
        for layer in &self.conv {
            let z = layer.forward(&current);
            let (pooled, arg) = maxpool2(&relu(&z));
            inputs.push(core::mem::replace(&mut current, pooled));
            pre.push(z);
            args.push(arg);
        }
        let features = global_avg_pool(&current);
        let logit = self.head_bias[0]
            + features
                .iter()
                .zip(&self.head_weight)
                .map(|(f, w)| f * w)
                .sum::<f64>();
        let [i0, i1, i2]: [ChannelMatrix; 3] = inputs.try_into().expect("three blocks");
        let [p0, p1, p2]: [ChannelMatrix; 3] = pre.try_into().expect("three blocks");
        let [a0, a1, a2]: [Vec<usize>; 3] = args.try_into().expect("three blocks");
        Ok(CnnTrace {
            inputs: [i0, i1, i2],
            pre: [p0, p1, p2],
            pool_arg: [a0, a1, a2],
            pooled: current,
            features,
            logit,
        })
    }

    pub fn logit(&self, x: &ChannelMatrix) -> Result<f64, NnError> {
        Ok(self.trace(x)?.logit)
    }

    /// Probability of the intoxicated class.
    pub fn forward(&self, x: &ChannelMatrix) -> Result<f64, NnError> {
        Ok(sigmoid(self.logit(x)?))
    }

    /// Mean binary cross-entropy over a batch.
    pub fn loss(&self, batch: &[ChannelMatrix], labels: &[bool]) -> Result<f64, NnError> {
        check_batch(batch.len(), labels.len())?;
        let mut total = 0.0;
        for (x, &y) in batch.iter().zip(labels) {
            total += bce_with_logit(self.logit(x)?, y);
        }
        Ok(total / batch.len() as f64)
    }

    /// Gradient of the mean binary cross-entropy with respect to every
    /// parameter, returned in a zero-initialized model of the same shape,
    /// together with the loss.
    pub fn backward(&self, batch: &[ChannelMatrix], labels: &[bool]) -> Result<(Cnn, f64), NnError> {
        check_batch(batch.len(), labels.len())?;
        let scale = 1.0 / batch.len() as f64;
        let mut grad = Cnn::zeros(self.in_channels());
        let mut loss = 0.0;
        for (x, &y) in batch.iter().zip(labels) {
            let tr = self.trace(x)?;
            loss += bce_with_logit(tr.logit, y);
            let d_logit = (sigmoid(tr.logit) - if y { 1.0 } else { 0.0 }) * scale;
            grad.head_bias[0] += d_logit;
            for (g, f) in grad.head_weight.iter_mut().zip(&tr.features) {
                *g += d_logit * f;
            }
            let d_features: Vec<f64> = self.head_weight.iter().map(|w| w * d_logit).collect();
            let mut d = global_avg_pool_backward(tr.pooled.cols(), &d_features);
            for b in (0..3).rev() {
                let d_relu = maxpool2_backward(tr.pre[b].cols(), &tr.pool_arg[b], &d);
                let d_pre = relu_backward(&tr.pre[b], &d_relu);
                d = self.conv[b].backward(&tr.inputs[b], &d_pre, &mut grad.conv[b]);
            }
        }
        loss *= scale;
        if !loss.is_finite() {
            return Err(NnError::NonFinite {
                loss,
                context: alloc::format!("cnn backward over batch of {}", batch.len()),
            });
        }
        Ok((grad, loss))
    }
}

impl Parameters for Cnn {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("conv1.weight", &self.conv[0].weight[..]),
            ("conv1.bias", &self.conv[0].bias[..]),
            ("conv2.weight", &self.conv[1].weight[..]),
            ("conv2.bias", &self.conv[1].bias[..]),
            ("conv3.weight", &self.conv[2].weight[..]),
            ("conv3.bias", &self.conv[2].bias[..]),
            ("head.weight", &self.head_weight[..]),
            ("head.bias", &self.head_bias[..]),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let [c1, c2, c3] = &mut self.conv;
        vec![
            ("conv1.weight", &mut c1.weight[..]),
            ("conv1.bias", &mut c1.bias[..]),
            ("conv2.weight", &mut c2.weight[..]),
            ("conv2.bias", &mut c2.bias[..]),
            ("conv3.weight", &mut c3.weight[..]),
            ("conv3.bias", &mut c3.bias[..]),
            ("head.weight", &mut self.head_weight[..]),
            ("head.bias", &mut self.head_bias[..]),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_input(seed: u64, rows: usize, cols: usize) -> ChannelMatrix {
        let mut rng = stream(seed, &[]);
        let mut m = ChannelMatrix::zeros(rows, cols);
        for v in m.as_mut_slice() {
            *v = rng.random_range(-1.0..1.0);
        }
        m
    }

    #[test]
    fn zero_model_outputs_half() {
        let m = Cnn::zeros(7);
        assert_eq!(m.forward(&random_input(1, 7, 800)).unwrap(), 0.5);
    }

    #[test]
    fn full_size_stage_lengths() {
        let m = Cnn::init(7, 1);
        let tr = m.trace(&random_input(2, 7, 800)).unwrap();
        assert_eq!(tr.stage_lengths(), [400, 200, 100]);
        assert_eq!(tr.features.len(), CNN_FILTERS);
        let p = sigmoid(tr.logit);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let m = Cnn::init(7, 1);
        assert!(matches!(m.forward(&ChannelMatrix::zeros(6, 800)), Err(NnError::Shape { .. })));
        assert!(matches!(m.forward(&ChannelMatrix::zeros(7, 7)), Err(NnError::Shape { .. })));
    }

    #[test]
    fn parameter_count() {
        let m = Cnn::init(7, 1);
        let expected = 32 * 7 * 3 + 32 + 32 * 32 * 5 + 32 + 32 * 32 * 7 + 32 + 32 + 1;
        assert_eq!(m.parameter_count(), expected);
        assert!(m.flat().iter().all(|&v| v == v as f32 as f64));
    }

    #[test]
    fn stationary_point_has_zero_gradient() {
        let m = Cnn::zeros(2);
        let x = ChannelMatrix::from_vec(2, 32, vec![0.7; 64]);
        let (g, loss) = m.backward(&[x.clone(), x], &[true, false]).unwrap();
        assert!((loss - core::f64::consts::LN_2).abs() < 1e-12);
        assert!(g.flat().iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn duplicated_batch_has_same_gradient() {
        let m = Cnn::init(2, 3);
        let xs = [random_input(4, 2, 32), random_input(5, 2, 32)];
        let ls = [true, false];
        let (g1, l1) = m.backward(&xs, &ls).unwrap();
        let doubled = [xs[0].clone(), xs[1].clone(), xs[0].clone(), xs[1].clone()];
        let (g2, l2) = m.backward(&doubled, &[true, false, true, false]).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.flat().iter().zip(g2.flat()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_batch_is_rejected() {
        assert_eq!(Cnn::init(2, 0).backward(&[], &[]).unwrap_err(), NnError::EmptyBatch);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn stage_lengths_follow_pooling(len in 8usize..300, seed in any::<u64>()) {
            let m = Cnn::init(2, seed);
            let tr = m.trace(&random_input(seed, 2, len)).unwrap();
            prop_assert_eq!(tr.pre[0].cols(), len);
            prop_assert_eq!(tr.stage_lengths(), [len / 2, len / 4, len / 8]);
        }
    }
}
