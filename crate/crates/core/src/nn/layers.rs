use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::to_f32_grid;
use crate::dsp::ChannelMatrix;

/// Stride-1 convolution with zero "same" padding over `[channel][time]`
/// inputs. Weights are laid out `[filter][in_channel][tap]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub in_channels: usize,
    pub filters: usize,
    pub kernel: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn zeros(in_channels: usize, filters: usize, kernel: usize) -> Self {
        assert!(kernel % 2 == 1, "kernel must be odd for same padding");
        Self {
            in_channels,
            filters,
            kernel,
            weight: vec![0.0; filters * in_channels * kernel],
            bias: vec![0.0; filters],
        }
    }

    /// He-uniform initialization, zero bias.
    pub fn init<R: Rng + ?Sized>(in_channels: usize, filters: usize, kernel: usize, rng: &mut R) -> Self {
        let mut layer = Self::zeros(in_channels, filters, kernel);
        let bound = libm::sqrt(6.0 / (in_channels * kernel) as f64);
        for w in &mut layer.weight {
            *w = to_f32_grid(rng.random_range(-bound..bound));
        }
        layer
    }

    #[inline]
    fn w(&self, o: usize, c: usize) -> &[f64] {
        let start = (o * self.in_channels + c) * self.kernel;
        &self.weight[start..start + self.kernel]
    }

    pub fn forward(&self, input: &ChannelMatrix) -> ChannelMatrix {
        debug_assert_eq!(input.rows(), self.in_channels);
        let n = input.cols();
        let pad = (self.kernel / 2) as isize;
        let mut out = ChannelMatrix::zeros(self.filters, n);
        for o in 0..self.filters {
            let row = out.row_mut(o);
            row.iter_mut().for_each(|v| *v = self.bias[o]);
            for c in 0..self.in_channels {
                let x = input.row(c);
                for (j, &w) in self.w(o, c).iter().enumerate() {
                    // out[i] += w * x[i + j - pad] for every valid i.
                    let shift = j as isize - pad;
                    let lo = (-shift).max(0) as usize;
                    let hi = (n as isize - shift).min(n as isize).max(0) as usize;
                    if lo >= hi {
                        continue;
                    }
                    let src = &x[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
                    for (y, &xv) in row[lo..hi].iter_mut().zip(src) {
                        *y += w * xv;
                    }
                }
            }
        }
        out
    }

    /// Accumulates weight and bias gradients into `grad` and returns the
    /// gradient with respect to the input.
    pub fn backward(&self, input: &ChannelMatrix, d_out: &ChannelMatrix, grad: &mut Conv1d) -> ChannelMatrix {
        let n = input.cols();
        let pad = (self.kernel / 2) as isize;
        let mut d_in = ChannelMatrix::zeros(self.in_channels, n);
        for o in 0..self.filters {
            let g = d_out.row(o);
            grad.bias[o] += g.iter().sum::<f64>();
            for c in 0..self.in_channels {
                let x = input.row(c);
                let base = (o * self.in_channels + c) * self.kernel;
                for j in 0..self.kernel {
                    let shift = j as isize - pad;
                    let lo = (-shift).max(0) as usize;
                    let hi = (n as isize - shift).min(n as isize).max(0) as usize;
                    if lo >= hi {
                        continue;
                    }
                    let a = (lo as isize + shift) as usize;
                    let b = (hi as isize + shift) as usize;
                    let gw: f64 = g[lo..hi].iter().zip(&x[a..b]).map(|(p, q)| p * q).sum();
                    grad.weight[base + j] += gw;
                    let w = self.weight[base + j];
                    for (dx, &gv) in d_in.row_mut(c)[a..b].iter_mut().zip(&g[lo..hi]) {
                        *dx += w * gv;
                    }
                }
            }
        }
        d_in
    }
}

pub fn relu(x: &ChannelMatrix) -> ChannelMatrix {
    let mut out = x.clone();
    for v in out.as_mut_slice() {
        *v = v.max(0.0);
    }
    out
}

/// Gradient through ReLU given its pre-activation input.
pub fn relu_backward(pre: &ChannelMatrix, d_out: &ChannelMatrix) -> ChannelMatrix {
    let mut d = d_out.clone();
    for (g, &z) in d.as_mut_slice().iter_mut().zip(pre.as_slice()) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
    d
}

/// Non-overlapping max pooling with window 2; a trailing odd sample is
/// dropped. Returns the pooled matrix and the argmax column of each output.
pub fn maxpool2(x: &ChannelMatrix) -> (ChannelMatrix, Vec<usize>) {
    let half = x.cols() / 2;
    let mut out = ChannelMatrix::zeros(x.rows(), half);
    let mut arg = Vec::with_capacity(x.rows() * half);
    for r in 0..x.rows() {
        let src = x.row(r);
        let dst = out.row_mut(r);
        for i in 0..half {
            let (a, b) = (src[2 * i], src[2 * i + 1]);
            if b > a {
                dst[i] = b;
                arg.push(2 * i + 1);
            } else {
                dst[i] = a;
                arg.push(2 * i);
            }
        }
    }
    (out, arg)
}

pub fn maxpool2_backward(input_cols: usize, arg: &[usize], d_out: &ChannelMatrix) -> ChannelMatrix {
    let mut d = ChannelMatrix::zeros(d_out.rows(), input_cols);
    let half = d_out.cols();
    for r in 0..d_out.rows() {
        let g = d_out.row(r);
        let row = d.row_mut(r);
        for i in 0..half {
            row[arg[r * half + i]] += g[i];
        }
    }
    d
}

pub fn global_avg_pool(x: &ChannelMatrix) -> Vec<f64> {
    let n = x.cols() as f64;
    (0..x.rows()).map(|r| x.row(r).iter().sum::<f64>() / n).collect()
}

pub fn global_avg_pool_backward(cols: usize, d_out: &[f64]) -> ChannelMatrix {
    let mut d = ChannelMatrix::zeros(d_out.len(), cols);
    for (r, &g) in d_out.iter().enumerate() {
        let share = g / cols as f64;
        d.row_mut(r).iter_mut().for_each(|v| *v = share);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct definition of the same-padded convolution.
    fn conv_reference(layer: &Conv1d, x: &ChannelMatrix) -> ChannelMatrix {
        let n = x.cols() as isize;
        let pad = (layer.kernel / 2) as isize;
        let mut out = ChannelMatrix::zeros(layer.filters, x.cols());
        for o in 0..layer.filters {
            for i in 0..n {
                let mut acc = layer.bias[o];
                for c in 0..layer.in_channels {
                    for j in 0..layer.kernel as isize {
                        let p = i + j - pad;
                        if (0..n).contains(&p) {
                            acc += layer.weight[(o * layer.in_channels + c) * layer.kernel + j as usize]
                                * x.get(c, p as usize);
                        }
                    }
                }
                out.row_mut(o)[i as usize] = acc;
            }
        }
        out
    }

    #[test]
    fn conv_matches_definition() {
        let mut rng = crate::rng::stream(1, &[]);
        for kernel in [3, 5, 7] {
            let mut layer = Conv1d::init(3, 4, kernel, &mut rng);
            layer.bias = vec![0.1, -0.2, 0.3, 0.0];
            let mut x = ChannelMatrix::zeros(3, 11);
            for v in x.as_mut_slice() {
                *v = rng.random_range(-1.0..1.0);
            }
            let a = layer.forward(&x);
            let b = conv_reference(&layer, &x);
            for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_wider_than_input() {
        let mut rng = crate::rng::stream(2, &[]);
        let layer = Conv1d::init(1, 1, 7, &mut rng);
        let x = ChannelMatrix::from_rows(&[vec![1.0, 2.0]]);
        let a = layer.forward(&x);
        let b = conv_reference(&layer, &x);
        assert_eq!(a.cols(), 2);
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn pooling_shapes_and_routing() {
        let x = ChannelMatrix::from_rows(&[vec![1.0, 3.0, 2.0, 0.0, 9.0]]);
        let (y, arg) = maxpool2(&x);
        assert_eq!(y.row(0), &[3.0, 2.0]);
        assert_eq!(arg, vec![1, 2]);
        let d = maxpool2_backward(5, &arg, &ChannelMatrix::from_rows(&[vec![1.0, 1.0]]));
        assert_eq!(d.row(0), &[0.0, 1.0, 1.0, 0.0, 0.0]);
    }
}
