use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::svm::DropoutKey;
use super::{to_f32_grid, Cnn, NnError, Parameters, SvmHead, TrainConfig};
use crate::dsp::ChannelMatrix;
use crate::rng::stream;

const SHUFFLE_STREAM: u64 = 0x5F;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainOutcome {
    /// Full training-set loss after each epoch (inference mode).
    pub loss_curve: Vec<f64>,
}

fn check_classes(labels: &[bool]) -> Result<(), NnError> {
    let intoxicated = labels.iter().filter(|&&l| l).count();
    let sober = labels.len() - intoxicated;
    if sober == 0 || intoxicated == 0 {
        return Err(NnError::SingleClass { sober, intoxicated });
    }
    Ok(())
}

fn sgd_step<M: Parameters>(model: &mut M, grad: &M, lr: f64) {
    let grads = grad.tensors();
    for ((_, p), (_, g)) in model.tensors_mut().into_iter().zip(grads) {
        for (w, d) in p.iter_mut().zip(g) {
            *w = to_f32_grid(*w - lr * d);
        }
    }
}

/// Shared minibatch loop. `grad_fn` receives the batch members and the
/// `(epoch, batch)` index pair.
fn run<M, G, L>(
    model: &mut M,
    n: usize,
    labels: &[bool],
    cfg: &TrainConfig,
    seed: u64,
    mut grad_fn: G,
    full_loss: L,
) -> Result<TrainOutcome, NnError>
where
    M: Parameters,
    G: FnMut(&M, &[usize], u64, u64) -> Result<(M, f64), NnError>,
    L: Fn(&M) -> Result<f64, NnError>,
{
    cfg.validate()?;
    if n != labels.len() {
        return Err(NnError::LengthMismatch { inputs: n, labels: labels.len() });
    }
    check_classes(labels)?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut outcome = TrainOutcome::default();
    for epoch in 0..cfg.epochs as u64 {
        order.sort_unstable();
        order.shuffle(&mut stream(seed, &[SHUFFLE_STREAM, epoch]));
        for (b, members) in order.chunks(cfg.batch).enumerate() {
            let (grad, loss) = grad_fn(model, members, epoch, b as u64).map_err(|e| match e {
                NnError::NonFinite { loss, .. } => NnError::NonFinite {
                    loss,
                    context: alloc::format!("epoch {epoch}, batch {b}"),
                },
                other => other,
            })?;
            debug_assert!(loss.is_finite());
            sgd_step(model, &grad, cfg.lr);
        }
        let loss = full_loss(model)?;
        if !loss.is_finite() {
            return Err(NnError::NonFinite {
                loss,
                context: alloc::format!("end of epoch {epoch}"),
            });
        }
        outcome.loss_curve.push(loss);
    }
    Ok(outcome)
}

fn gather(windows: &[ChannelMatrix], labels: &[bool], members: &[usize]) -> (Vec<ChannelMatrix>, Vec<bool>) {
    members
        .iter()
        .map(|&i| (windows[i].clone(), labels[i]))
        .unzip()
}

/// Minibatch gradient descent on mean binary cross-entropy. Deterministic
/// for a fixed seed.
pub fn train_cnn(
    model: &mut Cnn,
    windows: &[ChannelMatrix],
    labels: &[bool],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome, NnError> {
    run(
        model,
        windows.len(),
        labels,
        cfg,
        seed,
        |m, members, _, _| {
            let (xs, ys) = gather(windows, labels, members);
            m.backward(&xs, &ys)
        },
        |m| m.loss(windows, labels),
    )
}

/// Minibatch gradient descent on the regularized hinge loss with input
/// dropout keyed by `(seed, epoch, batch, item)`.
pub fn train_svm(
    model: &mut SvmHead,
    windows: &[ChannelMatrix],
    labels: &[bool],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome, NnError> {
    run(
        model,
        windows.len(),
        labels,
        cfg,
        seed,
        |m, members, epoch, batch| {
            let (xs, ys) = gather(windows, labels, members);
            let key = DropoutKey { seed, epoch, batch };
            m.backward(&xs, &ys, cfg.l2, Some((key, cfg.dropout)))
        },
        |m| m.loss(windows, labels, cfg.l2, None),
    )
}
