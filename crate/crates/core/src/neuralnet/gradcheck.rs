//! Finite-difference verification of [`MlpModel::loss_and_gradients`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Gradients, MlpModel, NnError};

/// Denominator floor for the relative error, so that parameters with
/// vanishing gradients are compared absolutely.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

fn flat(grads: &Gradients) -> Vec<f64> {
    grads
        .layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
        .collect()
}

/// Largest `|analytic - numeric| / max(|analytic|, |numeric|, floor)` over
/// every parameter, using central differences with the given step.
pub fn max_relative_error(model: &MlpModel, batch: &[(&[f64], usize)], step: f64) -> Result<f64, NnError> {
    let analytic = flat(&model.loss_and_gradients(batch)?.1);
    let mut probe = model.clone();
    let loss_at = |m: &MlpModel| m.loss_and_gradients(batch).map(|(l, _)| l);
    let mut worst = 0.0f64;
    for (i, a) in analytic.iter().enumerate() {
        let orig = *probe.param_mut(i).expect("index within parameter count");
        *probe.param_mut(i).unwrap() = orig + step;
        let up = loss_at(&probe)?;
        *probe.param_mut(i).unwrap() = orig - step;
        let down = loss_at(&probe)?;
        *probe.param_mut(i).unwrap() = orig;
        let numeric = (up - down) / (2.0 * step);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// A model with weights, biases and standardization drawn uniformly from
/// fixed ranges. For gradient checks and tests.
pub fn random_model(layer_sizes: &[usize], seed: u64) -> MlpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_out = *layer_sizes.last().expect("non-empty layer sizes");
    let labels = (0..n_out).map(|i| format!("class_{i}")).collect();
    let mut m = MlpModel::zeroed(layer_sizes, labels).expect("valid layer sizes");
    for l in m.layers_mut() {
        l.weights
            .iter_mut()
            .chain(l.biases.iter_mut())
            .for_each(|v| *v = rng.random_range(-1.0..1.0));
    }
    let n = layer_sizes[0];
    let means = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
    let stds = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    m.set_standardization(means, stds);
    m
}
