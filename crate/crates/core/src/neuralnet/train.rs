//! Seeded mini-batch gradient descent.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LabeledDataset, Layer, MlpModel, NnError};

/// Standard deviations below this are replaced by 1 (constant features).
const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    /// Classical momentum coefficient; 0 gives plain SGD.
    pub momentum: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 300,
            seed: 0,
            validation_fraction: 0.2,
            momentum: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidDataset(format!("train config: {m}")));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be positive");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must be in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_acc: f64,
    pub val_acc: f64,
    /// Mean mini-batch loss per epoch, measured before each update.
    pub loss_curve: Vec<f64>,
    pub param_count: usize,
    pub n_train: usize,
    pub n_val: usize,
}

/// Per class, a shuffled `round(n * fraction)` samples (at least one, never
/// all) go to validation.
fn stratified_split(ds: &LabeledDataset, fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in 0..ds.class_labels.len() {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(rng);
        let n_val = ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len() - 1);
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn standardization(ds: &LabeledDataset, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n_feat = ds.inputs[rows[0]].len();
    let n = rows.len() as f64;
    let mut means = vec![0.0; n_feat];
    for &r in rows {
        means.iter_mut().zip(&ds.inputs[r]).for_each(|(m, v)| *m += v / n);
    }
    let mut vars = vec![0.0; n_feat];
    for &r in rows {
        vars.iter_mut()
            .zip(&ds.inputs[r])
            .zip(&means)
            .for_each(|((s, v), m)| *s += (v - m).powi(2) / n);
    }
    let stds = vars
        .into_iter()
        .map(|v| if v.sqrt() < MIN_STD { 1.0 } else { v.sqrt() })
        .collect();
    (means, stds)
}

fn init_layers(layer_sizes: &[usize], rng: &mut ChaCha8Rng) -> Vec<Layer> {
    layer_sizes
        .windows(2)
        .map(|p| {
            let (n_in, n_out) = (p[0], p[1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            let mut layer = Layer::zeros(n_in, n_out);
            layer.weights.iter_mut().for_each(|w| *w = rng.random_range(-limit..limit));
            layer
        })
        .collect()
}

fn accuracy(model: &MlpModel, ds: &LabeledDataset, rows: &[usize]) -> Result<f64, NnError> {
    let mut hits = 0usize;
    for &r in rows {
        if model.predict(&ds.inputs[r])? == ds.labels[r] {
            hits += 1;
        }
    }
    Ok(hits as f64 / rows.len() as f64)
}

/// Trains a fresh model. Deterministic for a given dataset, architecture and
/// config: the seed drives the split, the initialization and every shuffle,
/// in that order.
pub fn train(
    dataset: &LabeledDataset,
    layer_sizes: &[usize],
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport), NnError> {
    cfg.validate()?;
    dataset.validate()?;
    if layer_sizes.len() < 2 {
        return Err(NnError::BadArchitecture("need at least input and output sizes".into()));
    }
    let n_feat = dataset.feature_len().unwrap_or(0);
    if layer_sizes[0] != n_feat {
        return Err(NnError::ShapeMismatch {
            expected: layer_sizes[0],
            got: n_feat,
        });
    }
    let n_classes = dataset.class_labels.len();
    if layer_sizes[layer_sizes.len() - 1] != n_classes {
        return Err(NnError::ShapeMismatch {
            expected: layer_sizes[layer_sizes.len() - 1],
            got: n_classes,
        });
    }
    let counts = dataset.class_counts();
    if let Some((c, n)) = counts.iter().enumerate().find(|(_, &n)| n < 2) {
        return Err(NnError::InsufficientData(format!(
            "class {:?} has {n} samples, need at least 2",
            dataset.class_labels[c]
        )));
    }
    if n_classes < 2 {
        return Err(NnError::InsufficientData("need at least two classes".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut train_rows, val_rows) = stratified_split(dataset, cfg.validation_fraction, &mut rng);
    let (means, stds) = standardization(dataset, &train_rows);
    let mut model = MlpModel::from_parts(
        init_layers(layer_sizes, &mut rng),
        means,
        stds,
        dataset.class_labels.clone(),
    )?;

    let mut velocity: Vec<f64> = vec![0.0; model.param_count()];
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        train_rows.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in train_rows.chunks(cfg.batch_size) {
            let batch: Vec<(&[f64], usize)> = chunk
                .iter()
                .map(|&r| (dataset.inputs[r].as_slice(), dataset.labels[r]))
                .collect();
            let (loss, grads) = model.loss_and_gradients(&batch)?;
            epoch_loss += loss * chunk.len() as f64;
            let flat = grads
                .layers
                .iter()
                .flat_map(|l| l.weights.iter().chain(&l.biases).copied());
            for (i, (g, v)) in flat.zip(velocity.iter_mut()).enumerate() {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *model.param_mut(i).expect("gradient matches parameter count") += *v;
            }
        }
        loss_curve.push(epoch_loss / train_rows.len() as f64);
    }

    let report = TrainReport {
        train_acc: accuracy(&model, dataset, &train_rows)?,
        val_acc: accuracy(&model, dataset, &val_rows)?,
        loss_curve,
        param_count: model.param_count(),
        n_train: train_rows.len(),
        n_val: val_rows.len(),
    };
    Ok((model, report))
}
