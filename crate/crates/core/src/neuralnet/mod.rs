//! Small fully-connected classifiers: inference, backpropagation, training
//! and the weight-file format.

mod dataset;
pub mod gradcheck;
mod io;
mod train;

pub use dataset::LabeledDataset;
pub use io::{load, load_file, save, save_file, MODEL_FORMAT_VERSION};
pub use train::{train, TrainConfig, TrainReport};

use thiserror::Error;

/// Wrist classifier shape: 42 hand coordinates, one hidden layer, 3 classes.
pub const WRIST_LAYERS: [usize; 3] = [42, 24, 3];
/// Elbow classifier shape: 9 arm features, one hidden layer, 3 classes.
pub const ELBOW_LAYERS: [usize; 3] = [9, 34, 3];

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid architecture: {0}")]
    BadArchitecture(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("unsupported model format version {found}")]
    VersionMismatch { found: u64 },
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `Σ (n_in · n_out + n_out)` over consecutive layer pairs.
pub fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
}

/// One dense layer. `weights` is row-major with one row per output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.n_in).zip(&self.biases).map(|(row, b)| {
            row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b
        }));
    }
}

/// Per-parameter gradients, shaped like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

/// Dense ReLU network with softmax output and built-in input standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
    feature_means: Vec<f64>,
    feature_stds: Vec<f64>,
    class_labels: Vec<String>,
}

impl MlpModel {
    /// Assembles a model, checking that every shape chains.
    pub fn from_parts(
        layers: Vec<Layer>,
        feature_means: Vec<f64>,
        feature_stds: Vec<f64>,
        class_labels: Vec<String>,
    ) -> Result<Self, NnError> {
        let first = layers
            .first()
            .ok_or_else(|| NnError::BadArchitecture("no layers".into()))?;
        for (i, l) in layers.iter().enumerate() {
            if l.n_in == 0 || l.n_out == 0 || l.weights.len() != l.n_in * l.n_out || l.biases.len() != l.n_out {
                return Err(NnError::BadArchitecture(format!("layer {i} has inconsistent shape")));
            }
        }
        if let Some(i) = layers.windows(2).position(|p| p[0].n_out != p[1].n_in) {
            return Err(NnError::BadArchitecture(format!("layers {i} and {} do not chain", i + 1)));
        }
        let n_in = first.n_in;
        if feature_means.len() != n_in || feature_stds.len() != n_in {
            return Err(NnError::BadArchitecture("standardization length differs from input size".into()));
        }
        if feature_stds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(NnError::BadArchitecture("feature stds must be positive".into()));
        }
        let n_out = layers.last().map_or(0, |l| l.n_out);
        if class_labels.len() != n_out {
            return Err(NnError::BadArchitecture(format!(
                "{n_out} outputs but {} class labels",
                class_labels.len()
            )));
        }
        Ok(Self {
            layers,
            feature_means,
            feature_stds,
            class_labels,
        })
    }

    /// A model with every weight and bias zero and identity standardization.
    pub fn zeroed(layer_sizes: &[usize], class_labels: Vec<String>) -> Result<Self, NnError> {
        if layer_sizes.len() < 2 {
            return Err(NnError::BadArchitecture("need at least input and output sizes".into()));
        }
        let layers = layer_sizes.windows(2).map(|p| Layer::zeros(p[0], p[1])).collect();
        let n = layer_sizes[0];
        Self::from_parts(layers, vec![0.0; n], vec![1.0; n], class_labels)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Parameters in storage order: per layer, weights then biases.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases).copied())
    }

    pub fn param_mut(&mut self, index: usize) -> Option<&mut f64> {
        let mut rest = index;
        for l in &mut self.layers {
            let n = l.weights.len() + l.biases.len();
            if rest < n {
                let n_w = l.weights.len();
                return Some(if rest < n_w { &mut l.weights[rest] } else { &mut l.biases[rest - n_w] });
            }
            rest -= n;
        }
        None
    }

    pub fn feature_means(&self) -> &[f64] {
        &self.feature_means
    }

    pub fn feature_stds(&self) -> &[f64] {
        &self.feature_stds
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].n_in)
            .chain(self.layers.iter().map(|l| l.n_out))
            .collect()
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.layer_sizes())
    }

    pub(crate) fn set_standardization(&mut self, means: Vec<f64>, stds: Vec<f64>) {
        self.feature_means = means;
        self.feature_stds = stds;
    }

    pub fn standardize(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        if x.len() != self.input_size() {
            return Err(NnError::ShapeMismatch {
                expected: self.input_size(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.feature_means)
            .zip(&self.feature_stds)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }

    /// Pre-softmax outputs for a raw (unstandardized) input.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        let z = self.standardize(x)?;
        Ok(self.logits_standardized(&z, None))
    }

    /// Runs the layers on an already standardized input. When `trace` is
    /// given it receives every layer's input activation.
    fn logits_standardized(&self, z: &[f64], mut trace: Option<&mut Vec<Vec<f64>>>) -> Vec<f64> {
        let mut act = z.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&act, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            let input = std::mem::replace(&mut act, std::mem::take(&mut next));
            if let Some(t) = trace.as_deref_mut() {
                t.push(input);
            }
        }
        act
    }

    /// Class probabilities for a raw input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Mean cross-entropy over `batch` and its gradient with respect to every
    /// weight and bias. Inputs are raw; the stored standardization is applied
    /// and held fixed.
    pub fn loss_and_gradients(&self, batch: &[(&[f64], usize)]) -> Result<(f64, Gradients), NnError> {
        if batch.is_empty() {
            return Err(NnError::ShapeMismatch { expected: 1, got: 0 });
        }
        let mut grads = Gradients {
            layers: self.layers.iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect(),
        };
        let mut total = 0.0;
        let mut acts = Vec::with_capacity(self.layers.len());
        for &(x, label) in batch {
            if label >= self.n_classes() {
                return Err(NnError::ShapeMismatch {
                    expected: self.n_classes(),
                    got: label + 1,
                });
            }
            let z = self.standardize(x)?;
            acts.clear();
            let logits = self.logits_standardized(&z, Some(&mut acts));
            let lse = log_sum_exp(&logits);
            total += lse - logits[label];
            // dL/dlogits = softmax - onehot
            let mut delta: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
            delta[label] -= 1.0;
            for (i, layer) in self.layers.iter().enumerate().rev() {
                let input = &acts[i];
                let g = &mut grads.layers[i];
                for (o, d) in delta.iter().enumerate() {
                    g.biases[o] += d;
                    let row = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    row.iter_mut().zip(input).for_each(|(gw, a)| *gw += d * a);
                }
                if i > 0 {
                    // backprop through the weights, then the ReLU of the previous layer
                    delta = (0..layer.n_in)
                        .map(|j| {
                            if input[j] > 0.0 {
                                delta.iter().enumerate().map(|(o, d)| d * layer.weights[o * layer.n_in + j]).sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        let n = batch.len() as f64;
        for g in &mut grads.layers {
            g.weights.iter_mut().chain(g.biases.iter_mut()).for_each(|v| *v /= n);
        }
        Ok((total / n, grads))
    }

    /// Index of the most probable class; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize, NnError> {
        Ok(argmax(&self.logits(x)?))
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}
