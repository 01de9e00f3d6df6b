//! Versioned JSON weight file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Layer, MlpModel, NnError};

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    /// One row per output unit.
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRecord {
    version: u64,
    layer_sizes: Vec<usize>,
    class_labels: Vec<String>,
    feature_means: Vec<f64>,
    feature_stds: Vec<f64>,
    layers: Vec<LayerRecord>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u64,
}

/// Writes the model as a single JSON line. Output is a pure function of the
/// model, so equal models give byte-identical files.
pub fn save<W: Write>(model: &MlpModel, mut sink: W) -> Result<(), NnError> {
    let record = ModelRecord {
        version: MODEL_FORMAT_VERSION,
        layer_sizes: model.layer_sizes(),
        class_labels: model.class_labels().to_vec(),
        feature_means: model.feature_means().to_vec(),
        feature_stds: model.feature_stds().to_vec(),
        layers: model
            .layers()
            .iter()
            .map(|l| LayerRecord {
                w: l.weights.chunks_exact(l.n_in).map(<[f64]>::to_vec).collect(),
                b: l.biases.clone(),
            })
            .collect(),
    };
    serde_json::to_writer(&mut sink, &record).map_err(std::io::Error::from)?;
    sink.write_all(b"\n")?;
    Ok(())
}

pub fn load<R: Read>(mut source: R) -> Result<MlpModel, NnError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| NnError::CorruptFile(e.to_string()))?;
    let probe: VersionProbe = serde_json::from_str(&text).map_err(|e| NnError::CorruptFile(e.to_string()))?;
    if probe.version != MODEL_FORMAT_VERSION {
        return Err(NnError::VersionMismatch { found: probe.version });
    }
    let rec: ModelRecord = serde_json::from_str(&text).map_err(|e| NnError::CorruptFile(e.to_string()))?;
    if rec.layer_sizes.len() != rec.layers.len() + 1 {
        return Err(NnError::CorruptFile(format!(
            "{} layer sizes declared for {} layers",
            rec.layer_sizes.len(),
            rec.layers.len()
        )));
    }
    let mut layers = Vec::with_capacity(rec.layers.len());
    for (i, (lr, dims)) in rec.layers.into_iter().zip(rec.layer_sizes.windows(2)).enumerate() {
        let (n_in, n_out) = (dims[0], dims[1]);
        if lr.w.len() != n_out || lr.b.len() != n_out || lr.w.iter().any(|row| row.len() != n_in) {
            return Err(NnError::CorruptFile(format!(
                "layer {i} does not match declared shape {n_in}x{n_out}"
            )));
        }
        layers.push(Layer {
            n_in,
            n_out,
            weights: lr.w.concat(),
            biases: lr.b,
        });
    }
    MlpModel::from_parts(layers, rec.feature_means, rec.feature_stds, rec.class_labels)
        .map_err(|e| NnError::CorruptFile(e.to_string()))
}

pub fn save_file(model: &MlpModel, path: &Path) -> Result<(), NnError> {
    let mut w = BufWriter::new(File::create(path)?);
    save(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_file(path: &Path) -> Result<MlpModel, NnError> {
    load(BufReader::new(File::open(path)?))
}
