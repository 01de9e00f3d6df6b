use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::NnError;

/// Feature vectors with class indices into `class_labels`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_labels: Vec<String>,
}

/// One line of the dataset file.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRecord {
    features: Vec<f64>,
    label: usize,
    class: String,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn feature_len(&self) -> Option<usize> {
        self.inputs.first().map(Vec::len)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_labels.len()];
        for &l in &self.labels {
            if let Some(c) = counts.get_mut(l) {
                *c += 1;
            }
        }
        counts
    }

    /// Structural checks: equal lengths, uniform feature length, labels in
    /// range and finite features.
    pub fn validate(&self) -> Result<(), NnError> {
        if self.inputs.len() != self.labels.len() {
            return Err(NnError::InvalidDataset(format!(
                "{} inputs but {} labels",
                self.inputs.len(),
                self.labels.len()
            )));
        }
        let n = self.feature_len().unwrap_or(0);
        if let Some(i) = self.inputs.iter().position(|x| x.len() != n) {
            return Err(NnError::InvalidDataset(format!("sample {i} has a different feature length")));
        }
        if let Some(i) = self.inputs.iter().position(|x| x.iter().any(|v| !v.is_finite())) {
            return Err(NnError::InvalidDataset(format!("sample {i} has a non-finite feature")));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.class_labels.len()) {
            return Err(NnError::InvalidDataset(format!("label {l} out of range")));
        }
        Ok(())
    }

    /// One JSON record per sample: `{"features":[...],"label":i,"class":"name"}`.
    pub fn write_jsonl<W: Write>(&self, mut sink: W) -> Result<(), NnError> {
        for (x, &label) in self.inputs.iter().zip(&self.labels) {
            let rec = SampleRecord {
                features: x.clone(),
                label,
                class: self.class_labels[label].clone(),
            };
            serde_json::to_writer(&mut sink, &rec).map_err(std::io::Error::from)?;
            sink.write_all(b"\n")?;
        }
        sink.flush()?;
        Ok(())
    }

    /// Reads the format written by [`write_jsonl`](Self::write_jsonl). The
    /// label indices define class order; every index must carry one name.
    pub fn read_jsonl<R: BufRead>(source: R) -> Result<Self, NnError> {
        let mut names: BTreeMap<usize, String> = BTreeMap::new();
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SampleRecord = serde_json::from_str(&line)
                .map_err(|e| NnError::InvalidDataset(format!("line {}: {e}", i + 1)))?;
            match names.get(&rec.label) {
                Some(n) if *n != rec.class => {
                    return Err(NnError::InvalidDataset(format!(
                        "line {}: label {} named both {n:?} and {:?}",
                        i + 1,
                        rec.label,
                        rec.class
                    )))
                }
                Some(_) => {}
                None => {
                    names.insert(rec.label, rec.class);
                }
            }
            inputs.push(rec.features);
            labels.push(rec.label);
        }
        if names.keys().copied().ne(0..names.len()) {
            return Err(NnError::InvalidDataset("label indices are not contiguous from 0".into()));
        }
        let ds = Self {
            inputs,
            labels,
            class_labels: names.into_values().collect(),
        };
        ds.validate()?;
        Ok(ds)
    }
}
