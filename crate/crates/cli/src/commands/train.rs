use std::path::PathBuf;

use anyhow::Context;
use cellist_core::neuralnet::{self, LabeledDataset, NnError, TrainConfig, TrainReport, ELBOW_LAYERS, WRIST_LAYERS};
use cellist_core::session::sha256_hex;
use cellist_core::synth::{self, SynthSpec, SynthTask};
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Wrist,
    Elbow,
}

impl Task {
    fn synth(self) -> SynthTask {
        match self {
            Self::Wrist => SynthTask::Wrist,
            Self::Elbow => SynthTask::Elbow,
        }
    }

    fn default_layers(self) -> Vec<usize> {
        match self {
            Self::Wrist => WRIST_LAYERS.to_vec(),
            Self::Elbow => ELBOW_LAYERS.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub task: Task,
    /// Train on generated data, e.g. `--synth n=1000 seed=7 sigma=0.03`.
    #[arg(long, num_args = 1.., value_delimiter = ',', conflicts_with = "dataset", required_unless_present = "dataset")]
    pub synth: Vec<String>,
    /// Labeled dataset (JSON lines with `features` and `label`).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Layer sizes, input first, e.g. `42,24,3`.
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    /// Training seed; defaults to the synth seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the report as JSON here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the training data as JSON lines here.
    #[arg(long)]
    pub export_dataset: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct TrainSummary {
    pub task: &'static str,
    pub layer_sizes: Vec<usize>,
    pub param_count: usize,
    pub train_acc: f64,
    pub val_acc: f64,
    pub n_train: usize,
    pub n_val: usize,
    pub model_sha256: String,
    pub config: TrainConfig,
    pub loss_curve: Vec<f64>,
}

fn parse_synth(task: Task, items: &[String]) -> Result<SynthSpec, CliError> {
    let mut spec = SynthSpec::new(task.synth(), 1000, 0);
    for item in items {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::user(format!("--synth expects key=value, got {item:?}")))?;
        let bad = |e: &dyn std::fmt::Display| CliError::user(format!("--synth {key}: {e}"));
        match key {
            "n" | "n_per_class" => spec.n_per_class = value.parse().map_err(|e| bad(&e))?,
            "seed" => spec.seed = value.parse().map_err(|e| bad(&e))?,
            "sigma" | "noise_sigma" => spec.noise_sigma = value.parse().map_err(|e| bad(&e))?,
            _ => return Err(CliError::user(format!("unknown --synth key {key:?}; use n, seed, sigma"))),
        }
    }
    spec.validate().map_err(CliError::user)?;
    Ok(spec)
}

fn nn_error(e: NnError) -> CliError {
    match e {
        NnError::ShapeMismatch { .. } | NnError::BadArchitecture(_) | NnError::InvalidDataset(_) | NnError::InsufficientData(_) => {
            CliError::user(e)
        }
        other => CliError::Internal(other.into()),
    }
}

pub struct Trained {
    pub model: neuralnet::MlpModel,
    pub report: TrainReport,
    pub config: TrainConfig,
    pub layer_sizes: Vec<usize>,
    pub dataset: LabeledDataset,
}

pub fn train(args: &TrainArgs) -> Result<Trained, CliError> {
    let (dataset, synth_seed) = match &args.dataset {
        Some(path) => {
            let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let ds = LabeledDataset::read_jsonl(std::io::BufReader::new(file))
                .map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
            (ds, 0)
        }
        None => {
            let spec = parse_synth(args.task, &args.synth)?;
            (synth::generate(&spec).map_err(CliError::user)?, spec.seed)
        }
    };
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        seed: args.seed.unwrap_or(synth_seed),
        epochs: args.epochs.unwrap_or(defaults.epochs),
        learning_rate: args.learning_rate.unwrap_or(defaults.learning_rate),
        batch_size: args.batch_size.unwrap_or(defaults.batch_size),
        momentum: args.momentum.unwrap_or(defaults.momentum),
        validation_fraction: args.validation_fraction.unwrap_or(defaults.validation_fraction),
    };
    let layer_sizes = args.layers.clone().unwrap_or_else(|| args.task.default_layers());
    let (model, report) = neuralnet::train(&dataset, &layer_sizes, &cfg).map_err(nn_error)?;
    Ok(Trained {
        model,
        report,
        config: cfg,
        layer_sizes,
        dataset,
    })
}

pub fn run(args: &TrainArgs) -> Result<(), CliError> {
    let Trained {
        model,
        report,
        config,
        layer_sizes,
        dataset,
    } = train(args)?;
    let mut bytes = Vec::new();
    neuralnet::save(&model, &mut bytes).map_err(nn_error)?;
    std::fs::write(&args.out, &bytes).with_context(|| format!("cannot write {}", args.out.display()))?;
    if let Some(path) = &args.export_dataset {
        let file = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        dataset.write_jsonl(std::io::BufWriter::new(file)).map_err(nn_error)?;
    }
    let summary = TrainSummary {
        task: match args.task {
            Task::Wrist => "wrist",
            Task::Elbow => "elbow",
        },
        layer_sizes,
        param_count: report.param_count,
        train_acc: report.train_acc,
        val_acc: report.val_acc,
        n_train: report.n_train,
        n_val: report.n_val,
        model_sha256: sha256_hex(&bytes),
        config,
        loss_curve: report.loss_curve,
    };
    if let Some(path) = &args.report {
        let text = serde_json::to_string_pretty(&summary).expect("reports serialize");
        std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    }
    println!(
        "{} model: layers {:?}, {} parameters, train_acc {:.4}, val_acc {:.4} ({} train / {} val)",
        summary.task, summary.layer_sizes, summary.param_count, summary.train_acc, summary.val_acc, summary.n_train, summary.n_val
    );
    println!("wrote {} (sha256 {})", args.out.display(), summary.model_sha256);
    Ok(())
}
