//! End-to-end experiment orchestration.
//!
//! One run walks epochs 0..=N. At each epoch it snapshots the parameters,
//! assembles normalized train-by-basis and test-by-basis kernel matrices at
//! the current parameters, fits the kernel regression on the training set,
//! scores both the regression and the raw network on train and test, and
//! records a row. Epoch 0 is measured before any gradient step, so it is
//! the at-initialization point. After the final record the run stops; the
//! SGD step advancing epoch `t` to `t+1` only happens in between.
//!
//! The master seed fans out into fixed-purpose substreams (init / split /
//! basis / batches), so e.g. changing the epoch count never changes the
//! data split.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::data::{self, DataView, Dataset, SplitPlan};
use crate::error::{Error, Result};
use crate::kernel::{self, CheckpointTrail, KernelMatrix};
use crate::model::{self, ModelSpec, ParamMask};
use crate::regression;
use crate::rng::{self, Purpose};
use crate::trainer::{self, TrainConfig};

/// One row of the experiment output: kernel-regression and network scores
/// at a single epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub kernel_train_accuracy: f64,
    pub kernel_test_accuracy: f64,
    pub net_train_accuracy: f64,
    pub net_test_accuracy: f64,
    pub kernel_test_sse: f64,
    pub fit_rank: usize,
    pub singular_value_ratio: f64,
    pub degenerate_gradients: usize,
}

/// Where the examples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceConfig {
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
    Synthetic {
        dim: usize,
        separation: f64,
        noise: f64,
    },
}

/// Full experiment description. Defaults follow the digit protocol:
/// 500 train and 500 test per class, 50 basis per class, a 784-64-32-1 relu
/// model, 9 epochs of 10 SGD steps on batches of 100 at learning rate 0.1.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: SourceConfig,
    pub positive_digit: u8,
    pub negative_digit: u8,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub basis_per_class: usize,
    pub spec: ModelSpec,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub ridge: f64,
    pub threshold: f64,
    /// Restrict gradients and updates to the last `k` layers; 0 means all
    /// parameters.
    pub mask_layers: usize,
    pub seed: u64,
    /// Optional `(mean, std)` feature standardization after loading.
    pub standardize: Option<(f64, f64)>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Digit protocol against a pair of IDX files.
    pub fn mnist(images: PathBuf, labels: PathBuf) -> Self {
        ExperimentConfig {
            source: SourceConfig::Idx { images, labels },
            positive_digit: 1,
            negative_digit: 7,
            train_per_class: 500,
            test_per_class: 500,
            basis_per_class: 50,
            spec: "784-64-32-1:relu".parse().expect("default spec"),
            epochs: 9,
            steps_per_epoch: 10,
            batch_size: 100,
            learning_rate: 0.1,
            ridge: 0.0,
            threshold: 0.5,
            mask_layers: 0,
            seed: 0,
            standardize: None,
            out: None,
        }
    }

    /// Same protocol at desk scale on two Gaussian blobs.
    pub fn synthetic() -> Self {
        ExperimentConfig {
            source: SourceConfig::Synthetic {
                dim: 20,
                separation: 6.0,
                noise: 1.0,
            },
            spec: "20-32-16-1:relu".parse().expect("default spec"),
            train_per_class: 100,
            test_per_class: 100,
            basis_per_class: 25,
            batch_size: 50,
            ..ExperimentConfig::mnist(PathBuf::new(), PathBuf::new())
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(Error::InvalidConfig(
                "train_per_class and test_per_class must be >= 1".into(),
            ));
        }
        if self.basis_per_class == 0 {
            return Err(Error::InvalidConfig("basis_per_class must be >= 1".into()));
        }
        if self.basis_per_class > self.train_per_class {
            return Err(Error::InvalidConfig(format!(
                "basis_per_class ({}) cannot exceed train_per_class ({})",
                self.basis_per_class, self.train_per_class
            )));
        }
        if !self.threshold.is_finite() {
            return Err(Error::InvalidConfig("threshold must be finite".into()));
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::InvalidConfig("ridge must be finite and >= 0".into()));
        }
        if let SourceConfig::Idx { images, labels } = &self.source {
            if images.as_os_str().is_empty() || labels.as_os_str().is_empty() {
                return Err(Error::InvalidConfig(
                    "idx source needs both images and labels paths".into(),
                ));
            }
        }
        self.train_config().validate()
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            steps_per_epoch: self.steps_per_epoch,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: rng::substream_seed(self.seed, Purpose::Batch),
            mask: None, // filled in by run_experiment once the mask exists
        }
    }

    /// Apply one `key=value` setting. Unknown keys are rejected so typos in
    /// config files fail loudly.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad value {value:?} for key {key:?}")))
        }

        match key {
            "source" => match value {
                "idx" => {
                    if !matches!(self.source, SourceConfig::Idx { .. }) {
                        self.source = SourceConfig::Idx {
                            images: PathBuf::new(),
                            labels: PathBuf::new(),
                        };
                    }
                }
                "synthetic" => {
                    if !matches!(self.source, SourceConfig::Synthetic { .. }) {
                        self.source = SourceConfig::Synthetic {
                            dim: 20,
                            separation: 6.0,
                            noise: 1.0,
                        };
                    }
                }
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "source must be idx or synthetic, got {other:?}"
                    )))
                }
            },
            "images" => {
                let path = PathBuf::from(value);
                match &mut self.source {
                    SourceConfig::Idx { images, .. } => *images = path,
                    _ => {
                        self.source = SourceConfig::Idx {
                            images: path,
                            labels: PathBuf::new(),
                        }
                    }
                }
            }
            "labels" => {
                let path = PathBuf::from(value);
                match &mut self.source {
                    SourceConfig::Idx { labels, .. } => *labels = path,
                    _ => {
                        self.source = SourceConfig::Idx {
                            images: PathBuf::new(),
                            labels: path,
                        }
                    }
                }
            }
            "synth_dim" => {
                let dim = parse(key, value)?;
                match &mut self.source {
                    SourceConfig::Synthetic { dim: d, .. } => *d = dim,
                    _ => {
                        self.source = SourceConfig::Synthetic {
                            dim,
                            separation: 6.0,
                            noise: 1.0,
                        }
                    }
                }
            }
            "synth_separation" => {
                let sep = parse(key, value)?;
                if let SourceConfig::Synthetic { separation, .. } = &mut self.source {
                    *separation = sep;
                } else {
                    return Err(Error::InvalidConfig(
                        "synth_separation requires source=synthetic".into(),
                    ));
                }
            }
            "synth_noise" => {
                let n = parse(key, value)?;
                if let SourceConfig::Synthetic { noise, .. } = &mut self.source {
                    *noise = n;
                } else {
                    return Err(Error::InvalidConfig(
                        "synth_noise requires source=synthetic".into(),
                    ));
                }
            }
            "positive_digit" => self.positive_digit = parse(key, value)?,
            "negative_digit" => self.negative_digit = parse(key, value)?,
            "train_per_class" => self.train_per_class = parse(key, value)?,
            "test_per_class" => self.test_per_class = parse(key, value)?,
            "basis_per_class" => self.basis_per_class = parse(key, value)?,
            "spec" => self.spec = value.parse()?,
            "epochs" => self.epochs = parse(key, value)?,
            "steps_per_epoch" => self.steps_per_epoch = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "ridge" => self.ridge = parse(key, value)?,
            "threshold" => self.threshold = parse(key, value)?,
            "mask_layers" => self.mask_layers = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "standardize_mean" => {
                let mean = parse(key, value)?;
                let std = self.standardize.map_or(1.0, |(_, s)| s);
                self.standardize = Some((mean, std));
            }
            "standardize_std" => {
                let std = parse(key, value)?;
                let mean = self.standardize.map_or(0.0, |(m, _)| m);
                self.standardize = Some((mean, std));
            }
            "out" => self.out = Some(PathBuf::from(value)),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown config key {other:?}"
                )))
            }
        }
        Ok(())
    }
}

/// Parse a flat `key=value` config file. Blank lines and `#` comments are
/// ignored; later keys override earlier ones.
pub fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut pairs = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                line_no + 1
            ))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Everything a finished run produced. The trail feeds path-kernel reports;
/// dataset and plan let callers re-derive any view of the run.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<EpochRecord>,
    pub trail: CheckpointTrail,
    pub dataset: Dataset,
    pub plan: SplitPlan,
    pub mask: Option<ParamMask>,
}

fn scan_finite(
    k: &KernelMatrix,
    indices: &[usize],
    epoch: usize,
    context: &'static str,
) -> Result<()> {
    for (r, &example) in indices.iter().enumerate().take(k.rows()) {
        let row_ok = k.row(r).iter().all(|v| v.is_finite());
        if !row_ok || !k.query_self()[r].is_finite() {
            return Err(Error::NonFiniteKernel {
                context,
                epoch,
                example,
            });
        }
    }
    Ok(())
}

fn labels_of(view: &DataView<'_>) -> Vec<u8> {
    (0..view.len()).map(|i| view.label(i)).collect()
}

/// Run the full experiment described by `cfg`. Deterministic for a fixed
/// config: same seed, same bytes out.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;

    let init_seed = rng::substream_seed(cfg.seed, Purpose::Init);
    let split_seed = rng::substream_seed(cfg.seed, Purpose::Split);
    let basis_seed = rng::substream_seed(cfg.seed, Purpose::Basis);

    let (mut dataset, mut plan) = match &cfg.source {
        SourceConfig::Idx { images, labels } => {
            let raw = data::load_idx(images, labels)?;
            data::make_binary_task(
                &raw,
                cfg.positive_digit,
                cfg.negative_digit,
                cfg.train_per_class,
                cfg.test_per_class,
                split_seed,
            )?
        }
        SourceConfig::Synthetic {
            dim,
            separation,
            noise,
        } => {
            let dataset = data::synth_blobs(
                cfg.train_per_class + cfg.test_per_class,
                *dim,
                *separation,
                *noise,
                split_seed,
            )?;
            let plan =
                SplitPlan::contiguous_balanced(cfg.train_per_class, cfg.test_per_class, split_seed);
            (dataset, plan)
        }
    };
    if let Some((mean, std)) = cfg.standardize {
        dataset.standardize(mean, std)?;
    }
    if cfg.spec.input_width() != dataset.dim() {
        return Err(Error::InvalidConfig(format!(
            "model expects input width {}, dataset has {}",
            cfg.spec.input_width(),
            dataset.dim()
        )));
    }
    plan.basis_indices =
        data::select_basis(&plan, dataset.labels(), cfg.basis_per_class, basis_seed)?;

    let mask = if cfg.mask_layers > 0 {
        Some(ParamMask::last_layers(&cfg.spec, cfg.mask_layers))
    } else {
        None
    };
    let mut train_cfg = cfg.train_config();
    train_cfg.mask = mask.clone();

    let train_view = dataset.view(&plan.train_indices);
    let test_view = dataset.view(&plan.test_indices);
    let train_labels = labels_of(&train_view);
    let test_labels = labels_of(&test_view);
    let y_train: Vec<f64> = train_labels.iter().map(|&l| f64::from(l)).collect();

    let basis_examples: Vec<&[f64]> = plan
        .basis_indices
        .iter()
        .map(|&i| dataset.examples()[i].as_slice())
        .collect();
    let train_examples: Vec<&[f64]> = (0..train_view.len())
        .map(|i| train_view.example(i))
        .collect();
    let test_examples: Vec<&[f64]> = (0..test_view.len()).map(|i| test_view.example(i)).collect();

    let mut params = model::init_params(&cfg.spec, init_seed);
    let mut trail = CheckpointTrail::new();
    let mut records = Vec::with_capacity(cfg.epochs + 1);

    for epoch in 0..=cfg.epochs {
        trail.push(params.clone())?;

        let basis_grads = kernel::gradients(&cfg.spec, &params, &basis_examples, mask.as_ref())?;
        let raw_train = kernel::kernel_matrix_streamed(
            &cfg.spec,
            &params,
            &train_examples,
            &basis_grads,
            mask.as_ref(),
        )?;
        scan_finite(&raw_train, &plan.train_indices, epoch, "train kernel")?;
        let raw_test = kernel::kernel_matrix_streamed(
            &cfg.spec,
            &params,
            &test_examples,
            &basis_grads,
            mask.as_ref(),
        )?;
        scan_finite(&raw_test, &plan.test_indices, epoch, "test kernel")?;

        let k_train = kernel::cosine_normalize(&raw_train)?;
        let k_test = kernel::cosine_normalize(&raw_test)?;

        let fit = regression::fit(&k_train, &y_train, cfg.ridge)?;
        let train_preds = regression::predict(&k_train, &fit)?;
        let test_preds = regression::predict(&k_test, &fit)?;
        let train_eval = regression::evaluate(&train_preds, &train_labels, cfg.threshold)?;
        let test_eval = regression::evaluate(&test_preds, &test_labels, cfg.threshold)?;

        records.push(EpochRecord {
            epoch,
            kernel_train_accuracy: train_eval.accuracy,
            kernel_test_accuracy: test_eval.accuracy,
            net_train_accuracy: trainer::network_accuracy(&cfg.spec, &params, &train_view)?,
            net_test_accuracy: trainer::network_accuracy(&cfg.spec, &params, &test_view)?,
            kernel_test_sse: test_eval.sse,
            fit_rank: fit.diagnostics.rank,
            singular_value_ratio: fit.diagnostics.singular_value_ratio,
            degenerate_gradients: k_train.degenerate_queries()
                + k_test.degenerate_queries()
                + k_train.degenerate_basis(),
        });

        if epoch < cfg.epochs {
            params = trainer::sgd_epoch(&cfg.spec, &params, &train_view, &train_cfg, epoch)?;
        }
    }

    Ok(ExperimentOutcome {
        records,
        trail,
        dataset,
        plan,
        mask,
    })
}

pub const CSV_HEADER: &str = "epoch,kernel_train_acc,kernel_test_acc,net_train_acc,net_test_acc,kernel_test_sse,fit_rank,sv_ratio,degenerate_grads";

fn format_record(record: &EpochRecord) -> String {
    format!(
        "{},{:.6},{:.6},{:.6},{:.6},{:.16e},{},{:.16e},{}",
        record.epoch,
        record.kernel_train_accuracy,
        record.kernel_test_accuracy,
        record.net_train_accuracy,
        record.net_test_accuracy,
        record.kernel_test_sse,
        record.fit_rank,
        record.singular_value_ratio,
        record.degenerate_gradients,
    )
}

/// Write records as CSV: accuracies at 6 decimal places, sse and the
/// singular-value ratio at 17 significant digits.
pub fn emit_csv(records: &[EpochRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyInput { context: "records" });
    }
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for record in records {
        text.push_str(&format_record(record));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write the discrete path kernel for a sample of example pairs: total plus
/// the per-epoch contributions, one pair per row.
pub fn emit_path_kernel_report(
    spec: &ModelSpec,
    trail: &CheckpointTrail,
    examples: &[Vec<f64>],
    pairs: &[(usize, usize)],
    mask: Option<&ParamMask>,
    path: &Path,
) -> Result<()> {
    if trail.is_empty() {
        return Err(Error::EmptyInput {
            context: "checkpoint trail",
        });
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput { context: "pairs" });
    }

    let mut text = String::from("i,j,path_kernel");
    for epoch in 0..trail.len() {
        text.push_str(&format!(",epoch_{epoch}"));
    }
    text.push('\n');

    for &(i, j) in pairs {
        for index in [i, j] {
            if index >= examples.len() {
                return Err(Error::InvalidConfig(format!(
                    "pair index {index} out of range (dataset has {} examples)",
                    examples.len()
                )));
            }
        }
        let contributions =
            kernel::path_kernel_contributions(spec, trail, &examples[i], &examples[j], mask)?;
        let total: f64 = contributions.iter().sum();
        text.push_str(&format!("{i},{j},{total:.16e}"));
        for c in &contributions {
            text.push_str(&format!(",{c:.16e}"));
        }
        text.push('\n');
    }

    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(text.as_bytes()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Collect config pairs into an [`ExperimentConfig`], starting from the
/// synthetic or digit defaults depending on the source the pairs select.
/// Without any source-related key the digit (IDX) defaults apply, so a run
/// with neither `--synthetic` nor data paths fails validation instead of
/// silently switching datasets.
pub fn config_from_pairs(pairs: &[(String, String)]) -> Result<ExperimentConfig> {
    // The source decides which defaults apply; the last relevant key wins,
    // mirroring the file-then-flags override order.
    let mut synthetic = false;
    for (key, value) in pairs {
        match key.as_str() {
            "source" => synthetic = value == "synthetic",
            "images" | "labels" => synthetic = false,
            "synth_dim" | "synth_separation" | "synth_noise" => synthetic = true,
            _ => {}
        }
    }
    let mut cfg = if synthetic {
        ExperimentConfig::synthetic()
    } else {
        ExperimentConfig::mnist(PathBuf::new(), PathBuf::new())
    };
    let mut explicit_spec = false;
    for (key, value) in pairs {
        if key == "spec" {
            explicit_spec = true;
        }
        cfg.apply(key, value)?;
    }
    // Keep the default model consistent with a resized synthetic input.
    if synthetic && !explicit_spec {
        if let SourceConfig::Synthetic { dim, .. } = cfg.source {
            cfg.spec = ModelSpec::new(vec![dim, 32, 16, 1], cfg.spec.activation())?;
        }
    }
    Ok(cfg)
}
