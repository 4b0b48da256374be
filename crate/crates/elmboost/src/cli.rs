//! Experiment driver: `train`, `curve`, `noise` and `hash-sim`.
//!
//! Every subcommand writes CSV (header row, comma separated) to `--out`, or
//! to stdout when `--out` is absent. Exit codes: 0 success, 1 usage error,
//! 2 I/O or file-format error, 3 numerical failure.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use elmboost_core::boost::{self, BoostError, BoostedModel, HyperParams};
use elmboost_core::dataset::{self, Dataset, RawDataset};
use elmboost_core::projection::Activation;
use log::{info, warn};

use crate::data::{self, DataError, DatasetKind, Split};
use crate::hashsim::{self, HashSimConfig};
use crate::model_store::{self, ModelError};

#[derive(Debug, Parser)]
#[command(name = "elmboost", version, about = "Boosted ridge-regression ELM experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write per-step training residuals.
    Train(TrainArgs),
    /// Test accuracy after each boosting level, for one or more models.
    Curve(CurveArgs),
    /// Test accuracy with a fraction of pixels zeroed in every test image.
    Noise(NoiseArgs),
    /// Compare empirical sign-hash collision rates with 1 - θ/π.
    HashSim(HashSimArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetArg {
    Mnist,
    Fmnist,
}

impl From<DatasetArg> for DatasetKind {
    fn from(d: DatasetArg) -> Self {
        match d {
            DatasetArg::Mnist => DatasetKind::Mnist,
            DatasetArg::Fmnist => DatasetKind::Fmnist,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ActivationArg {
    Tanh,
    Sign,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Tanh => Activation::Tanh,
            ActivationArg::Sign => Activation::Sign,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Directory holding `<dataset>/{train,t10k}-{images-idx3,labels-idx1}-ubyte[.gz]`.
    #[arg(long, default_value = "data")]
    pub dataset_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = DatasetArg::Mnist)]
    pub dataset: DatasetArg,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Ridge penalty λ.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Discount α in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Ridge fits per level (T).
    #[arg(long, default_value_t = 50)]
    pub t_steps: usize,
    /// Boosting levels (L).
    #[arg(long, default_value_t = 8)]
    pub levels: usize,
    /// Hidden width J; defaults to the image width M.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, value_enum, default_value_t = ActivationArg::Tanh)]
    pub activation: ActivationArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Train on the first N training samples only.
    #[arg(long)]
    pub train_subset: Option<usize>,
    /// Where to write the model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Residual CSV destination (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model file; repeat to put several models side by side.
    #[arg(long, required = true)]
    pub model: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Fractions of pixels to zero, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1")]
    pub noise_fraction: Vec<f64>,
    /// Seed for choosing the zeroed pixels.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HashSimArgs {
    /// Dimension of the hashed vectors.
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    /// Random hyperplanes per pair (J).
    #[arg(long, default_value_t = 10_000)]
    pub hashes: usize,
    /// Independent vector pairs per angle.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Angles in degrees, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,30,45,90,135,180")]
    pub angles: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Output {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(BoostError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Model(_) | CliError::Output { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<BoostError> for CliError {
    fn from(e: BoostError) -> Self {
        match e {
            BoostError::Step { .. } | BoostError::Linalg(_) => CliError::Numerical(e),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Noise(a) => cmd_noise(a),
        Command::HashSim(a) => cmd_hash_sim(a),
    }
}

/// CSV sink over a file or stdout.
struct Table {
    out: Box<dyn Write>,
    name: String,
}

impl Table {
    fn create(path: Option<&Path>, header: &[String]) -> Result<Self, CliError> {
        let (out, name): (Box<dyn Write>, String) = match path {
            Some(p) => {
                let f = File::create(p).map_err(|source| CliError::Output {
                    path: p.display().to_string(),
                    source,
                })?;
                (Box::new(io::BufWriter::new(f)), p.display().to_string())
            }
            None => (Box::new(io::stdout().lock()), "<stdout>".into()),
        };
        let mut table = Table { out, name };
        table.row(header)?;
        Ok(table)
    }

    fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<(), CliError> {
        let line = fields.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(",");
        writeln!(self.out, "{line}").map_err(|source| self.err(source))
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|source| self.err(source))
    }

    fn err(&self, source: io::Error) -> CliError {
        CliError::Output {
            path: self.name.clone(),
            source,
        }
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn load_normalized(raw: &RawDataset, what: &str) -> Dataset {
    let ds = dataset::normalize(raw);
    if ds.degenerate_rows > 0 {
        warn!("{what}: {} constant images left as zero vectors", ds.degenerate_rows);
    }
    ds
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let mut hyper = HyperParams {
        lambda: args.lambda,
        alpha: args.alpha,
        t_steps: args.t_steps,
        levels: args.levels,
        hidden: args.hidden.unwrap_or(1),
        activation: args.activation.into(),
        master_seed: args.seed,
    };
    hyper.validate()?;
    if args.train_subset == Some(0) {
        return Err(usage("--train-subset must be at least 1"));
    }

    let kind = DatasetKind::from(args.data.dataset);
    let mut raw = data::load_split(&args.data.dataset_dir, kind, Split::Train)?;
    if let Some(n) = args.train_subset {
        raw = raw.head(n);
    }
    hyper.hidden = args.hidden.unwrap_or(raw.width());
    let train = load_normalized(&raw, "training set");
    let targets = dataset::one_hot_encode(&train.labels, train.classes)
        .map_err(|e| usage(e.to_string()))?;
    info!(
        "training on {} {kind} samples: lambda={} alpha={} T={} L={} J={} activation={} seed={}",
        train.len(),
        hyper.lambda,
        hyper.alpha,
        hyper.t_steps,
        hyper.levels,
        hyper.hidden,
        hyper.activation,
        hyper.master_seed
    );

    let (model, report) = boost::train_with_progress(&train.x, &targets, &hyper, None, |p| {
        if p.step + 1 == hyper.t_steps {
            info!("level {} done, residual {:.6}", p.level, p.residual_norm);
        }
    })?;
    model_store::save(&model, &args.model)?;
    info!("model written to {}", args.model.display());

    // Model header fields are repeated on every row so each CSV is self-describing.
    let cols = header(&[
        "level", "step", "residual_norm", "lambda", "alpha", "t_steps", "levels", "hidden",
        "activation", "seed",
    ]);
    let echo = [
        hyper.lambda.to_string(),
        hyper.alpha.to_string(),
        hyper.t_steps.to_string(),
        hyper.levels.to_string(),
        hyper.hidden.to_string(),
        hyper.activation.name().to_string(),
        hyper.master_seed.to_string(),
    ];
    let mut table = Table::create(args.out.as_deref(), &cols)?;
    for level in 0..hyper.levels {
        for step in 0..hyper.t_steps {
            let r = report.residual_norm(level, step);
            let mut row = vec![level.to_string(), step.to_string(), r.to_string()];
            row.extend(echo.iter().cloned());
            table.row(&row)?;
        }
    }
    table.finish()
}

fn check_compatible(model: &BoostedModel, test: &RawDataset, path: &Path) -> Result<(), CliError> {
    if model.inputs() != test.width() || model.classes() != test.classes() {
        return Err(usage(format!(
            "{}: model expects {} inputs and {} classes, test set has {} and {}",
            path.display(),
            model.inputs(),
            model.classes(),
            test.width(),
            test.classes()
        )));
    }
    Ok(())
}

/// Accuracy after each level, using levels `0..=ℓ`.
pub fn level_accuracies(model: &BoostedModel, test: &Dataset) -> Result<Vec<f64>, BoostError> {
    boost::cumulative_level_scores(model, &test.x)?
        .iter()
        .map(|scores| boost::accuracy(&boost::classify(scores), &test.labels))
        .collect()
}

pub fn cmd_curve(args: &CurveArgs) -> Result<(), CliError> {
    let models = args
        .model
        .iter()
        .map(|p| model_store::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let raw = data::load_split(&args.data.dataset_dir, args.data.dataset.into(), Split::Test)?;
    for (m, p) in models.iter().zip(&args.model) {
        check_compatible(m, &raw, p)?;
    }
    let test = load_normalized(&raw, "test set");

    let mut cols = vec!["level".to_string()];
    let mut curves = Vec::with_capacity(models.len());
    for (i, m) in models.iter().enumerate() {
        let act = m.hyper().activation.name();
        let dup = models.iter().filter(|o| o.hyper().activation.name() == act).count() > 1;
        let tag = if dup { format!("{act}_{i}") } else { act.to_string() };
        cols.push(format!("eta_{tag}"));
        cols.push(format!("delta_{tag}"));
        let curve = level_accuracies(m, &test)?;
        info!("{}: final accuracy {:.4}", args.model[i].display(), curve.last().copied().unwrap_or(0.0));
        curves.push(curve);
    }

    let mut table = Table::create(args.out.as_deref(), &cols)?;
    let levels = curves.iter().map(Vec::len).max().unwrap_or(0);
    for level in 0..levels {
        let mut row = vec![level.to_string()];
        for curve in &curves {
            match curve.get(level) {
                Some(&eta) => {
                    row.push(eta.to_string());
                    let delta = if level == 0 { 0.0 } else { eta - curve[level - 1] };
                    row.push(delta.to_string());
                }
                None => row.extend([String::new(), String::new()]),
            }
        }
        table.row(&row)?;
    }
    table.finish()
}

/// Test accuracy of the full model after zeroing `fraction` of every test
/// image's pixels.
pub fn noisy_accuracy(model: &BoostedModel, test: &RawDataset, fraction: f64, seed: u64) -> Result<f64, CliError> {
    let noisy = dataset::zero_pixel_noise(test, fraction, seed).map_err(|e| usage(e.to_string()))?;
    let ds = dataset::normalize(&noisy);
    let scores = boost::predict_scores(model, &ds.x, None)?;
    Ok(boost::accuracy(&boost::classify(&scores), &ds.labels)?)
}

pub fn cmd_noise(args: &NoiseArgs) -> Result<(), CliError> {
    if let Some(f) = args.noise_fraction.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(usage(format!("noise fraction {f} is outside [0, 1]")));
    }
    let model = model_store::load(&args.model)?;
    let raw = data::load_split(&args.data.dataset_dir, args.data.dataset.into(), Split::Test)?;
    check_compatible(&model, &raw, &args.model)?;

    let mut table = Table::create(args.out.as_deref(), &header(&["noise_fraction", "eta"]))?;
    for &fraction in &args.noise_fraction {
        let eta = noisy_accuracy(&model, &raw, fraction, args.seed)?;
        info!("noise {fraction}: accuracy {eta:.4}");
        table.row(&[fraction.to_string(), eta.to_string()])?;
    }
    table.finish()
}

pub fn cmd_hash_sim(args: &HashSimArgs) -> Result<(), CliError> {
    if args.dim < 2 {
        return Err(usage("--dim must be at least 2"));
    }
    if args.hashes < 100 {
        return Err(usage("--hashes must be at least 100"));
    }
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    if let Some(a) = args.angles.iter().find(|a| !(0.0..=180.0).contains(*a)) {
        return Err(usage(format!("angle {a} is outside [0, 180] degrees")));
    }
    let config = HashSimConfig {
        dim: args.dim,
        hashes: args.hashes,
        trials: args.trials,
        angles_deg: args.angles.clone(),
        seed: args.seed,
    };
    let rows = hashsim::simulate(&config).map_err(|e| usage(e.to_string()))?;
    let cols = header(&["theta", "analytic_p", "empirical_p", "deviation", "sigma3"]);
    let mut table = Table::create(args.out.as_deref(), &cols)?;
    for r in rows {
        table.row(&[
            r.theta.to_string(),
            r.analytic.to_string(),
            r.empirical.to_string(),
            r.deviation().to_string(),
            r.sigma3.to_string(),
        ])?;
    }
    table.finish()
}
