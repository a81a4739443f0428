//! The `prunability` command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 statistically undefined result,
//! 4 too many failed trainings.

pub mod plot;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use prunability::evalstats::{EvalReport, ModelGaps, ReportConfig};
use prunability::measures::{MeasureKind, MeasureTable};
use prunability::nncore::checkpoint::write_atomic;
use prunability::pruning::PerturbMatching;
use prunability::zoo::{self, DatasetSpec, DoubleDescentConfig, SweepManifest};
use prunability::{Dataset, Error, Result};

pub const DEFAULT_SEED: u64 = 0;
pub const TABLE1_FILE: &str = "table1.csv";
pub const TABLE2_FILE: &str = "table2.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Parser)]
#[command(name = "prunability", version, about = "Prunability and generalization-measure experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct MeasureFlags {
    /// Comma-separated measure names, or `all`.
    #[arg(long)]
    pub measures: Option<String>,
    /// Relative train-loss tolerance of the pruning and perturbation searches [default: 0.1].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Number of kept-fraction grid points [default: 50].
    #[arg(long = "grid-size")]
    pub grid_size: Option<usize>,
    /// Regularizer of the effective dimensionality [default: 1.0].
    #[arg(long)]
    pub z: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Materialize the manifest's dataset as CSV files.
    DatasetGen {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        fast: bool,
    },
    /// Train every grid point of a sweep and compute its measures.
    SweepRun {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Use the 36-model grid instead of the default 216-model one.
        #[arg(long)]
        fast: bool,
        #[command(flatten)]
        flags: MeasureFlags,
    },
    /// Recompute measures for an already trained sweep directory.
    MeasureCompute {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        flags: MeasureFlags,
    },
    /// Correlation and granulated tables from a measure table and a model table.
    EvalReport {
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>/measures.csv`.
        #[arg(long = "measure-table")]
        measure_table: Option<PathBuf>,
        /// Defaults to `<out>/models.csv`.
        #[arg(long = "model-table")]
        model_table: Option<PathBuf>,
    },
    /// Width sweep with label noise and per-width Kendall tables.
    DdRun {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        fast: bool,
        #[command(flatten)]
        flags: MeasureFlags,
    },
    /// Compare pruning with matched random perturbations on trained sweep models.
    PvpRun {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated model ids; all trained models when omitted.
        #[arg(long)]
        models: Option<String>,
        /// Comma-separated removed fractions in [0, 1).
        #[arg(long)]
        fractions: Option<String>,
        /// `euclidean` or `per-coordinate`.
        #[arg(long, default_value = "euclidean")]
        matching: String,
    },
    /// Render a table as an SVG line chart.
    Plot {
        #[arg(long)]
        input: PathBuf,
        /// `double-descent`, `prune-vs-perturb` or `prunability-curve`.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Undefined(_) => 3,
        Error::FailureCap { .. } => 4,
        _ => 2,
    }
}

fn seed_or_default(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        log::info!("no --seed given; using default seed {DEFAULT_SEED}");
        DEFAULT_SEED
    })
}

fn apply_flags(manifest: &mut SweepManifest, flags: &MeasureFlags) -> Result<()> {
    if let Some(list) = &flags.measures {
        manifest.measures = MeasureKind::parse_list(list)?;
    }
    let cfg = &mut manifest.measure_config;
    if let Some(beta) = flags.beta {
        cfg.prunability.beta = beta;
        cfg.perturbation.beta = beta;
    }
    if let Some(c) = flags.grid_size {
        if c == 0 {
            return Err(Error::Config("--grid-size must be positive".into()));
        }
        cfg.prunability = cfg.prunability.clone().with_grid_size(c);
    }
    if let Some(z) = flags.z {
        if z.is_nan() || z <= 0.0 {
            return Err(Error::Config("--z must be positive".into()));
        }
        cfg.effective_dim.z = z;
    }
    manifest.validate()
}

fn set_seed(manifest: &mut SweepManifest, seed: u64) {
    manifest.measure_config.seed = seed;
    if let DatasetSpec::SyntheticGaussianMixture(s) = &mut manifest.dataset {
        s.seed = seed;
    }
}

fn base_manifest(path: &Option<PathBuf>, fast: bool, seed: Option<u64>) -> Result<SweepManifest> {
    let mut m = match path {
        Some(p) => SweepManifest::load(p)?,
        None if fast => SweepManifest::fast(),
        None => SweepManifest::miniature(),
    };
    match (path, seed) {
        (_, Some(s)) => set_seed(&mut m, s),
        (None, None) => set_seed(&mut m, seed_or_default(None)),
        (Some(_), None) => {}
    }
    Ok(m)
}

/// Removes the registered files unless the command succeeded.
struct Outputs(Vec<PathBuf>);

impl Outputs {
    fn finish<T>(self, result: Result<T>) -> Result<T> {
        if result.is_err() {
            for p in &self.0 {
                let _ = fs::remove_file(p);
            }
        }
        result
    }
}

fn dataset_csv(d: &Dataset) -> String {
    let width: usize = d.sample_shape().iter().product();
    let mut out = String::from("label");
    for j in 0..width {
        out.push_str(&format!(",x{j}"));
    }
    out.push('\n');
    for i in 0..d.len() {
        out.push_str(&d.labels()[i].to_string());
        for v in d.inputs().row(i) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Computes the report and both tables for a sweep.
pub fn eval_report(measures_csv: &str, models_csv: &str) -> Result<EvalReport> {
    let table = MeasureTable::from_csv(measures_csv)?;
    let models = ModelGaps::from_csv(models_csv)?;
    EvalReport::compute(&table, &models, &ReportConfig::default())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Config(format!("bad {what} {s:?}"))))
        .collect()
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::DatasetGen { manifest, out, seed, fast } => {
            let m = base_manifest(&manifest, fast, seed)?;
            let (train, test) = m.dataset.load()?;
            let files = [out.join("train.csv"), out.join("test.csv"), out.join("dataset.json")];
            let outputs = Outputs(files.to_vec());
            let res = (|| {
                write_atomic(&files[0], dataset_csv(&train).as_bytes())?;
                write_atomic(&files[1], dataset_csv(&test).as_bytes())?;
                write_atomic(&files[2], serde_json::to_string_pretty(&m.dataset)?.as_bytes())
            })();
            outputs.finish(res)?;
            println!("wrote {} train and {} test samples to {}", train.len(), test.len(), out.display());
        }
        Command::SweepRun { manifest, out, seed, fast, flags } => {
            let mut m = base_manifest(&manifest, fast, seed)?;
            apply_flags(&mut m, &flags)?;
            let outputs = Outputs(sweep_outputs(&out));
            let outcome = outputs.finish(zoo::run_sweep(&m, &out))?;
            println!(
                "{} models ({} trained, {} reused, {} failed); {} measure values in {}",
                outcome.records.len(),
                outcome.trained,
                outcome.reused,
                outcome.failures.len(),
                outcome.table.len(),
                out.join(zoo::MEASURES_FILE).display()
            );
        }
        Command::MeasureCompute { out, seed, flags } => {
            let mut m = SweepManifest::load(&out.join(zoo::MANIFEST_FILE))?;
            if let Some(s) = seed {
                m.measure_config.seed = s;
            }
            apply_flags(&mut m, &flags)?;
            let outputs = Outputs(sweep_outputs(&out));
            let outcome = outputs.finish(zoo::measure_existing(&out, &m))?;
            println!("{} measure values for {} models", outcome.table.len(), outcome.records.len());
        }
        Command::EvalReport { out, measure_table, model_table } => {
            let measures = read(&measure_table.unwrap_or_else(|| out.join(zoo::MEASURES_FILE)))?;
            let models = read(&model_table.unwrap_or_else(|| out.join(zoo::MODELS_FILE)))?;
            let report = eval_report(&measures, &models)?;
            let files = [out.join(TABLE1_FILE), out.join(TABLE2_FILE), out.join(REPORT_FILE)];
            let outputs = Outputs(files.to_vec());
            let res = (|| {
                write_atomic(&files[0], report.table1_csv().as_bytes())?;
                write_atomic(&files[1], report.table2_csv().as_bytes())?;
                write_atomic(&files[2], serde_json::to_string_pretty(&report)?.as_bytes())
            })();
            outputs.finish(res)?;
            print!("{}", report.table1_csv());
        }
        Command::DdRun { out, seed, fast, flags } => {
            let seed = seed_or_default(seed);
            let mut cfg = DoubleDescentConfig::default();
            if fast {
                cfg.widths = vec![1, 2, 4, 8, 16];
                cfg.seeds = vec![0, 1];
                cfg.train.epochs = 40;
                cfg.manifest_id = "double-descent-fast".into();
            }
            cfg.dataset.seed = seed;
            cfg.measure_config.seed = seed;
            let mut m = cfg.manifest();
            apply_flags(&mut m, &flags)?;
            cfg.measures = m.measures;
            cfg.measure_config = m.measure_config;
            let mut files = sweep_outputs(&out);
            files.extend([zoo::dd_files::MODELS_FILE, zoo::dd_files::SUMMARY_FILE, zoo::dd_files::TAU_FILE].map(|f| out.join(f)));
            let outputs = Outputs(files);
            let outcome = outputs.finish(zoo::run_double_descent(&cfg, &out))?;
            print!("{}", zoo::tau_csv(&outcome.tau));
        }
        Command::PvpRun { out, seed, models, fractions, matching } => {
            let seed = seed_or_default(seed);
            let ids: Vec<String> = models.as_deref().map(|m| list(m, "model id")).transpose()?.unwrap_or_default();
            let fractions = match fractions {
                Some(f) => list(&f, "fraction")?,
                None => zoo::default_fractions(),
            };
            let matching = match matching.as_str() {
                "euclidean" => PerturbMatching::EuclideanNorm,
                "per-coordinate" => PerturbMatching::PerCoordinate,
                other => return Err(Error::Config(format!("unknown matching {other:?}"))),
            };
            let outputs = Outputs(vec![out.join(zoo::PVP_FILE)]);
            let rows = outputs.finish(zoo::run_prune_vs_perturb(&out, &ids, &fractions, matching, seed))?;
            println!("{} rows in {}", rows.len(), out.join(zoo::PVP_FILE).display());
        }
        Command::Plot { input, kind, out } => {
            let kind = plot::PlotKind::parse(&kind)?;
            let svg = plot::plot_csv(&read(&input)?, kind)?;
            let outputs = Outputs(vec![out.clone()]);
            outputs.finish(write_atomic(&out, svg.as_bytes()))?;
        }
    }
    Ok(())
}

fn sweep_outputs(dir: &Path) -> Vec<PathBuf> {
    [zoo::MEASURES_FILE, zoo::AUX_FILE, zoo::MODELS_FILE, zoo::CURVES_FILE].iter().map(|f| dir.join(f)).collect()
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
