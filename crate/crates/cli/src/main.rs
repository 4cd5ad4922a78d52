use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use discrepal::data::{load_csv, LabelMode};
use discrepal::divergence::{build_d, labeled_first, spectrum_mk, Divergences};
use discrepal::harness::{
    comparisons, decomposition_trace, default_lambda_grid, default_sigma_grid, parse_override_value, prepare, read_curves, run_experiment_on,
    tune_hyperparameters, write_curves, write_decomposition, write_summary, write_wtl, ExperimentConfig,
};
use discrepal::kernel::{gram_sym, KernelSpec};
use discrepal::learner::Criterion;
use discrepal::linalg::select_rows;
use discrepal::Error;

#[derive(Parser)]
#[command(name = "discrepal", version, about = "Divergence-minimizing active learning for kernel least squares")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grid-search the kernel bandwidth and regularization on 25-point draws.
    Tune {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of random draws averaged per grid point.
        #[arg(long, default_value_t = 10)]
        reps: usize,
    },
    /// Run the benchmark and write curves.csv, summary.csv and wtl.csv.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for independent runs.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Print `discrepancy,mmd,nuclear` for a labeled subset of a dataset.
    Divergence {
        /// CSV file; every column except the label column is a feature.
        dataset: PathBuf,
        /// Comma separated 0-based row indices of the labeled set.
        #[arg(long, value_delimiter = ',', required = true)]
        labeled: Vec<String>,
        #[arg(long, default_value = "y")]
        label_col: String,
        #[arg(long, default_value = "linear")]
        kernel: String,
        #[arg(long)]
        sigma: Option<f64>,
        /// Hypothesis set radius Λ; the values scale with 4Λ².
        #[arg(long, default_value_t = 1.0)]
        lambda_cap: f64,
    },
    /// Per-query eigenvalue decomposition of L_P - L_Q for one session.
    Decompose {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "nuclear")]
        criterion: String,
        /// Run index; its split uses seed + run.
        #[arg(long, default_value_t = 0)]
        run: usize,
    },
    /// Recompute summary.csv and wtl.csv from an existing curves.csv.
    Summarize {
        /// Directory holding curves.csv; outputs are written next to it.
        dir: PathBuf,
        /// `key=value` settings for stride, p_threshold or ttest.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Label column of the dataset.
    #[arg(long)]
    label_col: Option<String>,
}

/// A failure with its exit code: 2 for usage and configuration problems,
/// 1 for everything that goes wrong afterwards.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::MissingColumn(_)
            | Error::Parse { .. }
            | Error::NonBinaryLabel { .. }
            | Error::InvalidDataset(_)
            | Error::NotUnlabeled(_)
            | Error::Csv(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>, Failure> {
    raw.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
                .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {kv:?}")))
        })
        .collect()
}

/// Config file, then `DISCREPAL_SEED`, then `--label-col` and `--set`.
fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| usage(format!("cannot read config {}: {e}", args.config.display())))?;
    let mut overrides = Vec::new();
    if let Ok(seed) = std::env::var("DISCREPAL_SEED") {
        overrides.push(("seed".to_owned(), seed));
    }
    if let Some(col) = &args.label_col {
        overrides.push(("label_col".to_owned(), format!("{col:?}")));
    }
    overrides.extend(parse_overrides(&args.overrides)?);
    Ok(ExperimentConfig::from_json(&text, &overrides)?)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure { code: 1, message: format!("cannot create {}: {e}", dir.display()) })
}

fn cmd_tune(args: &ConfigArgs, reps: usize) -> Result<(), Failure> {
    let cfg = load_config(args)?;
    let prepared = prepare(&ExperimentConfig { setting: discrepal::harness::Setting::Agnostic, ..cfg.clone() })?;
    let (sigma, lambda) = tune_hyperparameters(&prepared.data, &default_sigma_grid(), &default_lambda_grid(), reps, cfg.seed)?;
    println!("sigma,lambda,log10_lambda");
    println!("{sigma:?},{lambda:?},{:?}", lambda.log10());
    Ok(())
}

fn cmd_run(args: &ConfigArgs, out: &Path, parallel: usize) -> Result<(), Failure> {
    let cfg = load_config(args)?;
    if parallel == 0 {
        return Err(usage("--parallel must be at least 1"));
    }
    let prepared = prepare(&cfg)?;
    let set = if parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| Failure { code: 1, message: e.to_string() })?;
        pool.install(|| run_experiment_on(&cfg, &prepared, true))?
    } else {
        run_experiment_on(&cfg, &prepared, false)?
    };
    create_dir(out)?;
    write_curves(&set, &out.join("curves.csv"))?;
    write_summary(&set, &out.join("summary.csv"))?;
    write_wtl(&comparisons(&set, &cfg)?, &out.join("wtl.csv"))?;
    Ok(())
}

fn parse_indices(raw: &[String], n: usize) -> Result<Vec<usize>, Failure> {
    let mut out = Vec::with_capacity(raw.len());
    for r in raw {
        let i: usize = r.trim().parse().map_err(|_| usage(format!("--labeled: not an index: {r:?}")))?;
        if i >= n {
            return Err(usage(format!("--labeled: index {i} out of range for {n} rows")));
        }
        if out.contains(&i) {
            return Err(usage(format!("--labeled: index {i} given twice")));
        }
        out.push(i);
    }
    if out.is_empty() {
        return Err(usage("--labeled: empty labeled set"));
    }
    Ok(out)
}

fn cmd_divergence(
    dataset: &Path,
    labeled: &[String],
    label_col: &str,
    kernel: &str,
    sigma: Option<f64>,
    lambda_cap: f64,
) -> Result<(), Failure> {
    if !(lambda_cap > 0.0 && lambda_cap.is_finite()) {
        return Err(usage(format!("--lambda-cap must be positive, got {lambda_cap}")));
    }
    let kernel = KernelSpec::from_family(kernel, sigma)?;
    if !dataset.is_file() {
        return Err(usage(format!("file not found: {}", dataset.display())));
    }
    let data = load_csv(dataset, label_col, LabelMode::Real)?;
    let labeled = parse_indices(labeled, data.n())?;
    let pool: Vec<usize> = (0..data.n()).collect();
    let order = labeled_first(&pool, &labeled);
    let k = gram_sym(&kernel, &select_rows(data.features(), &order));
    let spectrum = spectrum_mk(&k, &build_d(pool.len(), labeled.len())?)?;
    let d = Divergences::of(&spectrum, lambda_cap);
    println!("{:?},{:?},{:?}", d.discrepancy, d.mmd, d.nuclear);
    Ok(())
}

fn cmd_decompose(args: &ConfigArgs, out: &Path, criterion: &str, run: usize) -> Result<(), Failure> {
    let cfg = load_config(args)?;
    let criterion: Criterion = criterion.parse()?;
    if run >= cfg.runs {
        return Err(usage(format!("--run {run} is not below runs = {}", cfg.runs)));
    }
    let prepared = prepare(&cfg)?;
    let rows = decomposition_trace(&cfg, &prepared, criterion, run)?;
    create_dir(out)?;
    write_decomposition(&rows, &out.join("decomp.csv"))?;
    Ok(())
}

fn cmd_summarize(dir: &Path, raw: &[String]) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig { dataset: dir.join("curves.csv"), kernel_sigma: Some(1.0), ..Default::default() };
    for (k, v) in parse_overrides(raw)? {
        if !matches!(k.as_str(), "stride" | "p_threshold" | "ttest") {
            return Err(usage(format!("summarize accepts only stride, p_threshold and ttest, got {k:?}")));
        }
        cfg.set(&k, &parse_override_value(&v))?;
    }
    cfg.validate()?;
    let path = dir.join("curves.csv");
    if !path.is_file() {
        return Err(usage(format!("file not found: {}", path.display())));
    }
    let set = read_curves(&path)?;
    write_summary(&set, &dir.join("summary.csv"))?;
    let pairs = comparisons(&set, &cfg)?;
    write_wtl(&pairs, &dir.join("wtl.csv"))?;
    println!("pair,win,tie,loss");
    for (name, wtl) in &pairs {
        println!("{name},{},{},{}", wtl.wins, wtl.ties, wtl.losses);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Tune { config, reps } => cmd_tune(config, *reps),
        Command::Run { config, out, parallel } => cmd_run(config, out, *parallel),
        Command::Divergence { dataset, labeled, label_col, kernel, sigma, lambda_cap } => {
            cmd_divergence(dataset, labeled, label_col, kernel, *sigma, *lambda_cap)
        }
        Command::Decompose { config, out, criterion, run } => cmd_decompose(config, out, criterion, *run),
        Command::Summarize { dir, overrides } => cmd_summarize(dir, overrides),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
