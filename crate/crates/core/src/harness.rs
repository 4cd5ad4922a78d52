//! Benchmark protocol: tuning, realizable labels, repeated active learning
//! runs, learning curves and win/tie/loss tables.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use serde_json::{Map, Value};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::{load_csv, split, standardize, subsample, Dataset, LabelMode};
use crate::decomposition::{decompose_kernel, pool_losses, Bins};
use crate::kernel::KernelSpec;
use crate::krls::{fit, fit_subset, mse, predict, TrainedModel};
use crate::learner::{run_session_with, Criterion, QueryState};
use crate::linalg::select_rows;
use crate::{seeded_rng, Error, Result};

const RANDOM_QUERY_STREAM: u64 = 0x7a4d;
const TUNE_STREAM: u64 = 0x70e5;
const TUNE_LABELED: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    /// Labels are replaced by the predictions of a model fit on all rows.
    Realizable,
    /// The original binary labels are used.
    Agnostic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TTest {
    StudentPooled,
    Welch,
}

/// Flat JSON configuration. Keys: `dataset`, `setting`, `kernel.family`,
/// `kernel.sigma`, `lambda`, `runs`, `budget`, `seed`, `criteria`,
/// `label_col`, `max_n`, `train_frac`, `f_max`, `ttest`, `stride`,
/// `p_threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub setting: Setting,
    pub kernel_family: String,
    pub kernel_sigma: Option<f64>,
    pub lambda: f64,
    pub runs: usize,
    pub budget: usize,
    pub seed: u64,
    pub criteria: Vec<Criterion>,
    pub label_col: String,
    pub max_n: usize,
    pub train_frac: f64,
    pub f_max: f64,
    pub ttest: TTest,
    pub stride: usize,
    pub p_threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::new(),
            setting: Setting::Realizable,
            kernel_family: "gaussian".into(),
            kernel_sigma: None,
            lambda: 0.01,
            runs: 10,
            budget: 50,
            seed: 0,
            criteria: vec![Criterion::Random, Criterion::Mmd, Criterion::Discrepancy, Criterion::NuclearDiscrepancy],
            label_col: "y".into(),
            max_n: 1000,
            train_frac: 0.65,
            f_max: 1.0,
            ttest: TTest::StudentPooled,
            stride: 5,
            p_threshold: 0.05,
        }
    }
}

pub use serde_json::Value as JsonValue;

/// A `--set` value: JSON if it parses as JSON, otherwise a plain string.
pub fn parse_override_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()))
}

fn key_err(key: &str, msg: impl fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    v.as_f64().ok_or_else(|| key_err(key, format!("expected a number, got {v}")))
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    v.as_u64().map(|u| u as usize).ok_or_else(|| key_err(key, format!("expected a non-negative integer, got {v}")))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| key_err(key, format!("expected a string, got {v}")))
}

impl ExperimentConfig {
    /// Parses a JSON object, then applies `overrides` in order. Unknown keys
    /// are rejected.
    pub fn from_json(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        Self::from_map(map, overrides)
    }

    pub fn from_map(map: Map<String, Value>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in &map {
            cfg.set(k, v)?;
        }
        for (k, raw) in overrides {
            cfg.set(k, &parse_override_value(raw))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key.
    pub fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        match key {
            "dataset" => self.dataset = PathBuf::from(as_str(key, v)?),
            "setting" => {
                self.setting = match as_str(key, v)? {
                    "realizable" => Setting::Realizable,
                    "agnostic" => Setting::Agnostic,
                    other => return Err(key_err(key, format!("expected \"realizable\" or \"agnostic\", got {other:?}"))),
                }
            }
            "kernel.family" => self.kernel_family = as_str(key, v)?.to_owned(),
            "kernel.sigma" => self.kernel_sigma = if v.is_null() { None } else { Some(as_f64(key, v)?) },
            "lambda" => self.lambda = as_f64(key, v)?,
            "runs" => self.runs = as_usize(key, v)?,
            "budget" => self.budget = as_usize(key, v)?,
            "seed" => self.seed = v.as_u64().ok_or_else(|| key_err(key, format!("expected a non-negative integer, got {v}")))?,
            "criteria" => {
                let names: Vec<String> = match v {
                    Value::Array(items) => items.iter().map(|i| as_str(key, i).map(str::to_owned)).collect::<Result<_>>()?,
                    Value::String(s) => s.split(',').map(|p| p.trim().to_owned()).filter(|p| !p.is_empty()).collect(),
                    other => return Err(key_err(key, format!("expected a list of names, got {other}"))),
                };
                let mut criteria = Vec::with_capacity(names.len());
                for n in names {
                    let c: Criterion = n.parse().map_err(|e| key_err(key, e))?;
                    if !criteria.contains(&c) {
                        criteria.push(c);
                    }
                }
                self.criteria = criteria;
            }
            "label_col" => self.label_col = as_str(key, v)?.to_owned(),
            "max_n" => self.max_n = as_usize(key, v)?,
            "train_frac" => self.train_frac = as_f64(key, v)?,
            "f_max" => self.f_max = as_f64(key, v)?,
            "ttest" => {
                self.ttest = match as_str(key, v)? {
                    "student_pooled" | "student" => TTest::StudentPooled,
                    "welch" => TTest::Welch,
                    other => return Err(key_err(key, format!("expected \"student_pooled\" or \"welch\", got {other:?}"))),
                }
            }
            "stride" => self.stride = as_usize(key, v)?,
            "p_threshold" => self.p_threshold = as_f64(key, v)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.as_os_str().is_empty() {
            return Err(key_err("dataset", "missing"));
        }
        if self.runs < 1 {
            return Err(key_err("runs", "must be at least 1"));
        }
        if self.budget < 1 {
            return Err(key_err("budget", "must be at least 1"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(key_err("lambda", format!("must be positive, got {}", self.lambda)));
        }
        if !(self.f_max > 0.0 && self.f_max.is_finite()) {
            return Err(key_err("f_max", format!("must be positive, got {}", self.f_max)));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(key_err("train_frac", format!("must lie in (0, 1), got {}", self.train_frac)));
        }
        if self.criteria.is_empty() {
            return Err(key_err("criteria", "must name at least one criterion"));
        }
        if self.stride < 1 {
            return Err(key_err("stride", "must be at least 1"));
        }
        if !(self.p_threshold > 0.0 && self.p_threshold < 1.0) {
            return Err(key_err("p_threshold", format!("must lie in (0, 1), got {}", self.p_threshold)));
        }
        if self.max_n < 3 {
            return Err(key_err("max_n", "must be at least 3"));
        }
        self.kernel()?;
        Ok(())
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        KernelSpec::from_family(&self.kernel_family, self.kernel_sigma).map_err(|e| match e {
            Error::Config(msg) if self.kernel_family == "gaussian" => key_err("kernel.sigma", msg),
            Error::Config(msg) => key_err("kernel.family", msg),
            other => other,
        })
    }
}

/// Dataset after subsampling, standardization and (if realizable) label
/// synthesis. `target` is the labeling model in the realizable setting.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub data: Dataset,
    pub target: Option<TrainedModel>,
}

/// Loads and preprocesses the configured dataset.
pub fn prepare(cfg: &ExperimentConfig) -> Result<PreparedData> {
    if !cfg.dataset.is_file() {
        return Err(Error::Config(format!("dataset: file not found: {}", cfg.dataset.display())));
    }
    let raw = load_csv(&cfg.dataset, &cfg.label_col, LabelMode::Binary)?;
    let data = standardize(&subsample(&raw, cfg.max_n, cfg.seed)?);
    match cfg.setting {
        Setting::Agnostic => Ok(PreparedData { data, target: None }),
        Setting::Realizable => {
            let (data, model) = synthesize_realizable_labels(&data, &cfg.kernel()?, cfg.lambda)?;
            Ok(PreparedData { data, target: Some(model) })
        }
    }
}

/// Fits a model on every row of `d` and relabels each row with the model's
/// prediction. Returns the relabeled dataset and the model.
pub fn synthesize_realizable_labels(d: &Dataset, kernel: &KernelSpec, reg_lambda: f64) -> Result<(Dataset, TrainedModel)> {
    let model = fit(d.features(), d.labels(), kernel, reg_lambda)?;
    let labels = predict(&model, d.features())?;
    Ok((d.with_labels(labels)?, model))
}

/// Bandwidths `10^t` for 15 evenly spaced `t` in `[-0.5, 1.25]`.
pub fn default_sigma_grid() -> Vec<f64> {
    (0..15).map(|i| 10f64.powf(-0.5 + 1.75 * i as f64 / 14.0)).collect()
}

/// `10^t` for `t = -3.0, -2.6, …, -1.0`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..6).map(|i| 10f64.powf(-3.0 + 0.4 * i as f64)).collect()
}

/// Grid search: each rep labels 25 random rows, fits and scores MSE on the
/// rest. Every grid point sees the same draws. Returns the `(σ, λ)` pair
/// with the lowest average, earliest in grid order on ties.
pub fn tune_hyperparameters(d: &Dataset, sigmas: &[f64], lambdas: &[f64], reps: usize, seed: u64) -> Result<(f64, f64)> {
    if d.n() <= TUNE_LABELED {
        return Err(Error::InvalidDataset(format!("tuning needs more than {TUNE_LABELED} rows, got {}", d.n())));
    }
    if sigmas.is_empty() || lambdas.is_empty() || reps == 0 {
        return Err(Error::Config("tuning needs nonempty grids and at least one rep".into()));
    }
    let draws: Vec<(Vec<usize>, Vec<usize>)> = (0..reps as u64)
        .map(|r| {
            let mut idx = sample(&mut seeded_rng(seed.wrapping_add(r), TUNE_STREAM), d.n(), TUNE_LABELED).into_vec();
            idx.sort_unstable();
            let rest = (0..d.n()).filter(|i| idx.binary_search(i).is_err()).collect();
            (idx, rest)
        })
        .collect();
    let mut best: Option<(f64, f64, f64)> = None;
    for &sigma in sigmas {
        let kernel = KernelSpec::gaussian(sigma)?;
        for &lambda in lambdas {
            let mut total = 0.0;
            for (labeled, rest) in &draws {
                let model = fit_subset(d.features(), labeled, d.labels(), &kernel, lambda)?;
                let pred = predict(&model, &select_rows(d.features(), rest))?;
                let y = DVector::from_iterator(rest.len(), rest.iter().map(|&i| d.labels()[i]));
                total += mse(&pred, &y)?;
            }
            let avg = total / reps as f64;
            if best.is_none_or(|(_, _, b)| avg < b) {
                best = Some((sigma, lambda, avg));
            }
        }
    }
    let (sigma, lambda, _) = best.expect("nonempty grid");
    Ok((sigma, lambda))
}

/// Test MSE after every query, one row per run.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionCurves {
    pub criterion: Criterion,
    /// `runs × budget`
    pub mse: DMatrix<f64>,
    /// Queries per run, as rows of the prepared dataset.
    pub queries: Vec<Vec<usize>>,
}

impl CriterionCurves {
    pub fn mean(&self) -> Vec<f64> {
        self.mse.column_iter().map(|c| c.mean()).collect()
    }

    /// Sample standard deviation over runs divided by `√runs`; zero for a
    /// single run.
    pub fn stderr(&self) -> Vec<f64> {
        let runs = self.mse.nrows();
        self.mse
            .column_iter()
            .map(|c| if runs < 2 { 0.0 } else { (c.variance() * runs as f64 / (runs - 1) as f64).sqrt() / (runs as f64).sqrt() })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurveSet {
    pub curves: Vec<CriterionCurves>,
    /// Seed of each run.
    pub seeds: Vec<u64>,
    pub budget: usize,
}

impl LearningCurveSet {
    pub fn get(&self, criterion: Criterion) -> Option<&CriterionCurves> {
        self.curves.iter().find(|c| c.criterion == criterion)
    }
}

/// Loads the dataset and runs the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<LearningCurveSet> {
    let prepared = prepare(cfg)?;
    run_experiment_on(cfg, &prepared, false)
}

/// One active learning session per run and criterion on prepared data. Run
/// `r` uses seed `cfg.seed + r` for its split and random queries. With
/// `parallel`, runs execute on the rayon pool; results are identical.
pub fn run_experiment_on(cfg: &ExperimentConfig, prepared: &PreparedData, parallel: bool) -> Result<LearningCurveSet> {
    cfg.validate()?;
    let kernel = cfg.kernel()?;
    let seeds: Vec<u64> = (0..cfg.runs as u64).map(|r| cfg.seed.wrapping_add(r)).collect();
    let one_run = |seed: u64| run_once(cfg, prepared, &kernel, seed);
    let per_run: Vec<Vec<(Vec<f64>, Vec<usize>)>> = map_runs(&seeds, parallel, one_run)?;

    let curves = cfg
        .criteria
        .iter()
        .enumerate()
        .map(|(ci, &criterion)| {
            let mse = DMatrix::from_fn(cfg.runs, cfg.budget, |r, q| per_run[r][ci].0[q]);
            let queries = per_run.iter().map(|run| run[ci].1.clone()).collect();
            CriterionCurves { criterion, mse, queries }
        })
        .collect();
    Ok(LearningCurveSet { curves, seeds, budget: cfg.budget })
}

#[cfg(feature = "parallel")]
fn map_runs<T: Send>(seeds: &[u64], parallel: bool, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    use rayon::prelude::*;
    if parallel {
        seeds.par_iter().map(|&s| f(s)).collect()
    } else {
        seeds.iter().map(|&s| f(s)).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn map_runs<T>(seeds: &[u64], _parallel: bool, f: impl Fn(u64) -> Result<T>) -> Result<Vec<T>> {
    seeds.iter().map(|&s| f(s)).collect()
}

fn run_once(cfg: &ExperimentConfig, prepared: &PreparedData, kernel: &KernelSpec, seed: u64) -> Result<Vec<(Vec<f64>, Vec<usize>)>> {
    let data = &prepared.data;
    let sp = split(data.n(), cfg.train_frac, seed)?;
    if cfg.budget > sp.train.len() {
        return Err(key_err("budget", format!("{} exceeds the pool size {}", cfg.budget, sp.train.len())));
    }
    let x = data.features();
    let x_test = select_rows(x, &sp.test);
    let y_test = DVector::from_iterator(sp.test.len(), sp.test.iter().map(|&i| data.labels()[i]));
    cfg.criteria
        .iter()
        .map(|&criterion| {
            let mut state = QueryState::new(sp.train.clone())?;
            let mut rng = seeded_rng(seed, RANDOM_QUERY_STREAM);
            let mut curve = Vec::with_capacity(cfg.budget);
            let queries = run_session_with(x, &mut state, criterion, kernel, cfg.budget, &mut rng, false, |s| {
                let h = fit_subset(x, s.labeled(), data.labels(), kernel, cfg.lambda)?;
                curve.push(mse(&predict(&h, &x_test)?, &y_test)?);
                Ok(())
            })?;
            Ok((curve, queries))
        })
        .collect()
}

/// One row of the per-query error decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionRow {
    pub query: usize,
    pub bins: Bins,
    /// `L_Q(h, f)`
    pub lq: f64,
    /// `L_P(h, f)`
    pub lp: f64,
}

/// Runs one session (run index `run`) and decomposes `L_P − L_Q` after every
/// query. Only defined in the realizable setting, where `f` is known.
pub fn decomposition_trace(cfg: &ExperimentConfig, prepared: &PreparedData, criterion: Criterion, run: usize) -> Result<Vec<DecompositionRow>> {
    let f = prepared
        .target
        .as_ref()
        .ok_or_else(|| key_err("setting", "the decomposition needs the realizable setting"))?;
    let kernel = cfg.kernel()?;
    let seed = cfg.seed.wrapping_add(run as u64);
    let data = &prepared.data;
    let sp = split(data.n(), cfg.train_frac, seed)?;
    if cfg.budget > sp.train.len() {
        return Err(key_err("budget", format!("{} exceeds the pool size {}", cfg.budget, sp.train.len())));
    }
    let x = data.features();
    let mut state = QueryState::new(sp.train)?;
    let mut rows = Vec::with_capacity(cfg.budget);
    run_session_with(x, &mut state, criterion, &kernel, cfg.budget, &mut seeded_rng(seed, RANDOM_QUERY_STREAM), false, |s| {
        let h = fit_subset(x, s.labeled(), data.labels(), &kernel, cfg.lambda)?;
        let r = decompose_kernel(f, &h, x, s)?;
        let (lp, lq) = pool_losses(f, &h, x, s)?;
        rows.push(DecompositionRow { query: s.labeled().len(), bins: r.bins, lq, lp });
        Ok(())
    })?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Win,
    Tie,
    Loss,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Win => "win",
            Verdict::Tie => "tie",
            Verdict::Loss => "loss",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    /// 1-based query count.
    pub query: usize,
    pub p_value: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinTieLoss {
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    pub stride: usize,
    pub p_threshold: f64,
    pub checkpoints: Vec<Checkpoint>,
}

/// Two-tailed p-value of a two-sample t-test. Degenerate inputs (no
/// variance, or too few samples for a variance estimate) give 1 when the
/// means agree and 0 otherwise.
pub fn t_test(a: &[f64], b: &[f64], kind: TTest) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let var = |v: &[f64], m: f64| if v.len() < 2 { 0.0 } else { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64 };
    let (va, vb) = (var(a, ma), var(b, mb));
    let (se, df) = match kind {
        TTest::StudentPooled => {
            let df = na + nb - 2.0;
            let pooled = if df > 0.0 { ((na - 1.0) * va + (nb - 1.0) * vb) / df } else { 0.0 };
            ((pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        TTest::Welch => {
            let (sa, sb) = (va / na, vb / nb);
            let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
            ((sa + sb).sqrt(), df)
        }
    };
    let degenerate = |same: bool| if same { 1.0 } else { 0.0 };
    if !(se > 0.0) || !(df > 0.0) || !df.is_finite() {
        return degenerate(ma == mb);
    }
    let t = (ma - mb) / se;
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.cdf(-t.abs())).min(1.0)
}

/// Win/tie/loss of `a` against `b` (both `runs × budget`, lower is better)
/// at queries `stride, 2·stride, …`.
pub fn compare(a: &DMatrix<f64>, b: &DMatrix<f64>, stride: usize, p_threshold: f64, kind: TTest) -> Result<WinTieLoss> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!("curve shapes {:?} and {:?} differ", a.shape(), b.shape())));
    }
    if stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    let mut out = WinTieLoss { wins: 0, ties: 0, losses: 0, stride, p_threshold, checkpoints: Vec::new() };
    for query in (stride..=a.ncols()).step_by(stride) {
        let ca: Vec<f64> = a.column(query - 1).iter().copied().collect();
        let cb: Vec<f64> = b.column(query - 1).iter().copied().collect();
        let p = t_test(&ca, &cb, kind);
        let verdict = if p >= p_threshold {
            Verdict::Tie
        } else if ca.iter().sum::<f64>() < cb.iter().sum::<f64>() {
            Verdict::Win
        } else {
            Verdict::Loss
        };
        match verdict {
            Verdict::Win => out.wins += 1,
            Verdict::Tie => out.ties += 1,
            Verdict::Loss => out.losses += 1,
        }
        out.checkpoints.push(Checkpoint { query, p_value: p, verdict });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelativeCurve {
    pub criterion: Criterion,
    /// Mean MSE minus the baseline mean MSE, per query.
    pub difference: Vec<f64>,
    /// Standard error of the criterion's own mean.
    pub stderr: Vec<f64>,
}

pub fn relative_curve(set: &LearningCurveSet, baseline: Criterion) -> Result<Vec<RelativeCurve>> {
    let base = set
        .get(baseline)
        .ok_or_else(|| Error::Config(format!("baseline {baseline} is not in the curve set")))?
        .mean();
    Ok(set
        .curves
        .iter()
        .map(|c| RelativeCurve {
            criterion: c.criterion,
            difference: c.mean().iter().zip(&base).map(|(m, b)| m - b).collect(),
            stderr: c.stderr(),
        })
        .collect())
}

/// Every pair `(a, b)` of configured criteria with `a` listed after `b`.
pub fn comparisons(set: &LearningCurveSet, cfg: &ExperimentConfig) -> Result<Vec<(String, WinTieLoss)>> {
    let mut out = Vec::new();
    for (i, a) in set.curves.iter().enumerate() {
        for b in &set.curves[..i] {
            let wtl = compare(&a.mse, &b.mse, cfg.stride, cfg.p_threshold, cfg.ttest)?;
            out.push((format!("{}_vs_{}", a.criterion, b.criterion), wtl));
        }
    }
    Ok(out)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// `criterion,run,query,mse`
pub fn write_curves(set: &LearningCurveSet, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let e = io_err(path);
    writeln!(w, "criterion,run,query,mse").map_err(&e)?;
    for c in &set.curves {
        for (r, row) in c.mse.row_iter().enumerate() {
            for (q, v) in row.iter().enumerate() {
                writeln!(w, "{},{},{},{:?}", c.criterion, r, q + 1, v).map_err(&e)?;
            }
        }
    }
    w.flush().map_err(&e)
}

/// Reads a file written by [`write_curves`]. Query lists are not stored
/// there and come back empty; run seeds come back as run indices.
pub fn read_curves(path: &Path) -> Result<LearningCurveSet> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["criterion", "run", "query", "mse"] {
        return Err(Error::Parse { row: 0, column: String::new(), message: "expected header criterion,run,query,mse".into() });
    }
    let mut entries: Vec<(Criterion, Vec<(usize, usize, f64)>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let field = |c: usize| record.get(c).unwrap_or("");
        let parse_err = |column: &str, value: &str| Error::Parse { row, column: column.into(), message: format!("bad value {value:?}") };
        let criterion: Criterion = field(0).parse().map_err(|_| parse_err("criterion", field(0)))?;
        let run: usize = field(1).parse().map_err(|_| parse_err("run", field(1)))?;
        let query: usize = field(2).parse().map_err(|_| parse_err("query", field(2)))?;
        let value: f64 = field(3).parse().map_err(|_| parse_err("mse", field(3)))?;
        if query == 0 {
            return Err(parse_err("query", "0"));
        }
        match entries.iter_mut().find(|(c, _)| *c == criterion) {
            Some((_, v)) => v.push((run, query, value)),
            None => entries.push((criterion, vec![(run, query, value)])),
        }
    }
    let Some((_, first)) = entries.first() else {
        return Err(Error::InvalidDataset(format!("{}: no curve rows", path.display())));
    };
    let runs = first.iter().map(|e| e.0).max().unwrap_or(0) + 1;
    let budget = first.iter().map(|e| e.1).max().unwrap_or(0);
    let mut curves = Vec::with_capacity(entries.len());
    for (criterion, values) in entries {
        let mut mse = DMatrix::from_element(runs, budget, f64::NAN);
        for (r, q, v) in values {
            if r >= runs || q > budget {
                return Err(Error::InvalidDataset(format!("{criterion}: curves differ in shape")));
            }
            mse[(r, q - 1)] = v;
        }
        if mse.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidDataset(format!("{criterion}: missing (run, query) entries")));
        }
        curves.push(CriterionCurves { criterion, mse, queries: Vec::new() });
    }
    Ok(LearningCurveSet { curves, seeds: (0..runs as u64).collect(), budget })
}

/// `criterion,query,mean,stderr,mean_minus_random`; the last column is empty
/// when random sampling was not run.
pub fn write_summary(set: &LearningCurveSet, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let e = io_err(path);
    let base = set.get(Criterion::Random).map(|c| c.mean());
    writeln!(w, "criterion,query,mean,stderr,mean_minus_random").map_err(&e)?;
    for c in &set.curves {
        for (q, (m, s)) in c.mean().iter().zip(c.stderr()).enumerate() {
            let rel = base.as_ref().map_or(String::new(), |b| format!("{:?}", m - b[q]));
            writeln!(w, "{},{},{:?},{:?},{}", c.criterion, q + 1, m, s, rel).map_err(&e)?;
        }
    }
    w.flush().map_err(&e)
}

/// `pair,query,p_value,verdict`
pub fn write_wtl(pairs: &[(String, WinTieLoss)], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let e = io_err(path);
    writeln!(w, "pair,query,p_value,verdict").map_err(&e)?;
    for (name, wtl) in pairs {
        for c in &wtl.checkpoints {
            writeln!(w, "{},{},{:?},{}", name, c.query, c.p_value, c.verdict).map_err(&e)?;
        }
    }
    w.flush().map_err(&e)
}

/// `query,EV1,EV2_9,EV10_49,EV50plus,LQ,LP`
pub fn write_decomposition(rows: &[DecompositionRow], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let e = io_err(path);
    let labels = rows.first().map_or_else(|| vec!["EV1".into(), "EV2_9".into(), "EV10_49".into(), "EV50plus".into()], |r| r.bins.labels());
    writeln!(w, "query,{},LQ,LP", labels.join(",")).map_err(&e)?;
    for r in rows {
        let sums: Vec<String> = r.bins.sums().iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{},{},{:?},{:?}", r.query, sums.join(","), r.lq, r.lp).map_err(&e)?;
    }
    w.flush().map_err(&e)
}
