//! Metrics, repeated k-fold cross-validation, log-grid search over `(c, lambda)`
//! and the resumable benchmark harness.
//!
//! Test folds are only ever touched inside [`cross_validate`]; scaling and
//! model selection see training folds only (or, in [`ScalingMode::Prescaled`],
//! data that arrived already scaled).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{apply_scaling, fit_scaling, kfold_indices, Dataset, Manifest, TaskKind};
use crate::error::{Error, Result};
use crate::learners::{train, train_prescaled, Predictor};
use crate::reference::reference_value;
use crate::solvers::{Method, SolverConfig};
use crate::variational::Mode;

pub const RECORD_SCHEMA: u32 = 1;

pub fn accuracy(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(predicted, truth)?;
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

pub fn mse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(predicted, truth)?;
    let sum: f64 = predicted.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / truth.len() as f64)
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            got: a.len(),
        });
    }
    if b.is_empty() {
        return Err(Error::InvalidParameter("metrics need at least one sample".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Mse,
}

impl Metric {
    pub fn for_dataset(dataset: &Dataset) -> Metric {
        if dataset.is_classification() {
            Metric::Accuracy
        } else {
            Metric::Mse
        }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Metric::Accuracy => a > b,
            Metric::Mse => a < b,
        }
    }

    fn score(self, predictor: &Predictor, test: &Dataset) -> Result<f64> {
        let predicted: Vec<f64> = test.rows().map(|x| predictor.predict(x)).collect::<Result<_>>()?;
        match self {
            Metric::Accuracy => accuracy(&predicted, test.targets()),
            Metric::Mse => mse(&predicted, test.targets()),
        }
    }
}

/// Mode and solver of one method column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MethodSpec {
    pub mode: ModeKey,
    pub method: MethodKey,
}

// Ordered stand-ins so method columns sort in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeKey {
    Lr,
    Tv,
    Ee,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodKey {
    Direct,
    Gd,
    Lagle,
}

impl MethodSpec {
    pub const LR: MethodSpec = MethodSpec::new(Mode::Lr, Method::Direct);
    pub const TV_GD: MethodSpec = MethodSpec::new(Mode::Tv, Method::Gd);
    pub const TV_LAGLE: MethodSpec = MethodSpec::new(Mode::Tv, Method::Lagle);
    pub const EE_GD: MethodSpec = MethodSpec::new(Mode::Ee, Method::Gd);
    pub const EE_LAGLE: MethodSpec = MethodSpec::new(Mode::Ee, Method::Lagle);

    pub const fn new(mode: Mode, method: Method) -> Self {
        MethodSpec {
            mode: match mode {
                Mode::Lr => ModeKey::Lr,
                Mode::Tv => ModeKey::Tv,
                Mode::Ee => ModeKey::Ee,
            },
            method: match method {
                Method::Direct => MethodKey::Direct,
                Method::Gd => MethodKey::Gd,
                Method::Lagle => MethodKey::Lagle,
            },
        }
    }

    pub fn mode(self) -> Mode {
        match self.mode {
            ModeKey::Lr => Mode::Lr,
            ModeKey::Tv => Mode::Tv,
            ModeKey::Ee => Mode::Ee,
        }
    }

    pub fn method(self) -> Method {
        match self.method {
            MethodKey::Direct => Method::Direct,
            MethodKey::Gd => Method::Gd,
            MethodKey::Lagle => Method::Lagle,
        }
    }

    /// Columns of the classification tables.
    pub fn classification_columns() -> Vec<MethodSpec> {
        vec![Self::LR, Self::TV_GD, Self::TV_LAGLE, Self::EE_GD, Self::EE_LAGLE]
    }

    /// Columns of the regression table (the iterative methods use GD there).
    pub fn regression_columns() -> Vec<MethodSpec> {
        vec![Self::LR, Self::TV_GD, Self::EE_GD]
    }
}

impl std::fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.method() {
            Method::Direct => write!(f, "{}", self.mode()),
            m => write!(f, "{}-{}", self.mode(), m),
        }
    }
}

impl std::str::FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (mode, method) = match s.split_once('-') {
            Some((m, s)) => (m.parse::<Mode>()?, s.parse::<Method>()?),
            None => {
                let mode: Mode = s.parse()?;
                let method = if mode == Mode::Lr { Method::Direct } else { Method::Gd };
                (mode, method)
            }
        };
        let spec = MethodSpec::new(mode, method);
        SolverConfig::new(mode, method).validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> String {
        m.to_string()
    }
}

/// Inclusive exponent range `lo..=hi` in steps of `step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpRange {
    pub lo: i32,
    pub hi: i32,
    pub step: i32,
}

impl ExpRange {
    pub fn exponents(&self) -> Vec<i32> {
        if self.step <= 0 || self.lo > self.hi {
            return Vec::new();
        }
        (self.lo..=self.hi).step_by(self.step as usize).collect()
    }
}

impl std::str::FromStr for ExpRange {
    type Err = Error;

    /// `lo:hi:step` or `lo:hi` (step 1).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.trim()
                .parse::<i32>()
                .map_err(|_| Error::InvalidParameter(format!("bad grid range {s:?}")))
        };
        let r = match parts.as_slice() {
            [lo, hi] => ExpRange { lo: num(lo)?, hi: num(hi)?, step: 1 },
            [lo, hi, step] => ExpRange { lo: num(lo)?, hi: num(hi)?, step: num(step)? },
            _ => return Err(Error::InvalidParameter(format!("bad grid range {s:?}, expected lo:hi:step"))),
        };
        if r.exponents().is_empty() {
            return Err(Error::InvalidParameter(format!("grid range {s:?} is empty")));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub base: f64,
    pub c: ExpRange,
    pub lambda: ExpRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c_exp: i32,
    pub lambda_exp: i32,
    pub c: f64,
    pub lambda: f64,
}

impl GridPoint {
    pub fn new(c: f64, lambda: f64) -> Self {
        GridPoint { c_exp: 0, lambda_exp: 0, c, lambda }
    }
}

impl GridSpec {
    /// Both exponents over `lo..=hi` with `step`.
    pub fn square(base: f64, lo: i32, hi: i32, step: i32) -> Self {
        let r = ExpRange { lo, hi, step };
        GridSpec { base, c: r, lambda: r }
    }

    /// Binary classification and regression: exponents -10..10, step 2.
    pub fn coarse(base: f64) -> Self {
        Self::square(base, -10, 10, 2)
    }

    /// Multiclass: exponents -10..10, step 1.
    pub fn fine(base: f64) -> Self {
        Self::square(base, -10, 10, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base > 1.0 && self.base.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid base must be > 1, got {}", self.base)));
        }
        if self.c.exponents().is_empty() || self.lambda.exponents().is_empty() {
            return Err(Error::InvalidParameter("grid ranges must be nonempty".into()));
        }
        Ok(())
    }

    /// Points with `c` in the outer loop.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for ce in self.c.exponents() {
            for le in self.lambda.exponents() {
                out.push(GridPoint {
                    c_exp: ce,
                    lambda_exp: le,
                    c: self.base.powi(ce),
                    lambda: self.base.powi(le),
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMode {
    /// Data arrives scaled; folds are used as-is.
    Prescaled,
    /// Min-max scaling is fitted on each training split.
    PerFold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSettings {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub scaling: ScalingMode,
}

impl Default for CvSettings {
    fn default() -> Self {
        CvSettings {
            folds: 5,
            repeats: 10,
            seed: 0,
            scaling: ScalingMode::PerFold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub repeat: usize,
    pub fold: usize,
    pub test_size: usize,
    pub score: Option<f64>,
    pub error: Option<String>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub metric: Metric,
    pub grid_point: GridPoint,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub records: Vec<FoldRecord>,
    /// Mean over successful folds; NaN when every fold failed.
    pub mean: f64,
    /// Sample standard deviation over successful folds.
    pub std: f64,
    pub failed: usize,
    pub wall_time: Duration,
}

impl CvReport {
    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().filter_map(|r| r.score)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn run_fold(dataset: &Dataset, train_idx: &[usize], test_idx: &[usize], config: &SolverConfig, point: &GridPoint, scaling: ScalingMode, metric: Metric) -> Result<f64> {
    let train_set = dataset.subset(train_idx);
    let test_set = dataset.subset(test_idx);
    let trained = match scaling {
        ScalingMode::Prescaled => train_prescaled(&train_set, point.c, config)?,
        ScalingMode::PerFold => train(&train_set, point.c, config)?,
    };
    metric.score(&trained.predictor, &test_set)
}

/// Repeated k-fold CV at one grid point. Repeat `r` shuffles with `seed + r`.
/// Failed folds are recorded and excluded from the mean.
pub fn cross_validate(dataset: &Dataset, config: &SolverConfig, point: GridPoint, settings: &CvSettings) -> Result<CvReport> {
    let start = Instant::now();
    let metric = Metric::for_dataset(dataset);
    if settings.repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be >= 1".into()));
    }
    let config = config.clone().with_lambda(point.lambda);
    config.validate()?;
    let mut records = Vec::with_capacity(settings.folds * settings.repeats);
    for repeat in 0..settings.repeats {
        let folds = kfold_indices(dataset.len(), settings.folds, settings.seed.wrapping_add(repeat as u64))?;
        for (f, test_idx) in folds.iter().enumerate() {
            let train_idx: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            let t0 = Instant::now();
            let outcome = run_fold(dataset, &train_idx, test_idx, &config, &point, settings.scaling, metric);
            let (score, error) = match outcome {
                Ok(s) if s.is_finite() => (Some(s), None),
                Ok(s) => (None, Some(format!("non-finite score {s}"))),
                Err(e) => (None, Some(e.to_string())),
            };
            records.push(FoldRecord {
                repeat,
                fold: f,
                test_size: test_idx.len(),
                score,
                error,
                elapsed: t0.elapsed(),
            });
        }
    }
    let scores: Vec<f64> = records.iter().filter_map(|r| r.score).collect();
    let (mean, std) = mean_std(&scores);
    Ok(CvReport {
        metric,
        grid_point: point,
        folds: settings.folds,
        repeats: settings.repeats,
        seed: settings.seed,
        failed: records.len() - scores.len(),
        records,
        mean,
        std,
        wall_time: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub point: GridPoint,
    pub mean: f64,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub best: GridPoint,
    pub best_score: f64,
    pub metric: Metric,
    pub table: Vec<GridRecord>,
}

/// Evaluates every grid point with single-repeat CV (on the current rayon pool)
/// and picks the best mean. Ties go to the smaller `lambda`, then the smaller `c`.
pub fn grid_search(dataset: &Dataset, config: &SolverConfig, grid: &GridSpec, settings: &CvSettings) -> Result<GridSearch> {
    grid.validate()?;
    let metric = Metric::for_dataset(dataset);
    let search = CvSettings { repeats: 1, ..*settings };
    let table: Vec<GridRecord> = grid
        .points()
        .into_par_iter()
        .map(|point| match cross_validate(dataset, config, point, &search) {
            Ok(r) => GridRecord { point, mean: r.mean, failed: r.failed },
            Err(_) => GridRecord { point, mean: f64::NAN, failed: search.folds },
        })
        .collect();
    let mut best: Option<&GridRecord> = None;
    for rec in table.iter().filter(|r| r.mean.is_finite()) {
        best = match best {
            None => Some(rec),
            Some(b) if metric.better(rec.mean, b.mean) => Some(rec),
            Some(b) if rec.mean == b.mean
                && (rec.point.lambda, rec.point.c) < (b.point.lambda, b.point.c) => Some(rec),
            keep => keep,
        };
    }
    match best {
        Some(b) => Ok(GridSearch {
            best: b.point,
            best_score: b.mean,
            metric,
            table: table.clone(),
        }),
        None => Err(Error::GridExhausted { failed: table.len() }),
    }
}

/// Runs `f` on a pool with `workers` threads (0: rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Everything that determines a benchmark cell's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub grid_base: f64,
    /// Replaces the per-task default grids when set.
    pub grid: Option<GridSpec>,
    pub scaling: ScalingMode,
    /// Elastica curvature weight (not searched).
    pub b: f64,
    /// Ridge parameter of the direct LR solve on classification data.
    pub eta_lr_classification: f64,
    /// Ridge parameter of the direct LR solve on regression data.
    pub eta_lr_regression: f64,
    /// Ridge parameter of the GD and lagged-iteration solves.
    pub eta_iterative: f64,
    pub max_iter: usize,
    pub tau: f64,
    pub eps_grad: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            folds: 5,
            repeats: 10,
            seed: 0,
            grid_base: 2.0,
            grid: None,
            scaling: ScalingMode::Prescaled,
            b: 0.01,
            eta_lr_classification: 1.0,
            eta_lr_regression: 1e-3,
            eta_iterative: 1e-3,
            max_iter: crate::solvers::DEFAULT_MAX_ITER,
            tau: crate::solvers::DEFAULT_TAU,
            eps_grad: crate::variational::DEFAULT_EPS_GRAD,
        }
    }
}

impl Protocol {
    pub fn grid_for(&self, task: TaskKind) -> GridSpec {
        self.grid.unwrap_or(match task {
            TaskKind::Multiclass => GridSpec::fine(self.grid_base),
            _ => GridSpec::coarse(self.grid_base),
        })
    }

    pub fn solver_config(&self, method: MethodSpec, task: TaskKind) -> SolverConfig {
        let mut cfg = SolverConfig::new(method.mode(), method.method());
        cfg.elastica.b = if method.mode() == Mode::Ee { self.b } else { 0.0 };
        cfg.elastica.eps_grad = self.eps_grad;
        cfg.eta = match (method.method(), task) {
            (Method::Direct, TaskKind::Regression) => self.eta_lr_regression,
            (Method::Direct, _) => self.eta_lr_classification,
            _ => self.eta_iterative,
        };
        cfg.max_iter = self.max_iter;
        cfg.tau = self.tau;
        cfg.seed = self.seed;
        cfg
    }

    pub fn cv_settings(&self) -> CvSettings {
        CvSettings {
            folds: self.folds,
            repeats: self.repeats,
            seed: self.seed,
            scaling: self.scaling,
        }
    }

    /// Applies the protocol's data preparation: in prescaled mode, features
    /// (and regression targets) are min-max scaled over the whole dataset.
    pub fn prepare(&self, dataset: &Dataset) -> Result<Dataset> {
        match self.scaling {
            ScalingMode::Prescaled => {
                let scaled = apply_scaling(&fit_scaling(dataset), dataset)?;
                Ok(if scaled.is_classification() { scaled } else { scaled.with_unit_targets() })
            }
            ScalingMode::PerFold => Ok(if dataset.is_classification() {
                dataset.clone()
            } else {
                dataset.with_unit_targets()
            }),
        }
    }
}

/// Result of one dataset x method cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub method: MethodSpec,
    pub dim: usize,
    pub size: usize,
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
    pub best: GridPoint,
    pub search_score: f64,
    pub failed_folds: usize,
    pub grid_points: usize,
    pub search_time: Duration,
    pub cv_time: Duration,
    pub reference: Option<f64>,
}

/// Grid search followed by the final `folds x repeats` CV at the winning point.
pub fn run_cell(dataset: &Dataset, task: TaskKind, method: MethodSpec, protocol: &Protocol) -> Result<(CellResult, CvReport)> {
    let prepared = protocol.prepare(dataset)?;
    let config = protocol.solver_config(method, task);
    let grid = protocol.grid_for(task);
    let settings = protocol.cv_settings();
    let t0 = Instant::now();
    let search = grid_search(&prepared, &config, &grid, &settings)?;
    let search_time = t0.elapsed();
    let report = cross_validate(&prepared, &config, search.best, &settings)?;
    let cell = CellResult {
        dataset: dataset.name().to_string(),
        method,
        dim: dataset.dim(),
        size: dataset.len(),
        metric: report.metric,
        mean: report.mean,
        std: report.std,
        best: search.best,
        search_score: search.best_score,
        failed_folds: report.failed,
        grid_points: search.table.len(),
        search_time,
        cv_time: report.wall_time,
        reference: reference_value(dataset.name(), &method.to_string()),
    };
    Ok((cell, report))
}

/// One line of the record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Record {
    Header {
        schema: u32,
        tool: String,
        protocol: Protocol,
    },
    Fold {
        dataset: String,
        method: MethodSpec,
        repeat: usize,
        fold: usize,
        c: f64,
        lambda: f64,
        seed: u64,
        score: Option<f64>,
        error: Option<String>,
        elapsed_ms: f64,
    },
    Cell(CellResult),
    Failure {
        dataset: String,
        method: Option<MethodSpec>,
        error: String,
    },
}

pub fn tool_version() -> String {
    format!("elastica {}", env!("CARGO_PKG_VERSION"))
}

/// Restricts a benchmark run to matching cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellFilter {
    pub dataset: Option<String>,
    pub method: Option<MethodSpec>,
}

impl CellFilter {
    fn accepts(&self, dataset: &str, method: MethodSpec) -> bool {
        self.dataset.as_deref().is_none_or(|d| d == dataset) && self.method.is_none_or(|m| m == method)
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkReport {
    pub cells: Vec<CellResult>,
    /// Cells skipped because the record file already held them.
    pub resumed: usize,
    pub failures: Vec<(String, Option<MethodSpec>, String)>,
    pub records_path: PathBuf,
    pub table_path: PathBuf,
}

/// Runs every selected dataset x method cell of `manifest`, appending to
/// `out_dir/records.jsonl` and rewriting `out_dir/table.txt`.
///
/// Cells already present in the record file are not recomputed. A record file
/// written under a different protocol is rejected.
pub fn benchmark_run(
    manifest: &Manifest,
    methods: Option<&[MethodSpec]>,
    protocol: &Protocol,
    out_dir: &Path,
    filter: &CellFilter,
    mut progress: impl FnMut(&str),
) -> Result<BenchmarkReport> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let records_path = out_dir.join("records.jsonl");
    let table_path = out_dir.join("table.txt");
    let mut done: BTreeMap<(String, MethodSpec), CellResult> = BTreeMap::new();
    let fresh = !records_path.exists();
    if !fresh {
        let file = std::fs::File::open(&records_path).map_err(|e| Error::io(&records_path, e))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&records_path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("{}: {e}", records_path.display()),
            })?;
            match rec {
                Record::Header { protocol: p, .. } if p != *protocol => {
                    return Err(Error::InvalidParameter(format!(
                        "{} was written under a different protocol; use another output directory",
                        records_path.display()
                    )))
                }
                Record::Cell(c) => {
                    done.insert((c.dataset.clone(), c.method), c);
                }
                _ => {}
            }
        }
    }
    let mut out = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&records_path)
        .map_err(|e| Error::io(&records_path, e))?;
    let mut write_record = |rec: &Record| -> Result<()> {
        let line = serde_json::to_string(rec).expect("records serialize");
        writeln!(out, "{line}").and_then(|_| out.flush()).map_err(|e| Error::io(&records_path, e))
    };
    if fresh {
        write_record(&Record::Header {
            schema: RECORD_SCHEMA,
            tool: tool_version(),
            protocol: protocol.clone(),
        })?;
    }

    let mut report = BenchmarkReport {
        records_path: records_path.clone(),
        table_path: table_path.clone(),
        ..Default::default()
    };
    for entry in &manifest.datasets {
        let columns = match methods {
            Some(m) => m.to_vec(),
            None if entry.task == TaskKind::Regression => MethodSpec::regression_columns(),
            None => MethodSpec::classification_columns(),
        };
        let selected: Vec<MethodSpec> = columns.into_iter().filter(|&m| filter.accepts(&entry.name, m)).collect();
        if selected.is_empty() {
            continue;
        }
        let dataset = match entry.load() {
            Ok(d) => d,
            Err(e) => {
                let msg = e.to_string();
                write_record(&Record::Failure { dataset: entry.name.clone(), method: None, error: msg.clone() })?;
                report.failures.push((entry.name.clone(), None, msg));
                continue;
            }
        };
        for method in selected {
            let key = (entry.name.clone(), method);
            if let Some(cell) = done.get(&key) {
                report.resumed += 1;
                report.cells.push(cell.clone());
                continue;
            }
            progress(&format!("{} / {method}", entry.name));
            match run_cell(&dataset, entry.task, method, protocol) {
                Ok((cell, cv)) => {
                    for r in &cv.records {
                        write_record(&Record::Fold {
                            dataset: entry.name.clone(),
                            method,
                            repeat: r.repeat,
                            fold: r.fold,
                            c: cell.best.c,
                            lambda: cell.best.lambda,
                            seed: protocol.seed.wrapping_add(r.repeat as u64),
                            score: r.score,
                            error: r.error.clone(),
                            elapsed_ms: r.elapsed.as_secs_f64() * 1e3,
                        })?;
                    }
                    write_record(&Record::Cell(cell.clone()))?;
                    done.insert(key, cell.clone());
                    report.cells.push(cell);
                }
                Err(e) => {
                    let msg = e.to_string();
                    write_record(&Record::Failure { dataset: entry.name.clone(), method: Some(method), error: msg.clone() })?;
                    report.failures.push((entry.name.clone(), Some(method), msg));
                }
            }
        }
    }
    // the table shows every finished cell, not just this run's selection
    let rows: Vec<(String, TaskKind, usize, usize)> = manifest
        .datasets
        .iter()
        .filter_map(|e| {
            let cell = done.values().find(|c| c.dataset == e.name)?;
            Some((e.name.clone(), e.task, cell.dim, cell.size))
        })
        .collect();
    let finished: Vec<CellResult> = done.into_values().collect();
    let table = render_table(&rows, &finished, protocol);
    std::fs::write(&table_path, table).map_err(|e| Error::io(&table_path, e))?;
    Ok(report)
}

fn display_value(metric: Metric, v: f64) -> String {
    match metric {
        Metric::Accuracy => format!("{:.2}", 100.0 * v),
        Metric::Mse => format!("{:.3}", 1e3 * v),
    }
}

/// Plain-text table: accuracies in %, MSE in units of 1e-3. Each cell reads
/// `measured (reference, delta)`.
pub fn render_table(rows: &[(String, TaskKind, usize, usize)], cells: &[CellResult], protocol: &Protocol) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} table schema {RECORD_SCHEMA}; protocol {}",
        tool_version(),
        serde_json::to_string(protocol).expect("protocol serializes")
    );
    for task in [TaskKind::Binary, TaskKind::Multiclass, TaskKind::Regression] {
        let task_rows: Vec<_> = rows.iter().filter(|r| r.1 == task).collect();
        if task_rows.is_empty() {
            continue;
        }
        let columns = if task == TaskKind::Regression {
            MethodSpec::regression_columns()
        } else {
            MethodSpec::classification_columns()
        };
        let unit = if task == TaskKind::Regression { "MSE (1e-3)" } else { "accuracy (%)" };
        let _ = writeln!(out, "\n{task:?}, {unit}");
        let _ = write!(out, "{:<18}{:>5}{:>6}", "DATA", "DIM", "NUM");
        for m in &columns {
            let _ = write!(out, "  {:>24}", m.to_string().to_uppercase());
        }
        out.push('\n');
        for (name, _, dim, num) in task_rows {
            let _ = write!(out, "{name:<18}{dim:>5}{num:>6}");
            for m in &columns {
                let cell = cells.iter().find(|c| &c.dataset == name && c.method == *m);
                let text = match cell {
                    None => "-".to_string(),
                    Some(c) => {
                        let v = display_value(c.metric, c.mean);
                        match c.reference {
                            Some(r) => format!(
                                "{v} ({}, {:+.2})",
                                display_value(c.metric, r),
                                match c.metric {
                                    Metric::Accuracy => 100.0 * (c.mean - r),
                                    Metric::Mse => 1e3 * (c.mean - r),
                                }
                            ),
                            None => v,
                        }
                    }
                };
                let _ = write!(out, "  {text:>24}");
            }
            out.push('\n');
        }
    }
    out
}
