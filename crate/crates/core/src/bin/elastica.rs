use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use elastica::data::{self, DataFormat, Dataset, Manifest, TaskKind};
use elastica::eval::{
    self, CellFilter, CvSettings, ExpRange, GridPoint, GridSpec, MethodSpec, Protocol, ScalingMode,
};
use elastica::learners::{surface_grid, train, train_prescaled};
use elastica::model_file;
use elastica::solvers::{Method, SolverConfig};
use elastica::variational::Mode;
use elastica::{Error, Result};

/// Variational RBF learners: Laplacian, total variation and Euler's elastica.
#[derive(Parser, Debug)]
#[command(name = "elastica", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a predictor and write the model file plus a fit trace.
    Train(TrainArgs),
    /// Print one prediction per input row.
    Predict(PredictArgs),
    /// Repeated k-fold cross-validation at one grid point, or after a grid search.
    Cv(CvArgs),
    /// Run every dataset x method cell of a manifest, resumably.
    Benchmark(BenchmarkArgs),
    /// Dump u on a regular grid over a 2-D model's input plane.
    Surface(SurfaceArgs),
    /// Write the two-moons toy set as CSV.
    TwoMoons(MoonsArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FormatArg {
    Auto,
    Libsvm,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TaskArg {
    Auto,
    Binary,
    Multiclass,
    Regression,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Lr,
    Tv,
    Ee,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SolverArg {
    Direct,
    Gd,
    Lagle,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ScalingArg {
    /// Min-max scaling fitted on each training split.
    PerFold,
    /// Scale the whole file once up front.
    Prescaled,
}

#[derive(Args, Debug, Serialize)]
struct DataArgs {
    /// Dataset file (libsvm text or CSV with the target last).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    /// auto: integer targets with few distinct values are classes.
    #[arg(long, value_enum, default_value = "auto")]
    task: TaskArg,
}

#[derive(Args, Debug, Serialize)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "ee")]
    mode: ModeArg,
    /// Defaults to direct for lr and gd otherwise.
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Curvature weight (ee only).
    #[arg(long, default_value_t = 0.01)]
    b: f64,
    /// RBF width in exp(-c |x - x_i|^2).
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Ridge parameter; defaults to 1 for direct and 1e-3 for iterative solvers.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = elastica::solvers::DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value_t = elastica::solvers::DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = elastica::variational::DEFAULT_EPS_GRAD)]
    eps_grad: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct CvFlags {
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, value_enum, default_value = "per-fold")]
    scaling: ScalingArg,
    /// Worker threads for grid points (0: all cores).
    #[arg(long, env = "ELASTICA_WORKERS", default_value_t = 0)]
    workers: usize,
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    #[arg(long, default_value_t = 2.0)]
    grid_base: f64,
    /// Exponent range lo:hi:step for both c and lambda
    /// [default: -10:10:2, or -10:10:1 for multiclass].
    #[arg(long, allow_hyphen_values = true)]
    grid_range: Option<String>,
}

impl GridArgs {
    fn spec(&self, task: TaskKind) -> Result<GridSpec> {
        let spec = match &self.grid_range {
            Some(r) => {
                let r: ExpRange = r.parse()?;
                GridSpec { base: self.grid_base, c: r, lambda: r }
            }
            None if task == TaskKind::Multiclass => GridSpec::fine(self.grid_base),
            None => GridSpec::coarse(self.grid_base),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Train on the features as given instead of min-max scaling them.
    #[arg(long)]
    no_scaling: bool,
    /// Model file; the trace goes next to it with a .trace.jsonl suffix.
    #[arg(long, default_value = "model.elastica")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    /// Write predictions here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    cv: CvFlags,
    #[command(flatten)]
    grid: GridArgs,
    /// Grid-search c and lambda first instead of using --c and --lambda.
    #[arg(long)]
    search: bool,
    /// JSON report file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BenchmarkArgs {
    #[arg(long, default_value = "data/manifest.toml")]
    manifest: PathBuf,
    /// Only this dataset.
    #[arg(long)]
    dataset: Option<String>,
    /// Only this method: lr, tv-gd, tv-lagle, ee-gd or ee-lagle.
    #[arg(long)]
    method: Option<String>,
    /// Include datasets marked as stretch goals.
    #[arg(long)]
    stretch: bool,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "prescaled")]
    scaling: ScalingArg,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0.01)]
    b: f64,
    #[arg(long, default_value_t = elastica::solvers::DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value_t = elastica::solvers::DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = elastica::variational::DEFAULT_EPS_GRAD)]
    eps_grad: f64,
    /// Ridge parameter for every solver (default: 1 for classification lr,
    /// 1e-3 for regression lr and the iterative solvers).
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, env = "ELASTICA_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Output directory for records.jsonl and table.txt.
    #[arg(long, default_value = "benchmark-out")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SurfaceArgs {
    #[arg(long)]
    model: PathBuf,
    /// x1min:x1max:x2min:x2max in the original feature space.
    #[arg(long, default_value = "0:1:0:1", allow_hyphen_values = true)]
    bounds: String,
    /// Grid points per axis.
    #[arg(long, default_value_t = 100)]
    resolution: usize,
    /// Member model for multiclass predictors.
    #[arg(long, default_value_t = 0)]
    member: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct MoonsArgs {
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn header(command: &str, config: &impl Serialize) -> String {
    format!(
        "{} {command} {}",
        eval::tool_version(),
        serde_json::to_string(config).expect("flags serialize")
    )
}

fn load(path: &Path, format: FormatArg, task: TaskArg) -> Result<(Dataset, TaskKind)> {
    let format = match format {
        FormatArg::Auto => DataFormat::from_path(path),
        FormatArg::Libsvm => DataFormat::Libsvm,
        FormatArg::Csv => DataFormat::Csv,
    };
    let raw = data::load_dataset(path, format, TaskKind::Regression)?;
    let task = match task {
        TaskArg::Auto => data::infer_task(&raw),
        TaskArg::Binary => TaskKind::Binary,
        TaskArg::Multiclass => TaskKind::Multiclass,
        TaskArg::Regression => TaskKind::Regression,
    };
    let ds = if task == TaskKind::Regression { raw } else { raw.into_classification() };
    Ok((ds, task))
}

fn solver_config(args: &SolverArgs) -> Result<SolverConfig> {
    let mode = match args.mode {
        ModeArg::Lr => Mode::Lr,
        ModeArg::Tv => Mode::Tv,
        ModeArg::Ee => Mode::Ee,
    };
    let method = match args.solver {
        Some(SolverArg::Direct) => Method::Direct,
        Some(SolverArg::Gd) => Method::Gd,
        Some(SolverArg::Lagle) => Method::Lagle,
        None if mode == Mode::Lr => Method::Direct,
        None => Method::Gd,
    };
    let mut cfg = SolverConfig::new(mode, method)
        .with_lambda(args.lambda)
        .with_b(if mode == Mode::Ee { args.b } else { 0.0 })
        .with_tau(args.tau)
        .with_max_iter(args.max_iter);
    if let Some(eta) = args.eta {
        cfg = cfg.with_eta(eta);
    }
    cfg.elastica.eps_grad = args.eps_grad;
    cfg.seed = args.seed;
    cfg.validate()?;
    if !(args.c > 0.0 && args.c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c must be positive, got {}", args.c)));
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn trace_path(model: &Path) -> PathBuf {
    let mut name = model.as_os_str().to_owned();
    name.push(".trace.jsonl");
    PathBuf::from(name)
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let (ds, task) = load(&args.data.data, args.data.format, args.data.task)?;
    let cfg = solver_config(&args.solver)?;
    let trained = if args.no_scaling {
        train_prescaled(&ds, args.solver.c, &cfg)?
    } else {
        train(&ds, args.solver.c, &cfg)?
    };
    let head = serde_json::json!({
        "tool": eval::tool_version(),
        "command": "train",
        "flags": args,
        "task": task,
        "config": cfg,
        "width": args.solver.c,
        "dataset": { "name": ds.name(), "rows": ds.len(), "dim": ds.dim() },
    });
    model_file::save(&args.out, &trained.predictor, &head.to_string())?;
    let tpath = trace_path(&args.out);
    let mut w = create(&tpath)?;
    let io = |e| Error::io(&tpath, e);
    writeln!(w, "{head}").map_err(io)?;
    for (member, t) in trained.traces.iter().enumerate() {
        let line = serde_json::json!({ "member": member, "trace": t });
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)?;
    let iters: Vec<usize> = trained.traces.iter().map(|t| t.iterations_run).collect();
    eprintln!(
        "trained {:?} predictor on {} rows; iterations {:?}; wrote {} and {}",
        trained.predictor.kind(),
        ds.len(),
        iters,
        args.out.display(),
        tpath.display()
    );
    Ok(())
}

fn is_blank_input(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().all(|l| l.trim().is_empty()))
}

fn prediction_rows(path: &Path, format: FormatArg, dim: usize) -> Result<Vec<Vec<f64>>> {
    if is_blank_input(path)? {
        return Ok(Vec::new());
    }
    let format = match format {
        FormatArg::Auto => DataFormat::from_path(path),
        FormatArg::Libsvm => DataFormat::Libsvm,
        FormatArg::Csv => DataFormat::Csv,
    };
    let ds = data::load_dataset(path, format, TaskKind::Regression)?;
    // sparse rows may stop short of the last feature
    let pad = format == DataFormat::Libsvm && ds.dim() < dim;
    if ds.dim() != dim && !pad {
        return Err(Error::DimensionMismatch { expected: dim, got: ds.dim() });
    }
    Ok(ds
        .rows()
        .map(|r| {
            let mut v = r.to_vec();
            v.resize(dim, 0.0);
            v
        })
        .collect())
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let (predictor, _) = model_file::load(&args.model)?;
    let rows = prediction_rows(&args.data, args.format, predictor.dim())?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "# {}", header("predict", args))?;
            Box::new(w)
        }
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    for r in &rows {
        writeln!(out, "{}", predictor.predict(r)?)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CvOutput<'a> {
    tool: String,
    flags: &'a CvArgs,
    config: &'a SolverConfig,
    search: Option<&'a eval::GridSearch>,
    report: &'a eval::CvReport,
}

fn cmd_cv(args: &CvArgs) -> Result<()> {
    let (ds, task) = load(&args.data.data, args.data.format, args.data.task)?;
    let cfg = solver_config(&args.solver)?;
    let scaling = match args.cv.scaling {
        ScalingArg::PerFold => ScalingMode::PerFold,
        ScalingArg::Prescaled => ScalingMode::Prescaled,
    };
    let protocol = Protocol { scaling, ..Protocol::default() };
    let ds = protocol.prepare(&ds)?;
    let settings = CvSettings {
        folds: args.cv.folds,
        repeats: args.cv.repeats,
        seed: args.solver.seed,
        scaling,
    };
    let (search, report) = eval::with_workers(args.cv.workers, || -> Result<_> {
        let (search, point) = if args.search {
            let s = eval::grid_search(&ds, &cfg, &args.grid.spec(task)?, &settings)?;
            let best = s.best;
            (Some(s), best)
        } else {
            (None, GridPoint::new(args.solver.c, args.solver.lambda))
        };
        Ok((search, eval::cross_validate(&ds, &cfg, point, &settings)?))
    })??;
    let scale = if report.metric == eval::Metric::Accuracy { 100.0 } else { 1.0 };
    println!(
        "{} {}: {:?} mean {:.6} sd {:.6} over {} folds ({} failed) at c = {}, lambda = {}",
        ds.name(),
        MethodSpec::new(cfg.mode, cfg.method),
        report.metric,
        scale * report.mean,
        scale * report.std,
        report.records.len(),
        report.failed,
        report.grid_point.c,
        report.grid_point.lambda
    );
    if let Some(p) = &args.out {
        let out = CvOutput {
            tool: eval::tool_version(),
            flags: args,
            config: &cfg,
            search: search.as_ref(),
            report: &report,
        };
        let mut w = create(p)?;
        writeln!(w, "{}", serde_json::to_string(&out).expect("report serializes"))?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<()> {
    let mut manifest = Manifest::load(&args.manifest)?;
    if !args.stretch && args.dataset.is_none() {
        manifest.datasets.retain(|e| !e.stretch);
    }
    let method = args.method.as_deref().map(str::parse::<MethodSpec>).transpose()?;
    let grid = match &args.grid.grid_range {
        Some(_) => Some(args.grid.spec(TaskKind::Binary)?),
        None => None,
    };
    let mut protocol = Protocol {
        folds: args.folds,
        repeats: args.repeats,
        seed: args.seed,
        grid_base: args.grid.grid_base,
        grid,
        scaling: match args.scaling {
            ScalingArg::PerFold => ScalingMode::PerFold,
            ScalingArg::Prescaled => ScalingMode::Prescaled,
        },
        b: args.b,
        max_iter: args.max_iter,
        tau: args.tau,
        eps_grad: args.eps_grad,
        ..Protocol::default()
    };
    if let Some(eta) = args.eta {
        protocol.eta_lr_classification = eta;
        protocol.eta_lr_regression = eta;
        protocol.eta_iterative = eta;
    }
    let filter = CellFilter { dataset: args.dataset.clone(), method };
    let report = eval::with_workers(args.workers, || {
        eval::benchmark_run(&manifest, None, &protocol, &args.out, &filter, |cell| eprintln!("running {cell}"))
    })??;
    for (d, m, e) in &report.failures {
        let m = m.map_or_else(|| "-".to_string(), |m| m.to_string());
        eprintln!("failed cell {d} / {m}: {e}");
    }
    let table = std::fs::read_to_string(&report.table_path)
        .map_err(|e| Error::io(&report.table_path, e))?;
    print!("{table}");
    eprintln!(
        "{} cells ({} resumed); records in {}",
        report.cells.len(),
        report.resumed,
        report.records_path.display()
    );
    Ok(())
}

fn parse_bounds(s: &str) -> Result<[f64; 4]> {
    let v: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidParameter(format!("bad bounds {s:?}, expected x1min:x1max:x2min:x2max")))?;
    match v.as_slice() {
        &[a, b, c, d] if a < b && c < d => Ok([a, b, c, d]),
        _ => Err(Error::InvalidParameter(format!("bad bounds {s:?}, expected x1min:x1max:x2min:x2max"))),
    }
}

fn cmd_surface(args: &SurfaceArgs) -> Result<()> {
    let (predictor, _) = model_file::load(&args.model)?;
    let grid = surface_grid(&predictor, args.member, parse_bounds(&args.bounds)?, args.resolution)?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    writeln!(out, "# {} columns x1,x2,u", header("surface", args))?;
    for [a, b, u] in grid {
        writeln!(out, "{a:?},{b:?},{u:?}")?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_two_moons(args: &MoonsArgs) -> Result<()> {
    let ds = data::two_moons(args.n, args.noise, args.seed);
    let text = format!("# {}\n{}", header("two-moons", args), data::to_csv(&ds));
    match &args.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Surface(a) => cmd_surface(a),
        Command::TwoMoons(a) => cmd_two_moons(a),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|info| {
        eprintln!("error[internal]: {}", one_line(&info.to_string()));
        std::process::exit(2);
    }));
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error[usage]: {}", one_line(msg.trim_start_matches("error: ")));
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Stream(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), one_line(&e.to_string()));
            ExitCode::from(1)
        }
    }
}
