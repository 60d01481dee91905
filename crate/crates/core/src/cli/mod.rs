//! Command-line front end: `rnla <family> <op> [options]`.
//!
//! Every run prints one [`RunReport`] as JSON (or key/value CSV with
//! `--csv`). Exit status is 0 on success, 1 for usage and input errors and
//! 2 when a numerical routine fails.

mod bench;
pub mod io;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::dense::{from_svd, orth, spectral_norm, svd_econ, Matrix, Vector};
use crate::estimate::{self, TestVectorDist, Which};
use crate::laplacian::{self, SparsifySize, WeightedMultigraph};
use crate::lowrank::{self, IdSide};
use crate::sketch::{make_sketch, CoordMode, Scaling, SketchKind};
use crate::solvers::{self, KaczmarzMode, LsSolution};
use crate::{fullrank, par, rng};

pub use bench::BenchOpts;

pub const GRAMMAR: &str = "usage: rnla <family> <op> [--in FILE] [--graph FILE] [--rhs FILE] [--rank K] \
[--oversample P] [--power Q] [--samples K] [--dist gaussian|rademacher|sphere] \
[--sketch gaussian|sparse|srtt|tensor|coord] [--tol T] [--seed S] [--csv] [--out-prefix PFX] [--threads N]
families: estimate {trace|frobenius|schatten|maxeig|mineig|slq}, sketch {apply|embed}, \
lowrank {rsvd|rangefinder|id|cur|nystrom|singleview}, fullrank {urv|cpqr}, \
solve {lsqr|sketch|iterative|precondition|kaczmarz|nystrom-pcg}, \
graph {resistances|sparsify|cholesky|solve}, bench {rangefinder|urv|cpqr|nystrom|singleview|lapsolve}
shorthands: rnla rsvd = rnla lowrank rsvd, rnla lapsolve = rnla graph solve
RNLA_SEED is used when --seed is absent";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Numerical(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Output of one CLI run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: Map<String, Value>,
    pub wall_time_ms: f64,
    pub outputs: Map<String, Value>,
    pub error_metrics: Map<String, Value>,
}

#[derive(Parser, Debug)]
#[command(name = "rnla", version, about = "Randomized numerical linear algebra toolkit", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace, norm and eigenvalue estimators.
    Estimate {
        op: EstimateOp,
        #[command(flatten)]
        opts: Opts,
    },
    /// Apply a sketching operator or measure its embedding distortion.
    Sketch {
        op: SketchOp,
        #[command(flatten)]
        opts: Opts,
    },
    /// Low-rank approximations.
    Lowrank {
        op: LowrankOp,
        #[command(flatten)]
        opts: Opts,
    },
    /// Rank-revealing full factorizations.
    Fullrank {
        op: FullrankOp,
        #[command(flatten)]
        opts: Opts,
    },
    /// Least-squares and positive definite solvers.
    Solve {
        op: SolveOp,
        #[command(flatten)]
        opts: Opts,
    },
    /// Graph Laplacian tools.
    Graph {
        op: GraphOp,
        #[command(flatten)]
        opts: Opts,
    },
    /// Same as `lowrank rsvd`.
    Rsvd {
        #[command(flatten)]
        opts: Opts,
    },
    /// Same as `graph solve`.
    Lapsolve {
        #[command(flatten)]
        opts: Opts,
    },
    /// Parameter sweeps written as CSV.
    Bench {
        op: bench::BenchOp,
        #[command(flatten)]
        opts: BenchOpts,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EstimateOp {
    Trace,
    Frobenius,
    Schatten,
    Maxeig,
    Mineig,
    Slq,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SketchOp {
    Apply,
    Embed,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum LowrankOp {
    Rsvd,
    Rangefinder,
    Id,
    Cur,
    Nystrom,
    Singleview,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FullrankOp {
    Urv,
    Cpqr,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SolveOp {
    Lsqr,
    Sketch,
    Iterative,
    Precondition,
    Kaczmarz,
    NystromPcg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GraphOp {
    Resistances,
    Sparsify,
    Cholesky,
    Solve,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DistArg {
    Gaussian,
    Rademacher,
    Sphere,
}

impl From<DistArg> for TestVectorDist {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Gaussian => TestVectorDist::Gaussian,
            DistArg::Rademacher => TestVectorDist::Rademacher,
            DistArg::Sphere => TestVectorDist::ScaledSphere,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SketchArg {
    Gaussian,
    Sparse,
    Srtt,
    Tensor,
    Coord,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FuncArg {
    Log,
    Sqrt,
    Exp,
    Inv,
}

impl FuncArg {
    fn eval(self, x: f64) -> f64 {
        match self {
            FuncArg::Log => x.ln(),
            FuncArg::Sqrt => x.sqrt(),
            FuncArg::Exp => x.exp(),
            FuncArg::Inv => 1.0 / x,
        }
    }
}

#[derive(Args, Clone, Debug, Serialize)]
struct Opts {
    /// Input matrix (MatrixMarket).
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Input graph (MatrixMarket or `u v w` edge list).
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// Right-hand side vector (CSV).
    #[arg(long, value_name = "FILE")]
    rhs: Option<PathBuf>,
    #[arg(long, value_name = "K")]
    rank: Option<usize>,
    #[arg(long, value_name = "P")]
    oversample: Option<usize>,
    #[arg(long, value_name = "Q")]
    power: Option<usize>,
    #[arg(long, value_name = "K")]
    samples: Option<usize>,
    #[arg(long, value_enum, default_value_t = DistArg::Gaussian)]
    dist: DistArg,
    #[arg(long, value_enum)]
    sketch: Option<SketchArg>,
    /// Sketch dimension.
    #[arg(long, value_name = "D")]
    dim: Option<usize>,
    /// Panel size for blocked factorizations, or block size for Kaczmarz.
    #[arg(long, value_name = "B")]
    block: Option<usize>,
    /// Iteration count or cap.
    #[arg(long, value_name = "N")]
    iters: Option<usize>,
    /// Schatten order p (the estimate is of the 2p-th power norm).
    #[arg(long, value_name = "P")]
    order: Option<usize>,
    /// Matrix function for SLQ.
    #[arg(long = "fn", value_enum)]
    func: Option<FuncArg>,
    /// Sparsifier accuracy.
    #[arg(long, value_name = "EPS")]
    eps: Option<f64>,
    /// Edge-splitting factor for approximate Cholesky.
    #[arg(long, value_name = "R")]
    split: Option<usize>,
    #[arg(long, value_name = "T")]
    tol: Option<f64>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Print the report as key/value CSV instead of JSON.
    #[arg(long)]
    #[serde(skip)]
    csv: bool,
    /// Prefix for factor files.
    #[arg(long, value_name = "PFX")]
    out_prefix: Option<String>,
    #[arg(long, default_value_t = 1, value_name = "N")]
    threads: usize,
}

/// Run the CLI on `argv` (including the program name), writing the report
/// to standard output and diagnostics to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return 0;
            }
            let _ = writeln!(err, "{}\n{GRAMMAR}", e.render());
            return 1;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let CliError::Usage(_) = e {
                let _ = writeln!(err, "{GRAMMAR}");
            }
            e.exit_code()
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Task {
    Estimate(EstimateOp),
    Sketch(SketchOp),
    Lowrank(LowrankOp),
    Fullrank(FullrankOp),
    Solve(SolveOp),
    Graph(GraphOp),
}

impl Task {
    fn name(self) -> String {
        let (family, op) = match self {
            Task::Estimate(op) => ("estimate", op.to_possible_value()),
            Task::Sketch(op) => ("sketch", op.to_possible_value()),
            Task::Lowrank(op) => ("lowrank", op.to_possible_value()),
            Task::Fullrank(op) => ("fullrank", op.to_possible_value()),
            Task::Solve(op) => ("solve", op.to_possible_value()),
            Task::Graph(op) => ("graph", op.to_possible_value()),
        };
        format!("{family} {}", op.map(|v| v.get_name().to_string()).unwrap_or_default())
    }
}

fn execute(command: Command, out: &mut dyn Write) -> CliResult<()> {
    let (task, opts) = match command {
        Command::Bench { op, opts } => return bench::run(op, &opts, out),
        Command::Estimate { op, opts } => (Task::Estimate(op), opts),
        Command::Sketch { op, opts } => (Task::Sketch(op), opts),
        Command::Lowrank { op, opts } => (Task::Lowrank(op), opts),
        Command::Fullrank { op, opts } => (Task::Fullrank(op), opts),
        Command::Solve { op, opts } => (Task::Solve(op), opts),
        Command::Graph { op, opts } => (Task::Graph(op), opts),
        Command::Rsvd { opts } => (Task::Lowrank(LowrankOp::Rsvd), opts),
        Command::Lapsolve { opts } => (Task::Graph(GraphOp::Solve), opts),
    };
    let (seed, seed_source) = resolve_seed(opts.seed)?;
    let mut parameters = match serde_json::to_value(&opts) {
        Ok(Value::Object(m)) => m.into_iter().filter(|(_, v)| !v.is_null()).collect::<Map<_, _>>(),
        _ => Map::new(),
    };
    parameters.insert("seed".into(), json!(seed));
    parameters.insert("seed_source".into(), json!(seed_source));

    let start = Instant::now();
    let mut rep = Outputs::default();
    par::with_threads(opts.threads, || dispatch(task, &opts, seed, &mut rep))?;
    let report = RunReport {
        command: task.name(),
        parameters,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        outputs: rep.outputs,
        error_metrics: rep.metrics,
    };
    write_report(&report, opts.csv, out)
}

/// Seed from `--seed`, then `RNLA_SEED`, then fresh entropy (recorded in the report).
pub(crate) fn resolve_seed(flag: Option<u64>) -> CliResult<(u64, &'static str)> {
    if let Some(s) = flag {
        return Ok((s, "flag"));
    }
    match std::env::var("RNLA_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(|s| (s, "env"))
            .map_err(|_| CliError::Usage(format!("RNLA_SEED={s:?} is not an unsigned integer"))),
        Err(_) => Ok((rand::rng().random(), "generated")),
    }
}

fn write_report(report: &RunReport, csv: bool, out: &mut dyn Write) -> CliResult<()> {
    let io_err = |e: std::io::Error| CliError::Input(format!("writing report: {e}"));
    if !csv {
        let s = serde_json::to_string_pretty(report).map_err(|e| CliError::Input(e.to_string()))?;
        return writeln!(out, "{s}").map_err(io_err);
    }
    let mut w = csv::Writer::from_writer(out);
    let flat = |v: &Value| match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let mut rows = vec![("command".to_string(), report.command.clone()), ("wall_time_ms".into(), report.wall_time_ms.to_string())];
    for (section, map) in [("parameters", &report.parameters), ("outputs", &report.outputs), ("error_metrics", &report.error_metrics)] {
        rows.extend(map.iter().map(|(k, v)| (format!("{section}.{k}"), flat(v))));
    }
    w.write_record(["field", "value"]).map_err(|e| CliError::Input(e.to_string()))?;
    for (k, v) in rows {
        w.write_record([k, v]).map_err(|e| CliError::Input(e.to_string()))?;
    }
    w.flush().map_err(io_err)
}

#[derive(Default)]
struct Outputs {
    outputs: Map<String, Value>,
    metrics: Map<String, Value>,
}

impl Outputs {
    fn out(&mut self, key: &str, v: impl Serialize) {
        self.outputs.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn metric(&mut self, key: &str, v: impl Serialize) {
        self.metrics.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }
}

impl Opts {
    fn matrix(&self) -> CliResult<Matrix> {
        let path = self.input.as_ref().ok_or_else(|| CliError::Usage("--in FILE is required".into()))?;
        io::read_matrix(path)
    }

    fn graph(&self) -> CliResult<WeightedMultigraph> {
        let path = self.graph.as_ref().ok_or_else(|| CliError::Usage("--graph FILE is required".into()))?;
        io::read_graph(path)
    }

    fn rhs(&self) -> CliResult<Vector> {
        let path = self.rhs.as_ref().ok_or_else(|| CliError::Usage("--rhs FILE is required".into()))?;
        io::read_vector(path)
    }

    fn rank(&self) -> CliResult<usize> {
        self.rank.ok_or_else(|| CliError::Usage("--rank K is required".into()))
    }

    fn sketch_kind(&self, default: SketchArg, d: usize, n: usize) -> SketchKind {
        match self.sketch.unwrap_or(default) {
            SketchArg::Gaussian => SketchKind::Gaussian,
            SketchArg::Sparse => SketchKind::sparse_default(d),
            SketchArg::Srtt => SketchKind::srtt(),
            SketchArg::Tensor => {
                let a = (1..=((n as f64).sqrt() as usize).max(1)).rev().find(|a| n % a == 0).unwrap_or(1);
                SketchKind::TensorKR { factors: if a > 1 { vec![a, n / a] } else { vec![n] } }
            }
            SketchArg::Coord => SketchKind::CoordSample { mode: CoordMode::Uniform },
        }
    }

    /// Write a factor file when `--out-prefix` is given; returns the path.
    fn save(&self, name: &str, write: impl FnOnce(&std::path::Path) -> CliResult<()>) -> CliResult<Option<String>> {
        let Some(prefix) = &self.out_prefix else { return Ok(None) };
        let path = PathBuf::from(format!("{prefix}{name}"));
        write(&path)?;
        Ok(Some(path.display().to_string()))
    }
}

fn dispatch(task: Task, o: &Opts, seed: u64, rep: &mut Outputs) -> CliResult<()> {
    match task {
        Task::Estimate(op) => run_estimate(op, o, seed, rep),
        Task::Sketch(op) => run_sketch(op, o, seed, rep),
        Task::Lowrank(op) => run_lowrank(op, o, seed, rep),
        Task::Fullrank(op) => run_fullrank(op, o, seed, rep),
        Task::Solve(op) => run_solve(op, o, seed, rep),
        Task::Graph(op) => run_graph(op, o, seed, rep),
    }
}

fn relative(est: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        est.abs()
    } else {
        (est - exact).abs() / exact.abs()
    }
}

fn run_estimate(op: EstimateOp, o: &Opts, seed: u64, rep: &mut Outputs) -> CliResult<()> {
    let a = o.matrix()?;
    let dist = TestVectorDist::from(o.dist);
    match op {
        EstimateOp::Trace => {
            let k = o.samples.unwrap_or(100);
            let r = estimate::trace_estimate(&a, k, dist, seed)?;
            let (ci, method) = if k >= estimate::BOOTSTRAP_MIN_SAMPLES {
                let xs = r.per_sample.as_deref().unwrap_or_default();
                let ci = estimate::bootstrap_trace_ci(xs, estimate::BOOTSTRAP_REPLICATES, estimate::BOOTSTRAP_ALPHA, rng::derive(seed, 1))?;
                (ci, "bootstrap")
            } else {
                (estimate::student_t_ci(&r, 0.025)?, "student-t")
            };
            rep.out("estimate", r.estimate);
            rep.out("sample_variance", r.sample_variance);
            rep.out("standard_error", r.standard_error());
            rep.out("samples", r.samples);
            rep.out("ci", json!({ "lo": ci.lo, "hi": ci.hi, "level": ci.level, "method": method }));
            let exact = a.trace();
            rep.metric("exact", exact);
            rep.metric("relative_error", relative(r.estimate, exact));
            rep.metric("ci_contains_exact", ci.contains(exact));
        }
        EstimateOp::Frobenius => {
            let r = estimate::frob_schatten4(&a, o.samples.unwrap_or(100), dist, seed)?;
            let exact = a.norm_squared();
            rep.out("frobenius_sq", r.frob_sq.estimate);
            rep.out("sample_variance", r.frob_sq.sample_variance);
            rep.out("schatten4_4", r.schatten4_4);
            rep.metric("exact_frobenius_sq", exact);
            rep.metric("relative_error", relative(r.frob_sq.estimate, exact));
            let s4: f64 = svd_econ(&a).s.iter().map(|s| s.powi(4)).sum();
            rep.metric("exact_schatten4_4", s4);
        }
        EstimateOp::Schatten => {
            let p = o.order.unwrap_or(2);
            let est = estimate::schatten2p_kv(&a, p, o.samples.unwrap_or(20), seed)?;
            let exact: f64 = svd_econ(&a).s.iter().map(|s| s.powi(2 * p as i32)).sum();
            rep.out("order", p);
            rep.out("estimate", est);
            rep.metric("exact", exact);
            rep.metric("relative_error", relative(est, exact));
        }
        EstimateOp::Maxeig => {
            let r = estimate::power_max_eig(&a, o.iters.unwrap_or(100), o.tol.unwrap_or(1e-8), seed)?;
            rep.out("estimate", r.xi);
            rep.out("iterations", r.iterations);
            let exact = crate::dense::eig_sym(&a).0.last().copied().unwrap_or(0.0);
            rep.metric("exact", exact);
            rep.metric("relative_error", relative(r.xi, exact));
        }
        EstimateOp::Mineig => {
            let r = estimate::lanczos_extremal_eig(&a, o.iters.or(o.power).unwrap_or(30), true, Which::Min, seed)?;
            rep.out("estimate", r.xi);
            rep.out("iterations", r.iterations);
            let exact = crate::dense::eig_sym(&a).0.first().copied().unwrap_or(0.0);
            rep.metric("exact", exact);
            rep.metric("absolute_error", (r.xi - exact).abs());
        }
        EstimateOp::Slq => {
            let f = o.func.unwrap_or(FuncArg::Log);
            let r = estimate::slq_trace_fn(&a, |x| f.eval(x), o.samples.unwrap_or(30), o.iters.unwrap_or(20), dist, seed)?;
            rep.out("function", f);
            rep.out("estimate", r.estimate);
            rep.out("sample_variance", r.sample_variance);
            let exact: f64 = crate::dense::eig_sym(&a).0.iter().map(|&l| f.eval(l)).sum();
            rep.metric("exact", exact);
            rep.metric("relative_error", relative(r.estimate, exact));
        }
    }
    Ok(())
}

fn run_sketch(op: SketchOp, o: &Opts, seed: u64, rep: &mut Outputs) -> CliResult<()> {
    let a = o.matrix()?;
    let m = a.nrows();
    let d = o.dim.ok_or_else(|| CliError::Usage("--dim D is required".into()))?;
    let s = make_sketch(o.sketch_kind(SketchArg::Gaussian, d, m), d, m, seed, Scaling::Isotropic)?;
    match op {
        SketchOp::Apply => {
            let sa = s.left(&a)?;
            rep.out("shape", [sa.nrows(), sa.ncols()]);
            rep.out("file", o.save("SA.mtx", |p| io::write_matrix(p, &sa))?);
            rep.metric("frobenius_ratio", sa.norm() / a.norm());
        }
        SketchOp::Embed => {
            let u = orth(&a);
            let sv = svd_econ(&s.left(&u)?).s;
            let (lo, hi) = (sv.iter().copied().fold(f64::INFINITY, f64::min), sv.iter().copied().fold(0.0, f64::max));
            rep.out("subspace_dim", u.ncols());
            rep.out("sigma_min", lo);
            rep.out("sigma_max", hi);
            rep.metric("distortion", (hi - 1.0).max(1.0 - lo));
        }
    }
    Ok(())
}

fn save_svd(o: &Opts, svd: &crate::dense::Svd, rep: &mut Outputs) -> CliResult<()> {
    let files = [
        o.save("U.mtx", |p| io::write_matrix(p, &svd.u))?,
        o.save("S.csv", |p| io::write_vector(p, &svd.s))?,
        o.save("V.mtx", |p| io::write_matrix(p, &svd.v))?,
    ];
    if files[0].is_some() {
        rep.out("files", files);
    }
    Ok(())
}

fn run_lowrank(op: LowrankOp, o: &Opts, seed: u64, rep: &mut Outputs) -> CliResult<()> {
    let a = o.matrix()?;
    let probe_seed = rng::derive(seed, 0xe7);
    let sigma = svd_econ(&a).s;
    let sigma_after = |k: usize| sigma.get(k).copied().unwrap_or(0.0);
    match op {
        LowrankOp::Rsvd => {
            let k = o.rank()?;
            let p = o.oversample.unwrap_or(10);
            let q = o.power.unwrap_or(0);
            let svd = lowrank::rsvd(&a, k, p, q, seed)?;
            rep.out("rank", svd.s.len());
            rep.out("singular_values", &svd.s);
            save_svd(o, &svd, rep)?;
            let post = estimate::posterior_error(&a, &svd.u, estimate::POSTERIOR_PROBES, probe_seed)?;
            rep.metric("posterior_spectral_estimate", post.spec_est);
            rep.metric("posterior_frobenius_sq_estimate", post.frob_est);
            rep.metric("spectral_error", spectral_norm(&(&a - from_svd(&svd.u, &svd.s, &svd.v))));
            rep.metric("sigma_k_plus_1", sigma_after(k));
        }
        LowrankOp::Rangefinder => {
            let l = o.rank()? + o.oversample.unwrap_or(0);
            let basis = crate::rangefinder::power_rangefinder(&a, l, o.power.unwrap_or(0), seed)?;
            rep.out("rank", basis.rank());
            rep.out("file", o.save("Q.mtx", |p| io::write_matrix(p, &basis.q))?);
            let post = estimate::posterior_error(&a, &basis.q, estimate::POSTERIOR_PROBES, probe_seed)?;
            rep.metric("posterior_spectral_estimate", post.spec_est);
            rep.metric("spectral_error", spectral_norm(&(&a - basis.project(&a))));
            rep.metric("sigma_l_plus_1", sigma_after(l));
        }
        LowrankOp::Id => {
            let k = o.rank()?;
            let id = lowrank::randomized_id(&a, k, o.oversample.unwrap_or(10), IdSide::Col, seed)?;
            rep.out("indices", &id.indices);
            let files = [
                o.save("indices.csv", |p| io::write_indices(p, &id.indices))?,
                o.save("X.mtx", |p| io::write_matrix(p, &id.interp))?,
            ];
            if files[0].is_some() {
                rep.out("files", files);
            }
            rep.metric("spectral_error", spectral_norm(&(&a - id.reconstruct())));
            rep.metric("sigma_k_plus_1", sigma_after(k));
        }
        LowrankOp::Cur => {
            let k = o.rank()?;
            let c = lowrank::cur(&a, k, o.oversample.unwrap_or(10), seed)?;
            rep.out("rows", &c.rows);
            rep.out("cols", &c.cols);
            let files = [
                o.save("C.mtx", |p| io::write_matrix(p, &c.c))?,
                o.save("U.mtx", |p| io::write_matrix(p, &c.u))?,
                o.save("R.mtx", |p| io::write_matrix(p, &c.r))?,
            ];
            if files[0].is_some() {
                rep.out("files", files);
            }
            rep.metric("spectral_error", spectral_norm(&(&a - c.reconstruct())));
            rep.metric("sigma_k_plus_1", sigma_after(k));
        }
        LowrankOp::Nystrom => {
            let k = o.rank()?;
            let l = k + o.oversample.unwrap_or(k.max(5));
            let ny = lowrank::nystrom(&a, k, l, seed)?;
            rep.out("eigenvalues", &ny.lambda);
            let files = [
                o.save("U.mtx", |p| io::write_matrix(p, &ny.u))?,
                o.save("lambda.csv", |p| io::write_vector(p, &ny.lambda))?,
            ];
            if files[0].is_some() {
                rep.out("files", files);
            }
            let resid = &a - ny.reconstruct();
            rep.metric("spectral_error", spectral_norm(&resid));
            rep.metric("residual_min_eig", crate::dense::eig_sym(&resid).0.first().copied().unwrap_or(0.0));
            rep.metric("lambda_k_plus_1", sigma_after(k));
        }
        LowrankOp::Singleview => {
            let k = o.rank()?;
            let l = o.dim.unwrap_or(4 * k);
            let (m, n) = a.shape();
            let mut sk = lowrank::stream_init(m, n, l, 2 * l, seed)?;
            lowrank::stream_update(&mut sk, lowrank::StreamUpdate::Dense(&a), 1.0)?;
            let sv = lowrank::stream_finalize(&sk, k)?;
            rep.out("sketch_sizes", [l, 2 * l]);
            rep.out("singular_values", &sv.svd.s);
            save_svd(o, &sv.svd, rep)?;
            let err = (&a - from_svd(&sv.svd.u, &sv.svd.s, &sv.svd.v)).norm_squared();
            let tail: f64 = sigma.iter().skip(k).map(|s| s * s).sum();
            rep.metric("frobenius_sq_error", err);
            rep.metric("optimal_frobenius_sq_error", tail);
        }
    }
    Ok(())
}

fn run_fullrank(op: FullrankOp, o: &Opts, seed: u64, rep: &mut Outputs) -> CliResult<()> {
    let a = o.matrix()?;
    let sigma = svd_econ(&a).s;
    let k = o.rank;
    match op {
        FullrankOp::Urv => {
            let f = fullrank::power_urv(&a, o.power.unwrap_or(2), seed)?;
            let files = [
                o.save("U.mtx", |p| io::write_matrix(p, &f.u))?,
                o.save("R.mtx", |p| io::write_matrix(p, &f.r))?,
                o.save("V.mtx", |p| io::write_matrix(p, &f.v))?,
            ];
            if files[0].is_some() {
                rep.out("files", files);
            }
            rep.out("r_diagonal", f.r.diagonal().iter().map(|x| x.abs()).collect::<Vec<_>>());
            rep.metric("reconstruction_error", (&a - f.reconstruct()).norm() / a.norm());
            if let Some(k) = k {
                rep.metric("truncation_error", f.truncation_error(k));
                rep.metric("sigma_k_plus_1", sigma.get(k).copied().unwrap_or(0.0));
            }
        }
        FullrankOp::Cpqr => {
            let b = o.block.unwrap_or(16);
            let f = fullrank::randomized_cpqr(&a, b, o.oversample.unwrap_or(fullrank::DEFAULT_PANEL_OVERSAMPLE), seed)?;
            let files = [
                o.save("Q.mtx", |p| io::write_matrix(p, &f.q))?,
                o.save("R.mtx", |p| io::write_matrix(p, &f.r))?,
                o.save("perm.csv", |p| io::write_indices(p, &f.perm))?,
            ];
            if files[0].is_some() {
                rep.out("files", files);
            }
            rep.out("perm", &f.perm);
            rep.metric("reconstruction_error", (&a - f.reconstruct()).norm() / a.norm());
            if let Some(k) = k {
                let classical = crate::dense::cpqr(&a, a.nrows().min(a.ncols()));
                rep.metric("truncation_error", f.truncation_error(k));
                rep.metric("classical_truncation_error", fullrank::trailing_norm(&classical.r, k));
                rep.metric("sigma_k_plus_1", sigma.get(k).copied().unwrap_or(0.0));
            }
        }
    }
    Ok(())
}

fn report_ls(o: &Opts, a: &Matrix, b: &Vector, sol: &LsSolution, rep: &mut Outputs) -> CliResult<()> {
    rep.out("method", sol.method);
    rep.out("iterations", sol.iterations);
    rep.out("converged", sol.converged);
    rep.out("residual_norm", sol.residual_norm);
    rep.out("file", o.save("x.csv", |p| io::write_vector(p, &sol.x))?);
    let r = a * sol.x_vector() - b;
    let bn = b.norm();
    rep.metric("relative_residual", if bn > 0.0 { r.norm() / bn } else { r.norm() });
    let denom = a.norm() * r.norm();
    rep.metric("normal_equation_residual", if denom > 0.0 { (a.tr_mul(&r)).norm() / denom } else { 0.0 });
    Ok(())
}

fn run_solve(op: SolveOp, o: &Opts, seed: u64, rep: &mut Outputs) -> CliResult<()> {
    let a = o.matrix()?;
    let b = o.rhs()?;
    let (m, n) = a.shape();
    let d = o.dim.unwrap_or((4 * n).min(m));
    let tol = o.tol.unwrap_or(1e-10);
    let max_iter = o.iters.unwrap_or(solvers::DEFAULT_MAX_ITER);
    let sol = match op {
        SolveOp::Lsqr => solvers::lsqr(&a, &b, None, tol, max_iter)?,
        SolveOp::Sketch => solvers::sketch_solve_ls(&a, &b, d, o.sketch_kind(SketchArg::Gaussian, d, m), seed)?,
        SolveOp::Iterative => {
            solvers::iterative_sketch_ls(&a, &b, d, o.iters.unwrap_or(20), o.sketch_kind(SketchArg::Gaussian, d, m), seed)?
        }
        SolveOp::Precondition => {
            solvers::sketch_precondition_ls_with(&a, &b, d, tol, o.sketch_kind(SketchArg::Gaussian, d, m), max_iter, seed)?
        }
        SolveOp::Kaczmarz => {
            let mode = o.block.map_or(KaczmarzMode::Rows, KaczmarzMode::Block);
            solvers::randomized_kaczmarz(&a, &b, o.iters.unwrap_or(10 * m), mode, seed)?
        }
        SolveOp::NystromPcg => {
            let k = o.rank.unwrap_or(10);
            let l = k + o.oversample.unwrap_or(k + 10);
            solvers::nystrom_pcg(&a, &b, k, l, tol, max_iter, seed)?
        }
    };
    report_ls(o, &a, &b, &sol, rep)
}

/// Relative `L`-seminorm distance of `x` from the dense solution `L^+ f`.
fn seminorm_error(g: &WeightedMultigraph, f: &Vector, x: &[f64]) -> crate::Result<f64> {
    let l = laplacian::laplacian_matrix(g);
    let xstar = laplacian::laplacian_pinv(g)? * f;
    let e = Vector::from_column_slice(x) - &xstar;
    let den = xstar.dot(&(&l * &xstar));
    Ok(if den > 0.0 { (e.dot(&(&l * &e)) / den).sqrt() } else { (e.dot(&(&l * &e))).sqrt() })
}

/// Largest graph for which dense oracle checks are added to reports.
const DENSE_ORACLE_MAX_N: usize = 2000;

fn pencil_range(a: &Matrix, b: &Matrix) -> crate::Result<[f64; 2]> {
    let ev = laplacian::pencil_eigenvalues(a, b)?;
    Ok([ev.first().copied().unwrap_or(1.0), ev.last().copied().unwrap_or(1.0)])
}

fn run_graph(op: GraphOp, o: &Opts, seed: u64, rep: &mut Outputs) -> CliResult<()> {
    let g = o.graph()?;
    let n = g.n();
    rep.out("vertices", n);
    rep.out("multiedges", g.edges().len());
    match op {
        GraphOp::Resistances => {
            let r = laplacian::effective_resistances(&g)?;
            let foster: f64 = g.edges().iter().zip(&r).map(|(e, r)| e.w * r).sum();
            rep.out("resistances", &r);
            rep.out("file", o.save("resistances.csv", |p| io::write_vector(p, &r))?);
            rep.metric("foster_sum", foster);
            rep.metric("foster_expected", n as f64 - 1.0);
        }
        GraphOp::Sparsify => {
            let size = match (o.samples, o.eps) {
                (Some(k), _) => SparsifySize::Samples(k),
                (None, eps) => SparsifySize::Eps(eps.unwrap_or(0.5)),
            };
            let h = laplacian::sparsify(&g, size, seed)?;
            rep.out("sparsifier_multiedges", h.edges().len());
            rep.out("file", o.save("H.txt", |p| io::write_edge_list(p, &h))?);
            if n <= DENSE_ORACLE_MAX_N {
                rep.metric("pencil_range", pencil_range(&laplacian::laplacian_matrix(&h), &laplacian::laplacian_matrix(&g))?);
            }
        }
        GraphOp::Cholesky => {
            let split = o.split.unwrap_or_else(|| laplacian::split_factor(n));
            let c = laplacian::sparse_cholesky_with(&g, split, seed)?;
            rep.out("split", split);
            rep.out("nnz", c.nnz());
            rep.out("elimination_order", &c.pi);
            let triplets: Vec<(usize, usize, f64)> =
                c.columns.iter().enumerate().flat_map(|(j, col)| col.iter().map(move |&(i, v)| (i, j, v))).collect();
            let files = [
                o.save("C.mtx", |p| io::write_sparse(p, n, n, &triplets))?,
                o.save("pi.csv", |p| io::write_indices(p, &c.pi))?,
            ];
            if files[0].is_some() {
                rep.out("files", files);
            }
            if n <= DENSE_ORACLE_MAX_N {
                let cd = c.to_dense();
                rep.metric("pencil_range", pencil_range(&laplacian::laplacian_matrix(&g), &(&cd * cd.transpose()))?);
            }
        }
        GraphOp::Solve => {
            let f = o.rhs()?;
            let eps = o.tol.unwrap_or(1e-8);
            let s = laplacian::laplacian_solve(&g, &f, eps, seed)?;
            rep.out("iterations", s.iterations);
            rep.out("converged", s.converged);
            rep.out("error_bound", s.error_bound);
            rep.out("pencil_range", [s.pencil_range.0, s.pencil_range.1]);
            rep.out("file", o.save("x.csv", |p| io::write_vector(p, &s.x))?);
            rep.metric("iteration_budget", 1.0 + (1.0 / eps).ln() / 3f64.ln() + 3.0);
            if n <= DENSE_ORACLE_MAX_N {
                rep.metric("seminorm_error", seminorm_error(&g, &f, &s.x)?);
            }
        }
    }
    Ok(())
}
