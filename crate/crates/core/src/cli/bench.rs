//! `rnla bench`: parameter sweeps written as CSV, one row per
//! (size, parameter, trial, k).

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use rand::Rng;
use serde::Serialize;

use super::{resolve_seed, CliError, CliResult};
use crate::dense::{from_svd, psd_with_spectrum, spectral_norm, with_spectrum, Matrix, Vector};
use crate::laplacian::{self, WeightedMultigraph};
use crate::{fullrank, lowrank, par, rangefinder, rng};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchOp {
    Rangefinder,
    Urv,
    Cpqr,
    Nystrom,
    Singleview,
    Lapsolve,
}

#[derive(Args, Clone, Debug)]
pub struct BenchOpts {
    /// `decay:r` (r^j), `poly:p` (j^-p) or `plateau:k` (k ones, then a small
    /// geometric tail).
    #[arg(long, default_value = "decay:0.5")]
    pub spectrum: String,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Power iteration counts, e.g. `0,1,2`.
    #[arg(long, default_value = "2")]
    pub q: String,
    /// Sketch sizes, as a list or `start:stop:step`.
    #[arg(long, default_value = "5:50:5")]
    pub l: String,
    /// Target ranks for Nystrom and single-view sweeps.
    #[arg(long, default_value = "10")]
    pub rank: String,
    /// Panel sizes for randomized CPQR.
    #[arg(long, default_value = "8")]
    pub block: String,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Graph file, or `random:n:p` for an Erdos-Renyi graph.
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Write the table to FILE instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct Row {
    bench: &'static str,
    spectrum: String,
    n: usize,
    trial: usize,
    seed: u64,
    q: Option<usize>,
    l: Option<usize>,
    b: Option<usize>,
    k: Option<usize>,
    oracle: f64,
    error: f64,
    iterations: Option<usize>,
    wall_ms: f64,
}

pub(crate) fn parse_list(s: &str, flag: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("--{flag} {s:?}: expected a list like 1,2,3 or a range start:stop[:step]"));
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let out = match parts.as_slice() {
        [list] => list.split(',').map(num).collect::<CliResult<Vec<_>>>()?,
        [a, b] => (num(a)?..=num(b)?).collect(),
        [a, b, step] => {
            let step = num(step)?;
            if step == 0 {
                return Err(bad());
            }
            (num(a)?..=num(b)?).step_by(step).collect()
        }
        _ => return Err(bad()),
    };
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Singular values for a synthetic spectrum name, indexed from j = 1.
pub(crate) fn parse_spectrum(s: &str, n: usize) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("--spectrum {s:?}: expected decay:r, poly:p or plateau:k"));
    let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
    let x: f64 = arg.parse().map_err(|_| bad())?;
    let sigma = match kind {
        "decay" if x > 0.0 && x < 1.0 => (1..=n).map(|j| x.powi(j as i32)).collect(),
        "poly" if x > 0.0 => (1..=n).map(|j| (j as f64).powf(-x)).collect(),
        "plateau" if x >= 1.0 && x.fract() == 0.0 => {
            let k = x as usize;
            (1..=n).map(|j| if j <= k { 1.0 } else { 1e-3 * 0.8f64.powi((j - k) as i32) }).collect()
        }
        _ => return Err(bad()),
    };
    Ok(sigma)
}

/// Erdos-Renyi `G(n, p)` with unit weights, redrawn until connected.
pub(crate) fn random_graph(n: usize, p: f64, seed: u64) -> crate::Result<WeightedMultigraph> {
    for attempt in 0..100 {
        let mut g = rng::stream(seed, attempt);
        let mut triples = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if g.random::<f64>() < p {
                    triples.push((u, v, 1.0));
                }
            }
        }
        let graph = WeightedMultigraph::from_triples(n, &triples)?;
        if graph.is_connected() {
            return Ok(graph);
        }
    }
    Err(crate::Error::Disconnected)
}

fn load_graph(spec: Option<&str>, n: usize, seed: u64) -> CliResult<WeightedMultigraph> {
    let spec = spec.map(str::to_string).unwrap_or_else(|| format!("random:{n}:0.05"));
    if let Some(rest) = spec.strip_prefix("random:") {
        let bad = || CliError::Usage(format!("--graph {spec:?}: expected random:n:p"));
        let (n, p) = rest.split_once(':').ok_or_else(bad)?;
        let n: usize = n.parse().map_err(|_| bad())?;
        let p: f64 = p.parse().map_err(|_| bad())?;
        Ok(random_graph(n, p, seed)?)
    } else {
        super::io::read_graph(std::path::Path::new(&spec))
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn run(op: BenchOp, o: &BenchOpts, out: &mut dyn Write) -> CliResult<()> {
    let (seed, _) = resolve_seed(o.seed)?;
    let rows = par::with_threads(o.threads, || rows(op, o, seed))?;
    let mut file;
    let sink: &mut dyn Write = match &o.out {
        Some(path) => {
            file = std::fs::File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            &mut file
        }
        None => out,
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Input(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Input(e.to_string()))
}

fn rows(op: BenchOp, o: &BenchOpts, seed: u64) -> CliResult<Vec<Row>> {
    let n = o.n;
    let base = |bench, trial: usize, s: u64| Row {
        bench,
        spectrum: o.spectrum.clone(),
        n,
        trial,
        seed: s,
        q: None,
        l: None,
        b: None,
        k: None,
        oracle: f64::NAN,
        error: f64::NAN,
        iterations: None,
        wall_ms: 0.0,
    };
    // Test matrix for trial t is seeded independently of the algorithm seed.
    let matrix = |sigma: &[f64], t: usize, psd: bool| -> Matrix {
        let mut g = rng::stream(rng::derive(seed, 0xa0), t as u64);
        if psd {
            psd_with_spectrum(&mut g, n, sigma)
        } else {
            with_spectrum(&mut g, n, n, sigma)
        }
    };
    let mut out = Vec::new();
    match op {
        BenchOp::Rangefinder => {
            let sigma = parse_spectrum(&o.spectrum, n)?;
            for t in 0..o.trials {
                let a = matrix(&sigma, t, false);
                for &q in &parse_list(&o.q, "q")? {
                    for &l in &parse_list(&o.l, "l")? {
                        let s = rng::derive(seed, t as u64);
                        let start = Instant::now();
                        let basis = rangefinder::power_rangefinder(&a, l, q, s)?;
                        let wall = ms(start);
                        let error = spectral_norm(&(&a - basis.project(&a)));
                        out.push(Row { q: Some(q), l: Some(l), k: Some(l), oracle: sigma.get(l).copied().unwrap_or(0.0), error, wall_ms: wall, ..base("rangefinder", t, s) });
                    }
                }
            }
        }
        BenchOp::Urv => {
            let sigma = parse_spectrum(&o.spectrum, n)?;
            for t in 0..o.trials {
                let a = matrix(&sigma, t, false);
                for &q in &parse_list(&o.q, "q")? {
                    let s = rng::derive(seed, t as u64);
                    let start = Instant::now();
                    let f = fullrank::power_urv(&a, q, s)?;
                    let wall = ms(start);
                    for k in 1..n {
                        out.push(Row { q: Some(q), k: Some(k), oracle: sigma[k], error: f.truncation_error(k), wall_ms: wall, ..base("urv", t, s) });
                    }
                }
            }
        }
        BenchOp::Cpqr => {
            let sigma = parse_spectrum(&o.spectrum, n)?;
            for t in 0..o.trials {
                let a = matrix(&sigma, t, false);
                let start = Instant::now();
                let classical = crate::dense::cpqr(&a, n);
                let wall = ms(start);
                for k in 1..n {
                    out.push(Row { b: Some(0), k: Some(k), oracle: sigma[k], error: fullrank::trailing_norm(&classical.r, k), wall_ms: wall, ..base("cpqr-classical", t, 0) });
                }
                for &b in &parse_list(&o.block, "block")? {
                    let s = rng::derive(seed, t as u64);
                    let start = Instant::now();
                    let f = fullrank::randomized_cpqr(&a, b, fullrank::DEFAULT_PANEL_OVERSAMPLE, s)?;
                    let wall = ms(start);
                    for k in 1..n {
                        out.push(Row { b: Some(b), k: Some(k), oracle: sigma[k], error: f.truncation_error(k), wall_ms: wall, ..base("cpqr", t, s) });
                    }
                }
            }
        }
        BenchOp::Nystrom => {
            let lambda = parse_spectrum(&o.spectrum, n)?;
            for t in 0..o.trials {
                let a = matrix(&lambda, t, true);
                for &k in &parse_list(&o.rank, "rank")? {
                    for &l in parse_list(&o.l, "l")?.iter().filter(|&&l| l >= k) {
                        let s = rng::derive(seed, t as u64);
                        let start = Instant::now();
                        let ny = lowrank::nystrom(&a, k, l, s)?;
                        let wall = ms(start);
                        let error = spectral_norm(&(&a - ny.reconstruct()));
                        out.push(Row { l: Some(l), k: Some(k), oracle: lambda.get(k).copied().unwrap_or(0.0), error, wall_ms: wall, ..base("nystrom", t, s) });
                    }
                }
            }
        }
        BenchOp::Singleview => {
            let sigma = parse_spectrum(&o.spectrum, n)?;
            for t in 0..o.trials {
                let a = matrix(&sigma, t, false);
                for &k in &parse_list(&o.rank, "rank")? {
                    let (l, ss) = (4 * k, 8 * k);
                    let s = rng::derive(seed, t as u64);
                    let start = Instant::now();
                    let mut sk = lowrank::StreamSketch::new(n, n, l, ss, s, crate::sketch::SketchKind::Gaussian)?;
                    sk.update(lowrank::StreamUpdate::Dense(&a), 1.0)?;
                    let sv = sk.finalize(k, lowrank::CoreMethod::default())?;
                    let wall = ms(start);
                    let error = (&a - from_svd(&sv.svd.u, &sv.svd.s, &sv.svd.v)).norm_squared();
                    let oracle: f64 = sigma.iter().skip(k).map(|x| x * x).sum();
                    out.push(Row { l: Some(l), k: Some(k), oracle, error, wall_ms: wall, ..base("singleview", t, s) });
                }
            }
        }
        BenchOp::Lapsolve => {
            let g = load_graph(o.graph.as_deref(), n, rng::derive(seed, 0x9))?;
            let gn = g.n();
            let pinv = if gn <= super::DENSE_ORACLE_MAX_N { Some((laplacian::laplacian_pinv(&g)?, laplacian::laplacian_matrix(&g))) } else { None };
            let budget = 1.0 + (1.0 / o.eps).ln() / 3f64.ln() + 3.0;
            for t in 0..o.trials {
                let s = rng::derive(seed, t as u64);
                let mut f = rng::gaussian_vector(&mut rng::stream(s, 1), gn);
                f.add_scalar_mut(-f.mean());
                let start = Instant::now();
                let sol = laplacian::laplacian_solve(&g, &f, o.eps, s)?;
                let wall = ms(start);
                let error = match &pinv {
                    Some((p, l)) => {
                        let xs: Vector = p * &f;
                        let e = Vector::from_column_slice(&sol.x) - &xs;
                        (e.dot(&(l * &e)) / xs.dot(&(l * &xs))).sqrt()
                    }
                    None => sol.error_bound,
                };
                out.push(Row { spectrum: String::new(), n: gn, oracle: budget, error, iterations: Some(sol.iterations), wall_ms: wall, ..base("lapsolve", t, s) });
            }
        }
    }
    Ok(out)
}
