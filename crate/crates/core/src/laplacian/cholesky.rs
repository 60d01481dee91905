//! Randomized approximate Cholesky factorization of graph Laplacians.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Edge, WeightedMultigraph};
use crate::dense::{eig_sym_tridiag, LinearOperator, Matrix, Vector};
use crate::error::{Error, Result};
use crate::rng::{self, AliasTable};

/// `ceil(64 log^2(e n))` copies per edge, each with weight `w / R`.
pub fn split_factor(n: usize) -> usize {
    let l = (std::f64::consts::E * n as f64).ln();
    (64.0 * l * l).ceil() as usize
}

/// `C` with `C(pi, :)` lower triangular and `C C' ~ L`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxCholesky {
    pub n: usize,
    /// Column `i` as `(row, value)` pairs, diagonal entry `(pi[i], .)` first.
    pub columns: Vec<Vec<(usize, f64)>>,
    /// Elimination order.
    pub pi: Vec<usize>,
}

impl ApproxCholesky {
    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> Matrix {
        let mut c = Matrix::zeros(self.n, self.n);
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                c[(i, j)] = v;
            }
        }
        c
    }

    /// `(C C')^+ y` by two triangular sweeps, with the constant component
    /// removed from the input and the output.
    pub fn apply_pinv(&self, y: &Vector) -> Vector {
        let n = self.n;
        let mut r = y.add_scalar(-y.mean());
        let mut z = vec![0.0; n];
        for (i, col) in self.columns.iter().enumerate() {
            let Some(&(_, d)) = col.first() else { continue };
            if d == 0.0 {
                continue;
            }
            z[i] = r[self.pi[i]] / d;
            for &(row, v) in col {
                r[row] -= v * z[i];
            }
        }
        let mut u = Vector::zeros(n);
        for (i, col) in self.columns.iter().enumerate().rev() {
            let Some(&(_, d)) = col.first() else { continue };
            if d == 0.0 {
                continue;
            }
            let s: f64 = col[1..].iter().map(|&(row, v)| v * u[row]).sum();
            u[self.pi[i]] = (z[i] - s) / d;
        }
        let mean = u.mean();
        u.add_scalar(-mean)
    }
}

/// Multigraph under elimination: a flat edge list plus adjacency lists that
/// may hold stale (removed) edge ids.
struct Elimination {
    edges: Vec<Edge>,
    alive: Vec<bool>,
    adj: Vec<Vec<usize>>,
}

impl Elimination {
    fn new(n: usize, edges: Vec<Edge>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (id, e) in edges.iter().enumerate() {
            adj[e.u].push(id);
            adj[e.v].push(id);
        }
        Self { alive: vec![true; edges.len()], edges, adj }
    }

    fn add(&mut self, e: Edge) {
        let id = self.edges.len();
        self.adj[e.u].push(id);
        self.adj[e.v].push(id);
        self.edges.push(e);
        self.alive.push(true);
    }

    /// Remove and return the star of `u` as `(neighbor, weight)` multiedges.
    fn take_star(&mut self, u: usize) -> Vec<(usize, f64)> {
        let ids = std::mem::take(&mut self.adj[u]);
        let mut star = Vec::with_capacity(ids.len());
        for id in ids {
            if self.alive[id] {
                self.alive[id] = false;
                let e = self.edges[id];
                star.push((if e.u == u { e.v } else { e.u }, e.w));
            }
        }
        star
    }
}

/// Random approximation of the clique left by eliminating a vertex with the
/// given star: `deg` edges, each between the far ends of one multiedge drawn
/// by weight and one drawn uniformly. Pairs that land on the same neighbor
/// carry no Laplacian and are dropped.
pub fn sample_clique<R: Rng + ?Sized>(star: &[(usize, f64)], rng: &mut R) -> Vec<Edge> {
    let d = star.len();
    let weights: Vec<f64> = star.iter().map(|s| s.1).collect();
    let Some(table) = AliasTable::new(&weights) else { return Vec::new() };
    let mut out = Vec::with_capacity(d);
    for _ in 0..d {
        let (v1, w1) = star[table.sample(rng)];
        let (v2, w2) = star[rng.random_range(0..d)];
        if v1 != v2 {
            out.push(Edge { u: v1, v: v2, w: w1 * w2 / (w1 + w2) });
        }
    }
    out
}

/// Exact distribution of one draw of `sample_clique`: every `(e1, e2)` pair
/// with its probability and the weight of the edge it creates.
pub fn clique_outcomes(star: &[(usize, f64)]) -> Vec<(f64, Option<Edge>)> {
    let d = star.len() as f64;
    let total: f64 = star.iter().map(|s| s.1).sum();
    let mut out = Vec::new();
    for &(v1, w1) in star {
        for &(v2, w2) in star {
            let p = (w1 / total) / d;
            let edge = (v1 != v2).then(|| Edge { u: v1, v: v2, w: w1 * w2 / (w1 + w2) });
            out.push((p, edge));
        }
    }
    out
}

/// The exact clique `(1 / 2W) sum_{e1, e2} w1 w2 Delta_{v1 v2}` as merged edges.
pub fn clique_exact(star: &[(usize, f64)]) -> BTreeMap<(usize, usize), f64> {
    let total: f64 = star.iter().map(|s| s.1).sum();
    let mut out = BTreeMap::new();
    for &(v1, w1) in star {
        for &(v2, w2) in star {
            if v1 < v2 {
                *out.entry((v1, v2)).or_insert(0.0) += w1 * w2 / total;
            }
        }
    }
    out
}

/// Approximate Cholesky with the default edge splitting.
pub fn sparse_cholesky(g: &WeightedMultigraph, seed: u64) -> Result<ApproxCholesky> {
    sparse_cholesky_with(g, split_factor(g.n()), seed)
}

/// Approximate Cholesky with every edge split into `split` parallel copies.
/// Vertices are eliminated in uniformly random order.
pub fn sparse_cholesky_with(g: &WeightedMultigraph, split: usize, seed: u64) -> Result<ApproxCholesky> {
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidDims(format!("need at least 2 vertices, got {n}")));
    }
    if split == 0 {
        return Err(Error::InvalidArgument("split factor must be positive".into()));
    }
    g.require_connected()?;
    let copies = g.edges().iter().flat_map(|e| std::iter::repeat_n(Edge { w: e.w / split as f64, ..*e }, split));
    let mut state = Elimination::new(n, copies.collect());
    let mut rng = rng::stream(seed, 0);
    let mut pi: Vec<usize> = (0..n).collect();
    pi.shuffle(&mut rng);
    let mut columns = Vec::with_capacity(n);
    for &u in &pi {
        let star = state.take_star(u);
        let total: f64 = star.iter().map(|s| s.1).sum();
        if total > 0.0 {
            let mut off: BTreeMap<usize, f64> = BTreeMap::new();
            for &(v, w) in &star {
                *off.entry(v).or_default() -= w;
            }
            let scale = total.sqrt().recip();
            let mut col = vec![(u, total * scale)];
            col.extend(off.into_iter().map(|(v, w)| (v, w * scale)));
            columns.push(col);
        } else {
            columns.push(Vec::new());
        }
        for e in sample_clique(&star, &mut rng) {
            state.add(e);
        }
    }
    Ok(ApproxCholesky { n, columns, pi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacianSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Bound on `||x - x*||_L / ||x*||_L` certified at termination.
    pub error_bound: f64,
    pub converged: bool,
    /// Extreme Ritz values of the preconditioned operator.
    pub pencil_range: (f64, f64),
}

/// Solve `L x = f` for a connected graph to relative `L`-seminorm error `eps`,
/// by PCG preconditioned with a randomized approximate Cholesky factor.
///
/// Termination uses `||e||_L^2 / ||x*||_L^2 <= kappa * (r'z) / (r0'z0)`, with
/// `kappa` the larger of 3 and the Ritz-value estimate of the preconditioned
/// condition number from the CG coefficients.
pub fn laplacian_solve(g: &WeightedMultigraph, f: &Vector, eps: f64, seed: u64) -> Result<LaplacianSolution> {
    let n = g.n();
    if f.len() != n {
        return Err(Error::DimMismatch(format!("graph has {n} vertices, right-hand side has {}", f.len())));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    g.require_connected()?;
    let sum = f.sum();
    if sum.abs() > 1e-10 * f.norm() {
        return Err(Error::InconsistentRhs(sum));
    }
    let zero = |converged| LaplacianSolution { x: vec![0.0; n], iterations: 0, error_bound: 0.0, converged, pencil_range: (1.0, 1.0) };
    if f.norm() == 0.0 {
        return Ok(zero(true));
    }
    let c = sparse_cholesky(g, seed)?;
    let l = g.operator();
    let max_iter = 10 * n + 100;

    let mut x = Vector::zeros(n);
    let mut r = f.add_scalar(-f.mean());
    let mut z = c.apply_pinv(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let rz0 = rz;
    let (mut diag, mut off) = (Vec::new(), Vec::new());
    let (mut prev_alpha, mut prev_beta) = (0.0, 0.0);
    let mut range = (1.0, 1.0);
    for it in 1..=max_iter {
        let lp = l.apply(&p);
        let plp = p.dot(&lp);
        if !(plp > 0.0) {
            let mut out = zero(false);
            out.x = x.as_slice().to_vec();
            out.iterations = it - 1;
            return Ok(out);
        }
        let alpha = rz / plp;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &lp, 1.0);
        z = c.apply_pinv(&r);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        // Lanczos tridiagonal of the preconditioned operator from CG coefficients.
        diag.push(1.0 / alpha + if it > 1 { prev_beta / prev_alpha } else { 0.0 });
        if it > 1 {
            off.push(prev_beta.sqrt() / prev_alpha);
        }
        if let Ok((theta, _)) = eig_sym_tridiag(&diag, &off) {
            range = (theta[0], theta[theta.len() - 1]);
        }
        let kappa = (range.1 / range.0).max(3.0);
        let bound = (kappa * rz_new.max(0.0) / rz0).sqrt();
        if bound <= eps {
            let mean = x.mean();
            return Ok(LaplacianSolution {
                x: x.add_scalar(-mean).as_slice().to_vec(),
                iterations: it,
                error_bound: bound,
                converged: true,
                pencil_range: range,
            });
        }
        p = &z + &p * beta;
        rz = rz_new;
        prev_alpha = alpha;
        prev_beta = beta;
    }
    let mean = x.mean();
    Ok(LaplacianSolution {
        x: x.add_scalar(-mean).as_slice().to_vec(),
        iterations: max_iter,
        error_bound: f64::INFINITY,
        converged: false,
        pencil_range: range,
    })
}
