//! Graph Laplacians: construction, effective resistances, spectral
//! sparsification, randomized approximate Cholesky and the Poisson solver.

mod cholesky;

pub use cholesky::{
    clique_exact, clique_outcomes, laplacian_solve, sample_clique, sparse_cholesky, sparse_cholesky_with,
    split_factor, ApproxCholesky, LaplacianSolution,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dense::{cholesky, eig_sym, qr_econ, solve_lower, LinearOperator, Matrix, Vector};
use crate::error::{Error, Result};
use crate::rng::{self, AliasTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Undirected graph with positive weights; parallel edges are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMultigraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedMultigraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        for e in &edges {
            if e.u >= n || e.v >= n {
                return Err(Error::InvalidArgument(format!("edge ({}, {}) outside {n} vertices", e.u, e.v)));
            }
            if e.u == e.v {
                return Err(Error::InvalidArgument(format!("self-loop at vertex {}", e.u)));
            }
            if !(e.w > 0.0) || !e.w.is_finite() {
                return Err(Error::InvalidArgument(format!("edge ({}, {}) has weight {}", e.u, e.v, e.w)));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn from_triples(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        Self::new(n, triples.iter().map(|&(u, v, w)| Edge { u, v, w }).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut components = self.n;
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        if self.is_connected() { Ok(()) } else { Err(Error::Disconnected) }
    }

    /// Compressed rows of the Laplacian with parallel edges merged.
    fn rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); self.n];
        for e in &self.edges {
            *adj[e.u].entry(e.u).or_default() += e.w;
            *adj[e.v].entry(e.v).or_default() += e.w;
            *adj[e.u].entry(e.v).or_default() -= e.w;
            *adj[e.v].entry(e.u).or_default() -= e.w;
        }
        adj.into_iter().map(|m| m.into_iter().collect()).collect()
    }

    /// Sparse Laplacian operator.
    pub fn operator(&self) -> LaplacianOperator {
        LaplacianOperator { rows: self.rows() }
    }
}

/// `L x` by rows, each row reduced in a fixed order.
#[derive(Debug, Clone)]
pub struct LaplacianOperator {
    rows: Vec<Vec<(usize, f64)>>,
}

impl LinearOperator for LaplacianOperator {
    fn nrows(&self) -> usize {
        self.rows.len()
    }
    fn ncols(&self) -> usize {
        self.rows.len()
    }
    fn apply(&self, x: &Vector) -> Vector {
        Vector::from_vec(crate::par::map_range(self.rows.len(), |i| self.rows[i].iter().map(|&(j, v)| v * x[j]).sum()))
    }
    fn apply_adjoint(&self, y: &Vector) -> Vector {
        self.apply(y)
    }
}

/// Dense `L = sum_e w_e (d_u - d_v)(d_u - d_v)'`.
pub fn laplacian_matrix(g: &WeightedMultigraph) -> Matrix {
    let mut l = Matrix::zeros(g.n, g.n);
    for e in &g.edges {
        l[(e.u, e.u)] += e.w;
        l[(e.v, e.v)] += e.w;
        l[(e.u, e.v)] -= e.w;
        l[(e.v, e.u)] -= e.w;
    }
    l
}

/// Dense pseudoinverse of a connected Laplacian, `(L + J/n)^{-1} - J/n`.
pub fn laplacian_pinv(g: &WeightedMultigraph) -> Result<Matrix> {
    g.require_connected()?;
    let n = g.n as f64;
    let j = Matrix::from_element(g.n, g.n, 1.0 / n);
    let shifted = laplacian_matrix(g) + &j;
    let c = cholesky(&shifted)?;
    let inv = solve_lower(&c, &Matrix::identity(g.n, g.n));
    Ok(inv.tr_mul(&inv) - j)
}

/// Effective resistance of every edge, in edge order. Dense `O(n^3)`.
pub fn effective_resistances(g: &WeightedMultigraph) -> Result<Vec<f64>> {
    let p = laplacian_pinv(g)?;
    Ok(g.edges.iter().map(|e| (p[(e.u, e.u)] + p[(e.v, e.v)] - 2.0 * p[(e.u, e.v)]).max(0.0)).collect())
}

/// Sample size for a sparsifier that is a `(1 +- eps)` approximation with
/// high probability: `ceil(3 n log(2n) / eps^2)`.
pub fn sparsifier_size(n: usize, eps: f64) -> usize {
    (3.0 * n as f64 * (2.0 * n as f64).ln() / (eps * eps)).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SparsifySize {
    Eps(f64),
    Samples(usize),
}

/// Spectral sparsifier: `k` edges drawn with probability proportional to
/// `w_e R_e`, each reweighted by `w_e / (k p_e)`; repeated draws are merged.
pub fn sparsify(g: &WeightedMultigraph, size: SparsifySize, seed: u64) -> Result<WeightedMultigraph> {
    let k = match size {
        SparsifySize::Eps(eps) if eps > 0.0 && eps < 1.0 => sparsifier_size(g.n, eps),
        SparsifySize::Eps(eps) => return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}"))),
        SparsifySize::Samples(0) => return Err(Error::InvalidArgument("sample count must be positive".into())),
        SparsifySize::Samples(k) => k,
    };
    let r = effective_resistances(g)?;
    let scores: Vec<f64> = g.edges.iter().zip(&r).map(|(e, r)| e.w * r).collect();
    let total: f64 = scores.iter().sum();
    let table = AliasTable::new(&scores).ok_or(Error::Disconnected)?;
    let mut g_rng = rng::stream(seed, 0);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for _ in 0..k {
        *counts.entry(table.sample(&mut g_rng)).or_default() += 1;
    }
    let edges = counts
        .into_iter()
        .map(|(i, c)| {
            let e = g.edges[i];
            let p = scores[i] / total;
            Edge { w: e.w * c as f64 / (k as f64 * p), ..e }
        })
        .collect();
    WeightedMultigraph::new(g.n, edges)
}

/// Nonzero eigenvalues of the pencil `b^+ a` for two Laplacian-like
/// matrices whose common null space is the constant vector, ascending.
pub fn pencil_eigenvalues(a: &Matrix, b: &Matrix) -> Result<Vec<f64>> {
    let n = a.nrows();
    // Orthonormal basis of the complement of the constant vector.
    let mut basis = Matrix::zeros(n, n);
    basis.column_mut(0).fill(1.0);
    for j in 1..n {
        basis[(j, j)] = 1.0;
    }
    let q = qr_econ(&basis).0.columns(1, n - 1).into_owned();
    let aq = q.tr_mul(&(a * &q));
    let bq = q.tr_mul(&(b * &q));
    let c = cholesky(&((&bq + bq.transpose()) * 0.5))?;
    let x = solve_lower(&c, &aq);
    let m = solve_lower(&c, &x.transpose());
    Ok(eig_sym(&((&m + m.transpose()) * 0.5)).0)
}
