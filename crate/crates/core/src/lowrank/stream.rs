//! Single-view (streaming) SVD from linear sketches.

use serde::{Deserialize, Serialize};

use super::truncate_svd;
use crate::dense::{pinv_solve, pinv_solve_right, qr_econ, svd_econ, Matrix, Svd, Vector};
use crate::error::{dims, mismatch, Error, Result};
use crate::rng;
use crate::sketch::{make_sketch, Scaling, SketchKind, SketchOperator};

/// Which core estimate `stream_finalize` solves for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoreMethod {
    /// `C = (Q' Y)(P' Omega)^+` from the range and co-range sketches only.
    TwoSketch,
    /// `C = (Phi' Q)^+ Z (P' Psi)^+` using the independent core sketch.
    #[default]
    ThreeSketch,
}

/// One term `scale * H` of the stream `A = H_1 + H_2 + ...`.
#[derive(Debug, Clone, Copy)]
pub enum StreamUpdate<'a> {
    Dense(&'a Matrix),
    /// `(row, col, value)` triplets; repeated positions add.
    Sparse(&'a [(usize, usize, f64)]),
    RankOne(&'a Vector, &'a Vector),
}

/// Linear sketches `X = Upsilon' A`, `Y = A Omega`, `Z = Phi' A Psi` of a
/// matrix that is only seen as a sum of updates.
#[derive(Debug, Clone)]
pub struct StreamSketch {
    m: usize,
    n: usize,
    l: usize,
    s: usize,
    seed: u64,
    kind: SketchKind,
    // Stored as sketch maps: upsilon is l x m, omega l x n, phi s x m, psi s x n.
    upsilon: SketchOperator,
    omega: SketchOperator,
    phi: SketchOperator,
    psi: SketchOperator,
    /// Dense copies for entrywise and rank-one updates.
    dense: [Matrix; 4],
    x: Matrix,
    y: Matrix,
    z: Matrix,
}

/// Serialized form: everything needed to rebuild the sketch maps plus the
/// three accumulators, column-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEnvelope {
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub s: usize,
    pub seed: u64,
    pub kind: SketchKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SingleViewSvd {
    /// Truncated factors.
    pub svd: Svd,
    /// Bases `Q` (m x l) and `P` (n x l) and the core `C` before truncation:
    /// `A ~ Q C P'`.
    pub q: Matrix,
    pub p: Matrix,
    pub core: Matrix,
}

impl SingleViewSvd {
    /// The rank-`l` approximation `Q C P'`.
    pub fn full_reconstruction(&self) -> Matrix {
        &self.q * &self.core * self.p.transpose()
    }
}

fn kind_for(kind: &SketchKind, d: usize) -> SketchKind {
    match kind {
        SketchKind::SparseSign { zeta } => SketchKind::SparseSign { zeta: (*zeta).min(d) },
        k => k.clone(),
    }
}

/// Fresh sketch with sparse sign maps.
pub fn stream_init(m: usize, n: usize, l: usize, s: usize, seed: u64) -> Result<StreamSketch> {
    StreamSketch::new(m, n, l, s, seed, SketchKind::sparse_default(l))
}

/// Add `scale * H` to the sketched matrix.
pub fn stream_update(sk: &mut StreamSketch, h: StreamUpdate<'_>, scale: f64) -> Result<()> {
    sk.update(h, scale)
}

/// Rank-`k` SVD from the three-sketch core.
pub fn stream_finalize(sk: &StreamSketch, k: usize) -> Result<SingleViewSvd> {
    sk.finalize(k, CoreMethod::ThreeSketch)
}

impl StreamSketch {
    pub fn new(m: usize, n: usize, l: usize, s: usize, seed: u64, kind: SketchKind) -> Result<Self> {
        if l == 0 || l > m.min(n) {
            return dims(format!("range sketch size l={l} must lie in 1..={}", m.min(n)));
        }
        if s < l || s > m.min(n) {
            return dims(format!("core sketch size s={s} must lie in {l}..={}", m.min(n)));
        }
        let make = |d, dim, tag| make_sketch(kind_for(&kind, d), d, dim, rng::derive(seed, tag), Scaling::UnitVariance);
        let upsilon = make(l, m, 11)?;
        let omega = make(l, n, 12)?;
        let phi = make(s, m, 13)?;
        let psi = make(s, n, 14)?;
        let dense = [upsilon.materialize(), omega.materialize(), phi.materialize(), psi.materialize()];
        Ok(Self {
            m,
            n,
            l,
            s,
            seed,
            kind,
            upsilon,
            omega,
            phi,
            psi,
            dense,
            x: Matrix::zeros(l, n),
            y: Matrix::zeros(m, l),
            z: Matrix::zeros(s, s),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn sizes(&self) -> (usize, usize) {
        (self.l, self.s)
    }

    /// Accumulators `(X, Y, Z)`.
    pub fn accumulators(&self) -> (&Matrix, &Matrix, &Matrix) {
        (&self.x, &self.y, &self.z)
    }

    pub fn update(&mut self, h: StreamUpdate<'_>, scale: f64) -> Result<()> {
        match h {
            StreamUpdate::Dense(h) => {
                if h.shape() != (self.m, self.n) {
                    return mismatch(format!("update is {:?}, sketch expects {}x{}", h.shape(), self.m, self.n));
                }
                let x = self.upsilon.left(h)?;
                let y = self.omega.right_adjoint(h)?;
                let z = self.psi.right_adjoint(&self.phi.left(h)?)?;
                self.x += x * scale;
                self.y += y * scale;
                self.z += z * scale;
            }
            StreamUpdate::Sparse(entries) => {
                if let Some(&(i, j, _)) = entries.iter().find(|&&(i, j, _)| i >= self.m || j >= self.n) {
                    return mismatch(format!("entry ({i},{j}) outside {}x{}", self.m, self.n));
                }
                let [ups, om, ph, ps] = &self.dense;
                for &(i, j, v) in entries {
                    let v = v * scale;
                    self.x.column_mut(j).axpy(v, &ups.column(i), 1.0);
                    for c in 0..self.l {
                        self.y[(i, c)] += v * om[(c, j)];
                    }
                    self.z.ger(v, &ph.column(i), &ps.column(j), 1.0);
                }
            }
            StreamUpdate::RankOne(u, v) => {
                if u.len() != self.m || v.len() != self.n {
                    return mismatch(format!("rank-one update is {}x{}, sketch expects {}x{}", u.len(), v.len(), self.m, self.n));
                }
                let [ups, om, ph, ps] = &self.dense;
                let (su, sv) = (ups * u, om * v);
                self.x.ger(scale, &su, v, 1.0);
                self.y.ger(scale, u, &sv, 1.0);
                self.z.ger(scale, &(ph * u), &(ps * v), 1.0);
            }
        }
        Ok(())
    }

    /// Rank-`k` SVD. The sketch is left untouched, so this can be called
    /// again after further updates.
    pub fn finalize(&self, k: usize, core: CoreMethod) -> Result<SingleViewSvd> {
        if k > self.l {
            return Err(Error::RankTooLarge { k, l: self.l });
        }
        let (q, _) = qr_econ(&self.y);
        let (p, _) = qr_econ(&self.x.transpose());
        let c = match core {
            CoreMethod::TwoSketch => {
                let p_omega = self.omega.left(&p)?.transpose();
                pinv_solve_right(&q.tr_mul(&self.y), &p_omega)
            }
            CoreMethod::ThreeSketch => {
                let phi_q = self.phi.left(&q)?;
                let p_psi = self.psi.left(&p)?.transpose();
                pinv_solve_right(&pinv_solve(&phi_q, &self.z), &p_psi)
            }
        };
        let small = svd_econ(&c);
        let full = Svd { u: &q * &small.u, s: small.s, v: &p * &small.v };
        Ok(SingleViewSvd { svd: truncate_svd(&full, k), q, p, core: c })
    }

    /// Add another sketch's accumulators; both must share sizes, seed and kind.
    pub fn merge(&mut self, other: &StreamSketch) -> Result<()> {
        if (self.m, self.n, self.l, self.s, self.seed) != (other.m, other.n, other.l, other.s, other.seed)
            || self.kind != other.kind
        {
            return mismatch("sketches differ in shape, sizes, seed or kind");
        }
        self.x += &other.x;
        self.y += &other.y;
        self.z += &other.z;
        Ok(())
    }

    pub fn to_envelope(&self) -> StreamEnvelope {
        StreamEnvelope {
            m: self.m,
            n: self.n,
            l: self.l,
            s: self.s,
            seed: self.seed,
            kind: self.kind.clone(),
            x: self.x.as_slice().to_vec(),
            y: self.y.as_slice().to_vec(),
            z: self.z.as_slice().to_vec(),
        }
    }

    pub fn from_envelope(env: &StreamEnvelope) -> Result<Self> {
        let mut sk = Self::new(env.m, env.n, env.l, env.s, env.seed, env.kind.clone())?;
        let (l, s, m, n) = (env.l, env.s, env.m, env.n);
        if env.x.len() != l * n || env.y.len() != m * l || env.z.len() != s * s {
            return mismatch("accumulator payload sizes do not match the declared dimensions");
        }
        sk.x = Matrix::from_column_slice(l, n, &env.x);
        sk.y = Matrix::from_column_slice(m, l, &env.y);
        sk.z = Matrix::from_column_slice(s, s, &env.z);
        Ok(sk)
    }
}
