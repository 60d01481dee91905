use super::{par_matmul, par_tr_matmul, Matrix, Vector};

/// A linear map known through its action on vectors.
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &Vector) -> Vector;
    fn apply_adjoint(&self, y: &Vector) -> Vector;

    /// Apply to every column of `x`.
    fn apply_mat(&self, x: &Matrix) -> Matrix {
        columnwise(self.nrows(), x, |v| self.apply(v))
    }

    fn apply_adjoint_mat(&self, y: &Matrix) -> Matrix {
        columnwise(self.ncols(), y, |v| self.apply_adjoint(v))
    }

    /// Dense entries, when the operator has them at hand.
    fn as_dense(&self) -> Option<&Matrix> {
        None
    }

    /// Materialize (probing with identity columns if necessary).
    fn to_dense(&self) -> Matrix {
        match self.as_dense() {
            Some(a) => a.clone(),
            None => self.apply_mat(&Matrix::identity(self.ncols(), self.ncols())),
        }
    }
}

fn columnwise(rows: usize, x: &Matrix, f: impl Fn(&Vector) -> Vector + Sync + Send) -> Matrix {
    let cols = crate::par::map_range(x.ncols(), |j| f(&x.column(j).into_owned()));
    let mut out = Matrix::zeros(rows, x.ncols());
    for (j, c) in cols.into_iter().enumerate() {
        out.set_column(j, &c);
    }
    out
}

impl LinearOperator for Matrix {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &Vector) -> Vector {
        self * x
    }
    fn apply_adjoint(&self, y: &Vector) -> Vector {
        self.tr_mul(y)
    }
    fn apply_mat(&self, x: &Matrix) -> Matrix {
        par_matmul(self, x)
    }
    fn apply_adjoint_mat(&self, y: &Matrix) -> Matrix {
        par_tr_matmul(self, y)
    }
    fn as_dense(&self) -> Option<&Matrix> {
        Some(self)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply(&self, x: &Vector) -> Vector {
        (**self).apply(x)
    }
    fn apply_adjoint(&self, y: &Vector) -> Vector {
        (**self).apply_adjoint(y)
    }
    fn apply_mat(&self, x: &Matrix) -> Matrix {
        (**self).apply_mat(x)
    }
    fn apply_adjoint_mat(&self, y: &Matrix) -> Matrix {
        (**self).apply_adjoint_mat(y)
    }
    fn as_dense(&self) -> Option<&Matrix> {
        (**self).as_dense()
    }
}

/// The adjoint `B'` of an operator `B`.
pub struct Adjoint<T>(pub T);

impl<T: LinearOperator> LinearOperator for Adjoint<T> {
    fn nrows(&self) -> usize {
        self.0.ncols()
    }
    fn ncols(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &Vector) -> Vector {
        self.0.apply_adjoint(x)
    }
    fn apply_adjoint(&self, y: &Vector) -> Vector {
        self.0.apply(y)
    }
    fn apply_mat(&self, x: &Matrix) -> Matrix {
        self.0.apply_adjoint_mat(x)
    }
    fn apply_adjoint_mat(&self, y: &Matrix) -> Matrix {
        self.0.apply_mat(y)
    }
}

/// The outer Gram operator `B B'`, never formed explicitly.
pub struct Gram<T>(pub T);

impl<T: LinearOperator> LinearOperator for Gram<T> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }
    fn ncols(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &Vector) -> Vector {
        self.0.apply(&self.0.apply_adjoint(x))
    }
    fn apply_adjoint(&self, y: &Vector) -> Vector {
        self.apply(y)
    }
    fn apply_mat(&self, x: &Matrix) -> Matrix {
        self.0.apply_mat(&self.0.apply_adjoint_mat(x))
    }
    fn apply_adjoint_mat(&self, y: &Matrix) -> Matrix {
        self.apply_mat(y)
    }
}

#[cfg(test)]
pub(crate) fn adjoint_defect<T: LinearOperator + ?Sized>(op: &T, seed: u64) -> f64 {
    let mut worst = 0.0f64;
    for t in 0..20 {
        let mut r = crate::rng::stream(seed, t);
        let u = crate::rng::gaussian_vector(&mut r, op.nrows());
        let v = crate::rng::gaussian_vector(&mut r, op.ncols());
        let lhs = op.apply_adjoint(&u).dot(&v);
        let rhs = u.dot(&op.apply(&v));
        let scale = u.norm() * v.norm() * op.to_dense().norm();
        worst = worst.max((lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE));
    }
    worst
}
