//! Matrix-free linear operators `E : R^n -> R^m`.

use crate::error::{check_dim, Error, Result};
use crate::noise::SplitMix;
use crate::{Matrix, Vector};

/// A linear map with forward and adjoint application.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearOperator {
    Identity(usize),
    Dense(Matrix),
    /// Periodic forward differences on an `side × side` image stored column-major,
    /// `R^{side²} -> R^{2 side²}`, stacked as `[D1; D2]` with `D1 = I ⊗ D`
    /// (differences along the row index) and `D2 = D ⊗ I` (along the column index).
    Grad2DPeriodic { side: usize },
    /// Operators sharing a domain, stacked vertically.
    VStack(Vec<LinearOperator>),
}

impl LinearOperator {
    pub fn vstack(ops: Vec<LinearOperator>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::InvalidParameter("VStack needs at least one operator".into()));
        };
        let n = first.domain_dim();
        for op in &ops {
            check_dim("VStack domain", n, op.domain_dim())?;
        }
        Ok(LinearOperator::VStack(ops))
    }

    pub fn domain_dim(&self) -> usize {
        match self {
            LinearOperator::Identity(n) => *n,
            LinearOperator::Dense(a) => a.ncols(),
            LinearOperator::Grad2DPeriodic { side } => side * side,
            LinearOperator::VStack(ops) => ops.first().map_or(0, |op| op.domain_dim()),
        }
    }

    pub fn codomain_dim(&self) -> usize {
        match self {
            LinearOperator::Identity(n) => *n,
            LinearOperator::Dense(a) => a.nrows(),
            LinearOperator::Grad2DPeriodic { side } => 2 * side * side,
            LinearOperator::VStack(ops) => ops.iter().map(|op| op.codomain_dim()).sum(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, LinearOperator::Identity(_))
    }

    /// `E x`.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim("LinearOperator::apply", self.domain_dim(), x.len())?;
        let mut out = Vector::zeros(self.codomain_dim());
        self.apply_slice(x.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// `E^T y`.
    pub fn adjoint_apply(&self, y: &Vector) -> Result<Vector> {
        check_dim("LinearOperator::adjoint_apply", self.codomain_dim(), y.len())?;
        let mut out = Vector::zeros(self.domain_dim());
        self.adjoint_slice(y.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    fn apply_slice(&self, x: &[f64], out: &mut [f64]) {
        match self {
            LinearOperator::Identity(_) => out.copy_from_slice(x),
            LinearOperator::Dense(a) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = a.row(i).iter().zip(x).map(|(aij, xj)| aij * xj).sum();
                }
            }
            LinearOperator::Grad2DPeriodic { side } => {
                let n = *side;
                let (d1, d2) = out.split_at_mut(n * n);
                for j in 0..n {
                    let jn = (j + 1) % n;
                    for i in 0..n {
                        let here = x[i + n * j];
                        d1[i + n * j] = x[(i + 1) % n + n * j] - here;
                        d2[i + n * j] = x[i + n * jn] - here;
                    }
                }
            }
            LinearOperator::VStack(ops) => {
                let mut offset = 0;
                for op in ops {
                    let m = op.codomain_dim();
                    op.apply_slice(x, &mut out[offset..offset + m]);
                    offset += m;
                }
            }
        }
    }

    fn adjoint_slice(&self, y: &[f64], out: &mut [f64]) {
        match self {
            LinearOperator::Identity(_) => out.copy_from_slice(y),
            LinearOperator::Dense(a) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (i, yi) in y.iter().enumerate() {
                    for (o, aij) in out.iter_mut().zip(a.row(i).iter()) {
                        *o += aij * yi;
                    }
                }
            }
            LinearOperator::Grad2DPeriodic { side } => {
                let n = *side;
                let (d1, d2) = y.split_at(n * n);
                for j in 0..n {
                    let jp = (j + n - 1) % n;
                    for i in 0..n {
                        let ip = (i + n - 1) % n;
                        let k = i + n * j;
                        out[k] = d1[ip + n * j] - d1[k] + d2[i + n * jp] - d2[k];
                    }
                }
            }
            LinearOperator::VStack(ops) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut part = vec![0.0; out.len()];
                let mut offset = 0;
                for op in ops {
                    let m = op.codomain_dim();
                    op.adjoint_slice(&y[offset..offset + m], &mut part);
                    for (o, p) in out.iter_mut().zip(&part) {
                        *o += p;
                    }
                    offset += m;
                }
            }
        }
    }

    /// Power-iteration estimate of `|E|^2`, inflated by 1% so it can serve as
    /// an upper bound in diagnostics. Returns 0 for the zero operator.
    pub fn opnorm_sq_upper(&self, iters: usize) -> f64 {
        let n = self.domain_dim();
        if n == 0 || self.codomain_dim() == 0 {
            return 0.0;
        }
        let mut rng = SplitMix::new(0x5EED0F0BE7A);
        let mut v = Vector::from_fn(n, |_, _| rng.next_f64() - 0.5);
        let mut estimate = 0.0_f64;
        for _ in 0..iters.max(1) {
            let norm = v.norm();
            if norm == 0.0 {
                break;
            }
            v /= norm;
            let ev = self.apply(&v).expect("dimension checked");
            estimate = estimate.max(ev.norm_squared());
            v = self.adjoint_apply(&ev).expect("dimension checked");
        }
        1.01 * estimate
    }

    /// Materialize `E` column by column.
    pub fn to_dense(&self) -> Matrix {
        let (m, n) = (self.codomain_dim(), self.domain_dim());
        let mut out = Matrix::zeros(m, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; m];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_slice(&e, &mut col);
            out.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        out
    }
}
