//! The composite problem `min f(x) + phi(E x)`, its augmented Lagrangian
//!
//! ```text
//! L_c(x, λ) = f(x) + phi_c(E x + λ/c) - |λ|^2 / (2c)
//! ```
//!
//! and the quantities derived from it that the solvers need.

use crate::error::{check_dim, check_positive, Error, Result};
use crate::operators::LinearOperator;
use crate::prox::{ExtReal, ProxSpec};
use crate::{Matrix, Vector};

/// Smooth convex part `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothSpec {
    Zero { dim: usize },
    /// `f(x) = ½ |A x - b|^2`.
    Quadratic { a: Matrix, b: Vector },
}

impl SmoothSpec {
    pub fn quadratic(a: Matrix, b: Vector) -> Result<Self> {
        check_dim("Quadratic rhs", a.nrows(), b.len())?;
        Ok(SmoothSpec::Quadratic { a, b })
    }

    pub fn dim(&self) -> usize {
        match self {
            SmoothSpec::Zero { dim } => *dim,
            SmoothSpec::Quadratic { a, .. } => a.ncols(),
        }
    }

    /// `A x - b` for the quadratic, `None` for the zero function.
    pub fn residual(&self, x: &Vector) -> Result<Option<Vector>> {
        check_dim("SmoothSpec argument", self.dim(), x.len())?;
        Ok(match self {
            SmoothSpec::Zero { .. } => None,
            SmoothSpec::Quadratic { a, b } => Some(a * x - b),
        })
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        Ok(self
            .residual(x)?
            .map_or(0.0, |r| 0.5 * r.norm_squared()))
    }

    pub fn grad(&self, x: &Vector) -> Result<Vector> {
        Ok(match (self, self.residual(x)?) {
            (SmoothSpec::Quadratic { a, .. }, Some(r)) => a.tr_mul(&r),
            _ => Vector::zeros(x.len()),
        })
    }

    /// `∇²f d`.
    pub fn hess_apply(&self, d: &Vector) -> Result<Vector> {
        check_dim("SmoothSpec direction", self.dim(), d.len())?;
        Ok(match self {
            SmoothSpec::Zero { .. } => Vector::zeros(d.len()),
            SmoothSpec::Quadratic { a, .. } => a.tr_mul(&(a * d)),
        })
    }

    /// `A d` for the quadratic; the change of the residual along `d`.
    pub(crate) fn residual_direction(&self, d: &Vector) -> Option<Vector> {
        match self {
            SmoothSpec::Zero { .. } => None,
            SmoothSpec::Quadratic { a, .. } => Some(a * d),
        }
    }

    /// Whether `∇²f` is positive definite, judged by the smallest eigenvalue
    /// of `AᵀA` relative to the largest.
    pub fn is_strongly_convex(&self) -> bool {
        match self {
            SmoothSpec::Zero { dim } => *dim == 0,
            SmoothSpec::Quadratic { a, .. } => {
                if a.ncols() == 0 {
                    return true;
                }
                let eig = a.tr_mul(a).symmetric_eigenvalues();
                let (lo, hi) = (eig.min(), eig.max());
                lo > 1e-10 * hi.max(1.0)
            }
        }
    }

    /// Upper estimate of the Lipschitz constant of `∇f`, `|A|^2`.
    pub fn lipschitz_upper(&self) -> f64 {
        match self {
            SmoothSpec::Zero { .. } => 0.0,
            SmoothSpec::Quadratic { a, .. } => {
                LinearOperator::Dense(a.clone()).opnorm_sq_upper(500)
            }
        }
    }
}

/// The triple `(f, E, phi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub f: SmoothSpec,
    pub e: LinearOperator,
    pub phi: ProxSpec,
}

impl Problem {
    pub fn new(f: SmoothSpec, e: LinearOperator, phi: ProxSpec) -> Result<Self> {
        check_dim("Problem: dim f vs domain of E", f.dim(), e.domain_dim())?;
        check_dim("Problem: codomain of E vs dim phi", e.codomain_dim(), phi.dim())?;
        phi.validate()?;
        Ok(Problem { f, e, phi })
    }

    /// Primal dimension.
    pub fn n(&self) -> usize {
        self.e.domain_dim()
    }

    /// Dual dimension.
    pub fn m(&self) -> usize {
        self.e.codomain_dim()
    }

    /// `f(x) + phi(E x)`.
    pub fn objective(&self, x: &Vector) -> Result<ExtReal> {
        let ex = self.e.apply(x)?;
        Ok(self.phi.value(&ex)?.plus_finite(self.f.value(x)?))
    }

    pub(crate) fn check_state(&self, s: &IterateState) -> Result<()> {
        check_dim("IterateState x", self.n(), s.x.len())?;
        check_dim("IterateState lambda", self.m(), s.lambda.len())?;
        check_positive("c", s.c)
    }
}

/// Primal-dual pair with the current penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: Vector,
    pub lambda: Vector,
    pub c: f64,
}

impl IterateState {
    pub fn new(x: Vector, lambda: Vector, c: f64) -> Result<Self> {
        check_positive("c", c)?;
        Ok(IterateState { x, lambda, c })
    }

    /// `x = 0`, `λ = 0`.
    pub fn zeros(p: &Problem, c: f64) -> Result<Self> {
        Self::new(Vector::zeros(p.n()), Vector::zeros(p.m()), c)
    }
}

/// `z = E x + λ/c`, the point where the prox is taken.
pub(crate) fn shifted_point(p: &Problem, x: &Vector, lambda: &Vector, c: f64) -> Result<Vector> {
    let mut z = p.e.apply(x)?;
    z.axpy(1.0 / c, lambda, 1.0);
    Ok(z)
}

/// `L_c(x, λ)`.
pub fn aug_lagrangian_value(p: &Problem, s: &IterateState) -> Result<f64> {
    p.check_state(s)?;
    let z = shifted_point(p, &s.x, &s.lambda, s.c)?;
    Ok(p.f.value(&s.x)? + p.phi.envelope(&z, s.c)? - s.lambda.norm_squared() / (2.0 * s.c))
}

/// `∇_x L_c = ∇f(x) + c Eᵀ(z - prox(z))`.
pub fn aug_lagrangian_grad_x(p: &Problem, s: &IterateState) -> Result<Vector> {
    p.check_state(s)?;
    let z = shifted_point(p, &s.x, &s.lambda, s.c)?;
    let gap = &z - p.phi.prox(&z, s.c)?;
    let mut g = p.f.grad(&s.x)?;
    g.axpy(s.c, &p.e.adjoint_apply(&gap)?, 1.0);
    Ok(g)
}

/// `∇_λ L_c = E x - prox(z)`.
pub fn aug_lagrangian_grad_lambda(p: &Problem, s: &IterateState) -> Result<Vector> {
    p.check_state(s)?;
    let ex = p.e.apply(&s.x)?;
    let z = shifted_point(p, &s.x, &s.lambda, s.c)?;
    Ok(ex - p.phi.prox(&z, s.c)?)
}

/// `λ⁺ = λ + c (E x⁺ - prox(E x⁺ + λ/c))`.
pub fn multiplier_update(p: &Problem, s: &IterateState, x_next: &Vector) -> Result<Vector> {
    p.check_state(s)?;
    check_dim("multiplier_update x_next", p.n(), x_next.len())?;
    let ex = p.e.apply(x_next)?;
    let mut z = ex.clone();
    z.axpy(1.0 / s.c, &s.lambda, 1.0);
    let gap = ex - p.phi.prox(&z, s.c)?;
    let mut out = s.lambda.clone();
    out.axpy(s.c, &gap, 1.0);
    Ok(out)
}

/// `(|∇f(x) + Eᵀλ|, |E x - prox(E x + λ/c)|)`.
pub fn kkt_residual(p: &Problem, s: &IterateState) -> Result<(f64, f64)> {
    p.check_state(s)?;
    let mut stat = p.f.grad(&s.x)?;
    stat += p.e.adjoint_apply(&s.lambda)?;
    let feas = aug_lagrangian_grad_lambda(p, s)?;
    Ok((stat.norm(), feas.norm()))
}

/// Forward-backward envelope `F_c(x) = f(x) + phi_c(x - ∇f(x)/c) - |∇f(x)|^2/(2c)`,
/// i.e. `L_c(x, -∇f(x))`. Requires `E = I`.
pub fn forward_backward_envelope(p: &Problem, x: &Vector, c: f64) -> Result<f64> {
    if !p.e.is_identity() {
        return Err(Error::Precondition(
            "the forward-backward envelope needs E = Identity".into(),
        ));
    }
    let lambda = -p.f.grad(x)?;
    aug_lagrangian_value(p, &IterateState::new(x.clone(), lambda, c)?)
}
