//! Semismooth Newton method for the proximal subproblem
//!
//! ```text
//! psi(ξ) = L_c(ξ, λ) + |ξ - x|^2 / (2c)
//! ```
//!
//! Each step solves `V d = -∇psi(ξ)` by conjugate gradients, with
//! `V = ∇²f + I/c + c Eᵀ(I - G)E` and `G` a Jacobian element of the prox at
//! `E ξ + λ/c`, then backtracks along `d` until the Armijo condition holds.
//!
//! The line search compares `psi(ξ + τd) - psi(ξ)` computed directly as an
//! increment, never as the difference of two large values, so descent can be
//! certified down to gradient norms near machine precision.

use crate::error::{check_dim, check_positive, Error, Result};
use crate::lagrangian::{shifted_point, Problem};
use crate::prox::JacobianElement;
use crate::Vector;

/// Parameters of the Newton iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerConfig {
    /// Armijo sufficient-decrease constant, in `(0, 1/2)`.
    pub gamma: f64,
    /// Backtracking factor, in `(0, 1)`.
    pub rho: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
    /// Cap on the relative CG forcing term, in `(0, 1)`.
    pub cg_rel_tol_cap: f64,
    /// CG iteration limit; `None` means ten times the primal dimension.
    pub cg_max_iters: Option<usize>,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            gamma: 0.1,
            rho: 0.5,
            max_iters: 100,
            max_backtracks: 60,
            cg_rel_tol_cap: 0.5,
            cg_max_iters: None,
        }
    }
}

impl InnerConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |name: &str, v: f64, hi: f64| {
            if v > 0.0 && v < hi {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in (0, {hi}), got {v}")))
            }
        };
        open_unit("gamma", self.gamma, 0.5)?;
        open_unit("rho", self.rho, 1.0)?;
        open_unit("cg_rel_tol_cap", self.cg_rel_tol_cap, 1.0)?;
        if self.max_iters == 0 || self.cg_max_iters == Some(0) {
            return Err(Error::InvalidParameter("iteration limits must be positive".into()));
        }
        Ok(())
    }

    fn cg_limit(&self, n: usize) -> usize {
        self.cg_max_iters.unwrap_or(10 * n.max(1))
    }
}

/// Conditions worth reporting that did not prevent a usable result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverFlag {
    /// CG hit its iteration limit; the best iterate was used.
    CgNotConverged,
    /// The Newton direction was not a descent direction; `-c ∇psi` was used.
    SteepestDescentFallback,
    /// The inner iteration limit was reached before the stopping tolerance.
    InnerMaxIterations,
    /// Backtracking exhausted its budget; the last accepted iterate was kept.
    LineSearchStalled,
    /// A small multiple of the identity was added to a singular Newton operator.
    RidgeGuardActive,
    /// The realized-step acceptance test still failed after all tightenings.
    CriterionNotMet,
    /// The regularized forward-backward Newton system could not be factored.
    SingularSystem,
}

pub(crate) fn push_flag(flags: &mut Vec<SolverFlag>, flag: SolverFlag) {
    if !flags.contains(&flag) {
        flags.push(flag);
    }
}

/// Output of [`newton_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub xi: Vector,
    /// `|∇psi(xi)|`, recomputed at exit.
    pub grad_norm: f64,
    pub iters: usize,
    /// Accepted step length per iteration.
    pub step_sizes: Vec<f64>,
    /// `|∇psi|` at the start and after every iteration.
    pub residual_history: Vec<f64>,
    /// `psi` at the start and after every iteration.
    pub psi_history: Vec<f64>,
    /// `psi(ξ_{l+1}) - psi(ξ_l)` per iteration, computed as an increment.
    pub psi_decreases: Vec<f64>,
    pub converged: bool,
    pub flags: Vec<SolverFlag>,
}

/// The inner objective, optionally without the proximal term (the plain
/// method of multipliers) and with a ridge added to its Newton operator.
pub(crate) struct Subproblem<'a> {
    pub p: &'a Problem,
    pub center: Option<&'a Vector>,
    pub lambda: &'a Vector,
    pub c: f64,
    pub ridge: f64,
}

/// Quantities at a trial point that the step computation and the line search share.
struct Point {
    xi: Vector,
    z: Vector,
    grad: Vector,
    residual: Option<Vector>,
}

impl<'a> Subproblem<'a> {
    fn check(&self, xi: &Vector) -> Result<()> {
        check_dim("subproblem iterate", self.p.n(), xi.len())?;
        check_dim("subproblem multiplier", self.p.m(), self.lambda.len())?;
        if let Some(x) = self.center {
            check_dim("subproblem center", self.p.n(), x.len())?;
        }
        check_positive("c", self.c)
    }

    fn value(&self, xi: &Vector) -> Result<f64> {
        self.check(xi)?;
        let z = shifted_point(self.p, xi, self.lambda, self.c)?;
        let mut v = self.p.f.value(xi)? + self.p.phi.envelope(&z, self.c)?
            - self.lambda.norm_squared() / (2.0 * self.c);
        if let Some(x) = self.center {
            v += (xi - x).norm_squared() / (2.0 * self.c);
        }
        Ok(v)
    }

    fn point(&self, xi: Vector) -> Result<Point> {
        self.check(&xi)?;
        let z = shifted_point(self.p, &xi, self.lambda, self.c)?;
        let gap = &z - self.p.phi.prox(&z, self.c)?;
        let residual = self.p.f.residual(&xi)?;
        let mut grad = self.p.f.grad(&xi)?;
        grad.axpy(self.c, &self.p.e.adjoint_apply(&gap)?, 1.0);
        if let Some(x) = self.center {
            grad.axpy(1.0 / self.c, &(&xi - x), 1.0);
        }
        Ok(Point {
            xi,
            z,
            grad,
            residual,
        })
    }

    /// `V d` with `G` fixed.
    fn operator_apply(&self, g: &JacobianElement, d: &Vector) -> Result<Vector> {
        let ed = self.p.e.apply(d)?;
        let mut out = self.p.f.hess_apply(d)?;
        out.axpy(self.c, &self.p.e.adjoint_apply(&g.apply_complement(&ed)?)?, 1.0);
        let diag = if self.center.is_some() { 1.0 / self.c } else { 0.0 } + self.ridge;
        if diag != 0.0 {
            out.axpy(diag, d, 1.0);
        }
        Ok(out)
    }

    /// `psi(ξ + τd) - psi(ξ)`, given `ed = E d` and `ad = A d`.
    fn increment(&self, pt: &Point, d: &Vector, ed: &Vector, ad: Option<&Vector>, tau: f64) -> Result<f64> {
        let mut inc = self.p.phi.envelope_increment(&pt.z, &(ed * tau), self.c)?;
        if let (Some(r), Some(ad)) = (&pt.residual, ad) {
            inc += tau * ad.dot(r) + 0.5 * tau * tau * ad.norm_squared();
        }
        if let Some(x) = self.center {
            inc += (tau * d.dot(&(&pt.xi - x)) + 0.5 * tau * tau * d.norm_squared()) / self.c;
        }
        Ok(inc)
    }
}

/// `psi(ξ) = L_c(ξ, λ) + |ξ - x|^2 / (2c)`.
pub fn psi_value(p: &Problem, x: &Vector, lambda: &Vector, c: f64, xi: &Vector) -> Result<f64> {
    Subproblem {
        p,
        center: Some(x),
        lambda,
        c,
        ridge: 0.0,
    }
    .value(xi)
}

/// `∇psi(ξ) = ∇f(ξ) + c Eᵀ(z - prox(z)) + (ξ - x)/c` with `z = E ξ + λ/c`.
pub fn psi_grad(p: &Problem, x: &Vector, lambda: &Vector, c: f64, xi: &Vector) -> Result<Vector> {
    Ok(Subproblem {
        p,
        center: Some(x),
        lambda,
        c,
        ridge: 0.0,
    }
    .point(xi.clone())?
    .grad)
}

/// `V d = ∇²f d + d/c + c Eᵀ(I - G) E d`.
pub fn lna_apply(p: &Problem, c: f64, g: &JacobianElement, d: &Vector) -> Result<Vector> {
    check_positive("c", c)?;
    check_dim("lna_apply direction", p.n(), d.len())?;
    check_dim("lna_apply Jacobian", p.m(), g.dim())?;
    let lambda = Vector::zeros(p.m());
    let center = Vector::zeros(p.n());
    Subproblem {
        p,
        center: Some(&center),
        lambda: &lambda,
        c,
        ridge: 0.0,
    }
    .operator_apply(g, d)
}

/// Result of a conjugate-gradient solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub d: Vector,
    pub residual_norm: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Conjugate gradients for `V d = rhs` from `d = 0`, stopping once
/// `|V d - rhs| <= tol_abs`. Without convergence the iterate with the smallest
/// residual among those after the first step is returned and `converged` is
/// false.
pub fn solve_newton_system(
    mut v_apply: impl FnMut(&Vector) -> Result<Vector>,
    rhs: &Vector,
    tol_abs: f64,
    max_iters: usize,
) -> Result<CgOutcome> {
    let mut d = Vector::zeros(rhs.len());
    let mut r = rhs.clone();
    let mut rr = r.norm_squared();
    let mut best: Option<(f64, Vector)> = None;
    if rr.sqrt() <= tol_abs {
        return Ok(CgOutcome {
            d,
            residual_norm: rr.sqrt(),
            iters: 0,
            converged: true,
        });
    }
    let mut dir = r.clone();
    for it in 1..=max_iters {
        let vdir = v_apply(&dir)?;
        let curv = dir.dot(&vdir);
        if !(curv > 0.0) {
            break;
        }
        let step = rr / curv;
        d.axpy(step, &dir, 1.0);
        r.axpy(-step, &vdir, 1.0);
        let rr_next = r.norm_squared();
        let res = rr_next.sqrt();
        if best.as_ref().is_none_or(|(b, _)| res < *b) {
            best = Some((res, d.clone()));
        }
        if res <= tol_abs {
            return Ok(CgOutcome {
                d,
                residual_norm: res,
                iters: it,
                converged: true,
            });
        }
        dir *= rr_next / rr;
        dir += &r;
        rr = rr_next;
    }
    let (residual_norm, d) = best.unwrap_or((rr.sqrt(), d));
    Ok(CgOutcome {
        d,
        residual_norm,
        iters: max_iters,
        converged: false,
    })
}

/// Accepted Armijo step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoStep {
    pub tau: f64,
    /// `psi(ξ + τd) - psi(ξ)` at the accepted step.
    pub decrease: f64,
    pub backtracks: usize,
}

/// Find the smallest `i >= 0` with `Δ(ρ^i) <= γ ρ^i slope`, where
/// `Δ(τ) = psi(ξ + τd) - psi(ξ)` and `slope = ∇psi(ξ)ᵀd < 0`.
pub fn armijo_search(
    mut increment: impl FnMut(f64) -> Result<f64>,
    slope: f64,
    gamma: f64,
    rho: f64,
    max_backtracks: usize,
) -> Result<ArmijoStep> {
    if !(slope < 0.0) {
        return Err(Error::Precondition(format!(
            "line search needs a descent direction, got slope {slope}"
        )));
    }
    let mut tau = 1.0;
    for i in 0..=max_backtracks {
        let delta = increment(tau)?;
        if delta <= gamma * tau * slope {
            return Ok(ArmijoStep {
                tau,
                decrease: delta,
                backtracks: i,
            });
        }
        tau *= rho;
    }
    Err(Error::LineSearchStalled {
        backtracks: max_backtracks,
    })
}

/// Minimize `psi` starting from `ξ₀ = x`, until `|∇psi| <= stop_tol`.
pub fn newton_solve(
    p: &Problem,
    x: &Vector,
    lambda: &Vector,
    c: f64,
    stop_tol: f64,
    cfg: &InnerConfig,
) -> Result<InnerResult> {
    newton_solve_from(p, x, lambda, c, x.clone(), stop_tol, cfg)
}

/// As [`newton_solve`] with an explicit starting point.
pub fn newton_solve_from(
    p: &Problem,
    x: &Vector,
    lambda: &Vector,
    c: f64,
    xi0: Vector,
    stop_tol: f64,
    cfg: &InnerConfig,
) -> Result<InnerResult> {
    let sub = Subproblem {
        p,
        center: Some(x),
        lambda,
        c,
        ridge: 0.0,
    };
    run_newton(&sub, xi0, stop_tol, cfg)
}

pub(crate) fn run_newton(
    sub: &Subproblem<'_>,
    xi0: Vector,
    stop_tol: f64,
    cfg: &InnerConfig,
) -> Result<InnerResult> {
    cfg.validate()?;
    check_positive("stop_tol", stop_tol)?;
    let c = sub.c;
    let mut flags = Vec::new();
    if sub.ridge > 0.0 {
        push_flag(&mut flags, SolverFlag::RidgeGuardActive);
    }
    let cg_limit = cfg.cg_limit(sub.p.n());

    let mut psi = sub.value(&xi0)?;
    let mut pt = sub.point(xi0)?;
    let mut gnorm = pt.grad.norm();
    let mut out = InnerResult {
        xi: Vector::zeros(0),
        grad_norm: gnorm,
        iters: 0,
        step_sizes: Vec::new(),
        residual_history: vec![gnorm],
        psi_history: vec![psi],
        psi_decreases: Vec::new(),
        converged: false,
        flags: Vec::new(),
    };

    while gnorm > stop_tol {
        if out.iters == cfg.max_iters {
            push_flag(&mut flags, SolverFlag::InnerMaxIterations);
            break;
        }
        let g_elem = sub.p.phi.jacobian(&pt.z, c)?;
        let tol = cfg.cg_rel_tol_cap.min(gnorm.sqrt()) * gnorm;
        let cg = solve_newton_system(|d| sub.operator_apply(&g_elem, d), &(-&pt.grad), tol, cg_limit)?;
        if !cg.converged {
            push_flag(&mut flags, SolverFlag::CgNotConverged);
        }
        let mut d = cg.d;
        let mut slope = pt.grad.dot(&d);
        if !(slope < 0.0) {
            push_flag(&mut flags, SolverFlag::SteepestDescentFallback);
            d = &pt.grad * (-c);
            slope = -c * gnorm * gnorm;
        }
        let ed = sub.p.e.apply(&d)?;
        let ad = sub.p.f.residual_direction(&d);
        let step = match armijo_search(
            |tau| sub.increment(&pt, &d, &ed, ad.as_ref(), tau),
            slope,
            cfg.gamma,
            cfg.rho,
            cfg.max_backtracks,
        ) {
            Ok(step) => step,
            Err(Error::LineSearchStalled { .. }) => {
                push_flag(&mut flags, SolverFlag::LineSearchStalled);
                break;
            }
            Err(e) => return Err(e),
        };
        let mut xi = pt.xi.clone();
        xi.axpy(step.tau, &d, 1.0);
        psi += step.decrease;
        pt = sub.point(xi)?;
        gnorm = pt.grad.norm();
        out.iters += 1;
        out.step_sizes.push(step.tau);
        out.psi_decreases.push(step.decrease);
        out.psi_history.push(psi);
        out.residual_history.push(gnorm);
    }

    out.converged = gnorm <= stop_tol;
    out.grad_norm = gnorm;
    out.xi = pt.xi;
    out.flags = flags;
    Ok(out)
}
