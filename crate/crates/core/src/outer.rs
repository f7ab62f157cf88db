//! Outer iterations: the proximal method of multipliers together with the
//! baseline solvers it is compared against.

use std::fmt::Write as _;
use std::io;
use std::time::Instant;

use crate::error::{check_dim, check_positive, Error, Result};
use crate::inner::{
    armijo_search, push_flag, run_newton, solve_newton_system, InnerConfig, InnerResult, SolverFlag,
    Subproblem,
};
use crate::lagrangian::{kkt_residual, multiplier_update, IterateState, Problem, SmoothSpec};
use crate::prox::ExtReal;
use crate::{Matrix, Vector};

/// Penalty sequence `c_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CSchedule {
    Constant(f64),
    /// `c_k = min(c0 * factor^k, cap)`.
    Geometric { c0: f64, factor: f64, cap: f64 },
}

impl CSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            CSchedule::Constant(c) => c,
            CSchedule::Geometric { c0, factor, cap } => {
                (c0 * factor.powi(k.min(i32::MAX as usize) as i32)).min(cap)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CSchedule::Constant(c) => check_positive("c0", c),
            CSchedule::Geometric { c0, factor, cap } => {
                check_positive("c0", c0)?;
                check_positive("c_cap", cap)?;
                if !(factor >= 1.0 && factor.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "c_factor must be at least 1, got {factor}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Summable accuracy sequence `eps_k = eps0 * kappa^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsSchedule {
    pub eps0: f64,
    pub kappa: f64,
}

impl EpsSchedule {
    pub fn at(&self, k: usize) -> f64 {
        self.eps0 * self.kappa.powi(k.min(i32::MAX as usize) as i32)
    }

    fn validate(&self) -> Result<()> {
        check_positive("eps0", self.eps0)?;
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa must lie in (0, 1), got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// Settings for [`pmm_solve`] and [`alm_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct OuterConfig {
    pub c_schedule: CSchedule,
    pub eps_schedule: EpsSchedule,
    /// Exponent of the realized-step factor in the acceptance test, 0 or 1.
    pub r: u32,
    pub max_outer: usize,
    pub kkt_tol: f64,
    pub inner: InnerConfig,
    /// Keep every `(x_{k+1}, λ_{k+1})` in the trace.
    pub record_iterates: bool,
}

impl Default for OuterConfig {
    fn default() -> Self {
        OuterConfig {
            c_schedule: CSchedule::Constant(1.0),
            eps_schedule: EpsSchedule {
                eps0: 1e-2,
                kappa: 0.5,
            },
            r: 0,
            max_outer: 200,
            kkt_tol: 1e-8,
            inner: InnerConfig::default(),
            record_iterates: false,
        }
    }
}

impl OuterConfig {
    pub fn validate(&self) -> Result<()> {
        self.c_schedule.validate()?;
        self.eps_schedule.validate()?;
        if self.r > 1 {
            return Err(Error::InvalidParameter(format!("r must be 0 or 1, got {}", self.r)));
        }
        check_positive("kkt_tol", self.kkt_tol)?;
        self.inner.validate()
    }
}

/// Number of re-solves allowed when the realized-step test fails for `r = 1`.
/// Each re-solve targets a tenth of the smaller of the current tolerance and
/// the bound that was missed.
const MAX_TIGHTENINGS: usize = 5;
const TIGHTEN_FACTOR: f64 = 0.1;

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub c: f64,
    pub eps: f64,
    pub objective: ExtReal,
    pub kkt_stat: f64,
    pub kkt_feas: f64,
    pub inner_iters: usize,
    pub inner_grad_norm: f64,
    pub wall_ms: f64,
    /// `|(x_{k+1}, λ_{k+1}) - (x_k, λ_k)|`.
    pub step_norm: f64,
    /// Right-hand side of the acceptance test at the realized step.
    pub criterion_bound: f64,
    pub tightenings: usize,
    pub x: Option<Vector>,
    pub lambda: Option<Vector>,
}

/// Per-iteration records, serializable as CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
    /// Starting point, kept when iterates are recorded.
    pub initial: Option<(Vector, Vector)>,
}

pub const TRACE_HEADER: &str =
    "k,c,eps,objective,kkt_stat,kkt_feas,inner_iters,inner_grad_norm,wall_ms";

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{:.3}",
                r.k,
                r.c,
                r.eps,
                r.objective,
                r.kkt_stat,
                r.kkt_feas,
                r.inner_iters,
                r.inner_grad_norm,
                r.wall_ms
            );
        }
        out
    }

    pub fn write_csv(&self, mut w: impl io::Write) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    InnerStalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub state: IterateState,
    pub trace: ConvergenceTrace,
    pub status: SolveStatus,
    pub flags: Vec<SolverFlag>,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn check_start(p: &Problem, x0: &Vector, lambda0: &Vector) -> Result<()> {
    check_dim("initial x", p.n(), x0.len())?;
    check_dim("initial lambda", p.m(), lambda0.len())
}

#[derive(Clone, Copy, PartialEq)]
enum Method {
    Proximal,
    Multipliers,
}

/// Proximal method of multipliers.
///
/// Iteration `k` minimizes `psi_k(ξ) = L_{c_k}(ξ, λ_k) + |ξ - x_k|^2/(2c_k)`
/// approximately, accepting `x_{k+1}` once
/// `|∇psi_k(x_{k+1})| <= (eps_k/c_k) min(1, |Δ_k|^r)`, where `Δ_k` is the
/// realized primal-dual step, and then sets
/// `λ_{k+1} = λ_k + c_k (E x_{k+1} - prox(E x_{k+1} + λ_k/c_k))`.
/// Stops when both KKT residuals are at most `kkt_tol`.
pub fn pmm_solve(p: &Problem, cfg: &OuterConfig, x0: &Vector, lambda0: &Vector) -> Result<SolveResult> {
    multiplier_loop(p, cfg, x0, lambda0, Method::Proximal)
}

/// Method of multipliers on the same augmented Lagrangian: as [`pmm_solve`]
/// but without the proximal term. When `f` is not strongly convex a ridge of
/// `1e-8 c` is added to the Newton operator and flagged.
pub fn alm_solve(p: &Problem, cfg: &OuterConfig, x0: &Vector, lambda0: &Vector) -> Result<SolveResult> {
    multiplier_loop(p, cfg, x0, lambda0, Method::Multipliers)
}

fn multiplier_loop(
    p: &Problem,
    cfg: &OuterConfig,
    x0: &Vector,
    lambda0: &Vector,
    method: Method,
) -> Result<SolveResult> {
    cfg.validate()?;
    check_start(p, x0, lambda0)?;
    let start = Instant::now();
    let needs_ridge = method == Method::Multipliers && !p.f.is_strongly_convex();

    let mut state = IterateState::new(x0.clone(), lambda0.clone(), cfg.c_schedule.at(0))?;
    let mut trace = ConvergenceTrace {
        rows: Vec::new(),
        initial: cfg.record_iterates.then(|| (x0.clone(), lambda0.clone())),
    };
    let mut flags = Vec::new();

    let (stat, feas) = kkt_residual(p, &state)?;
    if stat <= cfg.kkt_tol && feas <= cfg.kkt_tol {
        return Ok(SolveResult {
            state,
            trace,
            status: SolveStatus::Converged,
            flags,
        });
    }

    for k in 0..cfg.max_outer {
        let c = cfg.c_schedule.at(k);
        let eps = cfg.eps_schedule.at(k);
        state.c = c;
        let base = eps / c;
        let sub = Subproblem {
            p,
            center: (method == Method::Proximal).then_some(&state.x),
            lambda: &state.lambda,
            c,
            ridge: if needs_ridge { 1e-8 * c } else { 0.0 },
        };

        let mut tol = base;
        let mut xi = state.x.clone();
        let mut inner_iters = 0;
        let mut tightenings = 0;
        let mut candidate: Option<(InnerResult, Vector, f64, f64)> = None;
        let (inner, lambda_next, step_norm, bound) = loop {
            let inner = run_newton(&sub, xi, tol, &cfg.inner)?;
            inner_iters += inner.iters;
            for &f in &inner.flags {
                push_flag(&mut flags, f);
            }
            if !inner.converged {
                if let Some(previous) = candidate {
                    push_flag(&mut flags, SolverFlag::CriterionNotMet);
                    break previous;
                }
                return Ok(SolveResult {
                    state,
                    trace,
                    status: SolveStatus::InnerStalled,
                    flags,
                });
            }
            let lambda_next = multiplier_update(p, &state, &inner.xi)?;
            let step_norm =
                ((&inner.xi - &state.x).norm_squared() + (&lambda_next - &state.lambda).norm_squared())
                    .sqrt();
            let bound = base * if cfg.r == 0 { 1.0 } else { step_norm.min(1.0) };
            if inner.grad_norm <= bound {
                break (inner, lambda_next, step_norm, bound);
            }
            if tightenings == MAX_TIGHTENINGS {
                push_flag(&mut flags, SolverFlag::CriterionNotMet);
                break (inner, lambda_next, step_norm, bound);
            }
            tightenings += 1;
            tol = TIGHTEN_FACTOR * if bound > 0.0 { tol.min(bound) } else { tol };
            xi = inner.xi.clone();
            candidate = Some((inner, lambda_next, step_norm, bound));
        };

        state.x = inner.xi;
        state.lambda = lambda_next;
        let (stat, feas) = kkt_residual(p, &state)?;
        trace.rows.push(TraceRow {
            k,
            c,
            eps,
            objective: p.objective(&state.x)?,
            kkt_stat: stat,
            kkt_feas: feas,
            inner_iters,
            inner_grad_norm: inner.grad_norm,
            wall_ms: elapsed_ms(start),
            step_norm,
            criterion_bound: bound,
            tightenings,
            x: cfg.record_iterates.then(|| state.x.clone()),
            lambda: cfg.record_iterates.then(|| state.lambda.clone()),
        });
        if stat <= cfg.kkt_tol && feas <= cfg.kkt_tol {
            return Ok(SolveResult {
                state,
                trace,
                status: SolveStatus::Converged,
                flags,
            });
        }
    }
    Ok(SolveResult {
        state,
        trace,
        status: SolveStatus::MaxIterations,
        flags,
    })
}

/// Settings for [`admm_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub c: f64,
    pub max_iters: usize,
    /// Stop once `max(|E x - v|, c |Eᵀ(v⁺ - v)|) <= tol`.
    pub tol: f64,
    /// Relative residual target of the CG solve in the x-step.
    pub cg_rel_tol: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            c: 1.0,
            max_iters: 10_000,
            tol: 1e-8,
            cg_rel_tol: 1e-12,
        }
    }
}

/// ADMM on the split `min f(x) + phi(v)` subject to `E x = v`:
///
/// ```text
/// x⁺ = argmin_x f(x) + <λ, E x - v> + (c/2)|E x - v|^2     (CG, warm-started)
/// v⁺ = prox_{phi/c}(E x⁺ + λ/c)
/// λ⁺ = λ + c (E x⁺ - v⁺)
/// ```
pub fn admm_solve(
    p: &Problem,
    cfg: &AdmmConfig,
    x0: &Vector,
    v0: &Vector,
    lambda0: &Vector,
) -> Result<SolveResult> {
    check_positive("c", cfg.c)?;
    check_positive("tol", cfg.tol)?;
    check_positive("cg_rel_tol", cfg.cg_rel_tol)?;
    check_start(p, x0, lambda0)?;
    check_dim("initial v", p.m(), v0.len())?;
    let start = Instant::now();
    let c = cfg.c;
    let n = p.n();

    let system = |d: &Vector| -> Result<Vector> {
        let mut out = p.f.hess_apply(d)?;
        out.axpy(c, &p.e.adjoint_apply(&p.e.apply(d)?)?, 1.0);
        Ok(out)
    };
    // Aᵀb, the constant part of the x-step right-hand side
    let atb = -p.f.grad(&Vector::zeros(n))?;

    let mut state = IterateState::new(x0.clone(), lambda0.clone(), c)?;
    let mut v = v0.clone();
    let mut trace = ConvergenceTrace::default();
    let mut flags = Vec::new();

    for k in 0..cfg.max_iters {
        let mut rhs = atb.clone();
        rhs += p.e.adjoint_apply(&(&v * c - &state.lambda))?;
        let defect = &rhs - system(&state.x)?;
        let cg = solve_newton_system(
            system,
            &defect,
            cfg.cg_rel_tol * rhs.norm().max(1.0),
            10 * n.max(1),
        )?;
        if !cg.converged {
            push_flag(&mut flags, SolverFlag::CgNotConverged);
        }
        state.x += &cg.d;

        let ex = p.e.apply(&state.x)?;
        let mut z = ex.clone();
        z.axpy(1.0 / c, &state.lambda, 1.0);
        let v_next = p.phi.prox(&z, c)?;
        let primal = &ex - &v_next;
        state.lambda.axpy(c, &primal, 1.0);
        let dual = c * p.e.adjoint_apply(&(&v_next - &v))?.norm();
        v = v_next;

        let (stat, feas) = kkt_residual(p, &state)?;
        trace.rows.push(TraceRow {
            k,
            c,
            eps: cfg.tol,
            objective: p.objective(&state.x)?,
            kkt_stat: stat,
            kkt_feas: feas,
            inner_iters: cg.iters,
            inner_grad_norm: cg.residual_norm,
            wall_ms: elapsed_ms(start),
            step_norm: primal.norm().max(dual),
            criterion_bound: cfg.tol,
            tightenings: 0,
            x: None,
            lambda: None,
        });
        if primal.norm().max(dual) <= cfg.tol {
            return Ok(SolveResult {
                state,
                trace,
                status: SolveStatus::Converged,
                flags,
            });
        }
    }
    Ok(SolveResult {
        state,
        trace,
        status: SolveStatus::MaxIterations,
        flags,
    })
}

/// Settings for [`fb_newton_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct FbnConfig {
    pub c: f64,
    pub max_iters: usize,
    /// Stop once `|x - prox(x - ∇f(x)/c)| <= tol`.
    pub tol: f64,
    pub gamma: f64,
    pub rho: f64,
    pub max_backtracks: usize,
    /// Upper bound on the regularization `δ_k = min(delta_cap, |R_k|)`.
    pub delta_cap: f64,
}

impl FbnConfig {
    pub fn new(c: f64) -> Self {
        FbnConfig {
            c,
            max_iters: 200,
            tol: 1e-10,
            gamma: 0.1,
            rho: 0.5,
            max_backtracks: 60,
            delta_cap: 1e-2,
        }
    }
}

/// Forward-backward Newton method for `E = I`.
///
/// Solves the fixed-point equation `R(x) = x - prox(x - ∇f(x)/c) = 0` with
/// steps from `(I - G (I - ∇²f/c) + δ I) d = -R(x)` and Armijo backtracking on
/// the forward-backward envelope. Requires `c` above the Lipschitz constant
/// of `∇f`. The returned multiplier is `λ = -∇f(x)`.
pub fn fb_newton_solve(p: &Problem, cfg: &FbnConfig, x0: &Vector) -> Result<SolveResult> {
    if !p.e.is_identity() {
        return Err(Error::Precondition(
            "forward-backward Newton needs E = Identity".into(),
        ));
    }
    check_positive("c", cfg.c)?;
    check_positive("tol", cfg.tol)?;
    check_dim("initial x", p.n(), x0.len())?;
    let lf = p.f.lipschitz_upper();
    if cfg.c <= lf {
        return Err(Error::Precondition(format!(
            "c = {} must exceed the Lipschitz constant {lf} of the smooth part",
            cfg.c
        )));
    }
    let start = Instant::now();
    let c = cfg.c;
    let n = p.n();
    let hess = match &p.f {
        SmoothSpec::Zero { .. } => Matrix::zeros(n, n),
        SmoothSpec::Quadratic { a, .. } => a.tr_mul(a),
    };
    let identity = Matrix::identity(n, n);
    let forward = &identity - &hess / c;

    let eval = |x: &Vector| -> Result<(Vector, Vector, Vector)> {
        let g = p.f.grad(x)?;
        let z = x - &g / c;
        let r = x - p.phi.prox(&z, c)?;
        Ok((g, z, r))
    };

    let mut x = x0.clone();
    let mut trace = ConvergenceTrace::default();
    let mut flags = Vec::new();
    let mut status = SolveStatus::MaxIterations;
    let (mut g, mut z, mut r) = eval(&x)?;

    for k in 0..cfg.max_iters {
        let rnorm = r.norm();
        if rnorm <= cfg.tol {
            status = SolveStatus::Converged;
            break;
        }
        let merit_grad = &r * c - &hess * &r;
        let jac = p.phi.jacobian(&z, c)?.to_dense();
        let delta = cfg.delta_cap.min(rnorm);
        let system = &identity - &jac * &forward + &identity * delta;
        let mut d = match system.lu().solve(&(-&r)) {
            Some(d) if d.iter().all(|v| v.is_finite()) => d,
            _ => {
                push_flag(&mut flags, SolverFlag::SingularSystem);
                -&r
            }
        };
        let mut slope = merit_grad.dot(&d);
        if !(slope < 0.0) {
            push_flag(&mut flags, SolverFlag::SteepestDescentFallback);
            d = -&r;
            slope = merit_grad.dot(&d);
        }
        let hd = &hess * &d;
        let dz = &d - &hd / c;
        let ad = p.f.residual_direction(&d);
        let res = p.f.residual(&x)?;
        let g_hd = g.dot(&hd);
        let hd2 = hd.norm_squared();
        let step = match armijo_search(
            |tau| {
                let mut inc = p.phi.envelope_increment(&z, &(&dz * tau), c)?;
                if let (Some(ad), Some(res)) = (&ad, &res) {
                    inc += tau * ad.dot(res) + 0.5 * tau * tau * ad.norm_squared();
                }
                inc -= (2.0 * tau * g_hd + tau * tau * hd2) / (2.0 * c);
                Ok(inc)
            },
            slope,
            cfg.gamma,
            cfg.rho,
            cfg.max_backtracks,
        ) {
            Ok(step) => step,
            Err(Error::LineSearchStalled { .. }) => {
                push_flag(&mut flags, SolverFlag::LineSearchStalled);
                status = SolveStatus::InnerStalled;
                break;
            }
            Err(e) => return Err(e),
        };
        let x_prev = x.clone();
        x.axpy(step.tau, &d, 1.0);
        (g, z, r) = eval(&x)?;

        let state = IterateState::new(x.clone(), -&g, c)?;
        let (stat, feas) = kkt_residual(p, &state)?;
        trace.rows.push(TraceRow {
            k,
            c,
            eps: cfg.tol,
            objective: p.objective(&x)?,
            kkt_stat: stat,
            kkt_feas: feas,
            inner_iters: step.backtracks,
            inner_grad_norm: (&r * c - &hess * &r).norm(),
            wall_ms: elapsed_ms(start),
            step_norm: (&x - &x_prev).norm(),
            criterion_bound: cfg.tol,
            tightenings: 0,
            x: None,
            lambda: None,
        });
    }
    if status == SolveStatus::MaxIterations && r.norm() <= cfg.tol {
        status = SolveStatus::Converged;
    }

    Ok(SolveResult {
        state: IterateState::new(x, -g, c)?,
        trace,
        status,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::salt_pepper_noise;
    use crate::operators::LinearOperator;
    use crate::problems::{build_l1tv, build_lasso, synthetic_image};
    use crate::prox::ProxSpec;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn identity_problem(b: &[f64], phi: ProxSpec) -> Problem {
        let n = b.len();
        let f = SmoothSpec::quadratic(Matrix::identity(n, n), v(b)).unwrap();
        Problem::new(f, LinearOperator::Identity(n), phi).unwrap()
    }

    fn small_l1tv() -> Problem {
        let img = synthetic_image(8).unwrap();
        build_l1tv(&salt_pepper_noise(&img, 0.2, 3).unwrap(), 1.5).unwrap()
    }

    #[test]
    fn schedules() {
        let c = CSchedule::Geometric {
            c0: 1.0,
            factor: 10.0,
            cap: 500.0,
        };
        assert_eq!([c.at(0), c.at(1), c.at(2), c.at(3)], [1.0, 10.0, 100.0, 500.0]);
        assert_eq!(CSchedule::Constant(3.0).at(7), 3.0);
        let eps = EpsSchedule {
            eps0: 1.0,
            kappa: 0.5,
        };
        assert_eq!(eps.at(3), 0.125);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            OuterConfig {
                r: 2,
                ..OuterConfig::default()
            },
            OuterConfig {
                eps_schedule: EpsSchedule {
                    eps0: 1e-2,
                    kappa: 1.0,
                },
                ..OuterConfig::default()
            },
            OuterConfig {
                c_schedule: CSchedule::Geometric {
                    c0: 1.0,
                    factor: 0.5,
                    cap: 10.0,
                },
                ..OuterConfig::default()
            },
            OuterConfig {
                c_schedule: CSchedule::Constant(0.0),
                ..OuterConfig::default()
            },
        ];
        let p = identity_problem(&[1.0], ProxSpec::zero(1));
        for cfg in bad {
            assert!(pmm_solve(&p, &cfg, &v(&[0.0]), &v(&[0.0])).is_err(), "{cfg:?}");
        }
        let err = pmm_solve(&p, &OuterConfig::default(), &v(&[0.0, 0.0]), &v(&[0.0]));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn smooth_unconstrained_problem_converges_at_once() {
        // an exact inner solve contracts the error by 1/(1 + c)
        let p = identity_problem(&[1.0, -2.0, 0.5], ProxSpec::zero(3));
        let cfg = OuterConfig {
            c_schedule: CSchedule::Constant(1e4),
            eps_schedule: EpsSchedule {
                eps0: 1e-6,
                kappa: 0.5,
            },
            ..OuterConfig::default()
        };
        let res = pmm_solve(&p, &cfg, &Vector::zeros(3), &Vector::zeros(3)).unwrap();
        assert!(res.converged());
        assert!(res.trace.len() <= 3);
        assert!((&res.state.x - v(&[1.0, -2.0, 0.5])).amax() < 1e-9);
        assert_eq!(res.state.lambda, Vector::zeros(3));
    }

    #[test]
    fn rank_one_lasso_matches_reduced_scalar_problem() {
        // With A = [1 1], b = 2, α = 0.5 the objective only depends on
        // s = x1 + x2 once both entries share a sign: ½(s - 2)² + s/2 is
        // minimized at s = 1.5 with value 0.875.
        let p = build_lasso(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[2.0]), 0.5).unwrap();
        let res = pmm_solve(&p, &OuterConfig::default(), &Vector::zeros(2), &Vector::zeros(2)).unwrap();
        assert!(res.converged(), "{:?}", res.status);
        let obj = p.objective(&res.state.x).unwrap().finite().unwrap();
        assert!((obj - 0.875).abs() < 1e-8, "{obj}");
    }

    #[test]
    fn alm_projection_identity_for_nonpositive_constraint() {
        let p = identity_problem(&[1.0, -1.0, 2.0], ProxSpec::indicator_nonpositive(3));
        let cfg = OuterConfig {
            record_iterates: true,
            ..OuterConfig::default()
        };
        let res = alm_solve(&p, &cfg, &Vector::zeros(3), &Vector::zeros(3)).unwrap();
        assert!(res.converged());
        assert!(!res.flags.contains(&SolverFlag::RidgeGuardActive));
        let (_, mut lambda) = res.trace.initial.clone().unwrap();
        for row in &res.trace.rows {
            let x = row.x.as_ref().unwrap();
            let expected = (&lambda + x * row.c).map(|s| s.max(0.0));
            let got = row.lambda.clone().unwrap();
            assert_eq!(got, expected);
            lambda = got;
        }
        assert!((&res.state.x - v(&[0.0, -1.0, 0.0])).amax() < 1e-8);
    }

    #[test]
    fn alm_matches_pmm_on_strongly_convex_lasso() {
        let a = Matrix::from_row_slice(3, 2, &[2.0, 0.5, -1.0, 1.0, 0.3, 1.5]);
        let p = build_lasso(a, v(&[1.0, -0.5, 2.0]), 0.4).unwrap();
        let cfg = OuterConfig::default();
        let x0 = Vector::zeros(2);
        let pmm = pmm_solve(&p, &cfg, &x0, &x0).unwrap();
        let alm = alm_solve(&p, &cfg, &x0, &x0).unwrap();
        assert!(pmm.converged() && alm.converged());
        assert!((&pmm.state.x - &alm.state.x).amax() < 1e-8);
    }

    #[test]
    fn alm_flags_ridge_guard_without_strong_convexity() {
        let p = small_l1tv();
        let cfg = OuterConfig {
            c_schedule: CSchedule::Constant(10.0),
            ..OuterConfig::default()
        };
        let y = match &p.phi {
            ProxSpec::BlockSum { blocks, .. } => match &blocks[0].0 {
                ProxSpec::AffineShifted { shift, .. } => shift.clone(),
                _ => unreachable!(),
            },
            _ => unreachable!(),
        };
        let lambda0 = Vector::zeros(p.m());
        let alm = alm_solve(&p, &cfg, &y, &lambda0).unwrap();
        let pmm = pmm_solve(&p, &cfg, &y, &lambda0).unwrap();
        assert!(alm.flags.contains(&SolverFlag::RidgeGuardActive));
        assert!(alm.converged() && pmm.converged());
        let fa = p.objective(&alm.state.x).unwrap().finite().unwrap();
        let fp = p.objective(&pmm.state.x).unwrap().finite().unwrap();
        assert!((fa - fp).abs() <= 1e-6 * fp.abs());
    }

    #[test]
    fn outer_loop_reports_iteration_limit_and_inner_stall() {
        let p = small_l1tv();
        let x0 = Vector::zeros(p.n());
        let l0 = Vector::zeros(p.m());
        let cfg = OuterConfig {
            max_outer: 2,
            ..OuterConfig::default()
        };
        let res = pmm_solve(&p, &cfg, &x0, &l0).unwrap();
        assert_eq!(res.status, SolveStatus::MaxIterations);
        assert_eq!(res.trace.len(), 2);

        let cfg = OuterConfig {
            inner: InnerConfig {
                max_iters: 1,
                ..InnerConfig::default()
            },
            ..OuterConfig::default()
        };
        let res = pmm_solve(&p, &cfg, &x0, &l0).unwrap();
        assert_eq!(res.status, SolveStatus::InnerStalled);
        assert!(res.flags.contains(&SolverFlag::InnerMaxIterations));
    }

    #[test]
    fn trace_csv_layout() {
        let p = identity_problem(&[1.0], ProxSpec::l1(0.5, 1).unwrap());
        let res = pmm_solve(&p, &OuterConfig::default(), &v(&[0.0]), &v(&[0.0])).unwrap();
        let csv = res.trace.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), res.trace.len() + 1);
        assert!(lines[1].starts_with("0,1,0.01,"));
        assert!(lines.iter().all(|l| l.split(',').count() == 9));
        let mut buf = Vec::new();
        res.trace.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), csv);
    }

    #[test]
    fn admm_examples() {
        let p = identity_problem(&[1.0, -2.0], ProxSpec::zero(2));
        let cfg = AdmmConfig {
            max_iters: 1,
            ..AdmmConfig::default()
        };
        let zero = Vector::zeros(2);
        let res = admm_solve(&p, &cfg, &zero, &zero, &zero).unwrap();
        assert_eq!(res.state.lambda, zero);

        // x-update solves (1 + c) x = b + c v - λ, then v = x exactly
        let x = &res.state.x;
        assert!((x - v(&[0.5, -1.0])).amax() < 1e-12);

        let p = identity_problem(&[2.0], ProxSpec::l1(1.0, 1).unwrap());
        let cfg = AdmmConfig::default();
        let res = admm_solve(&p, &cfg, &v(&[0.0]), &v(&[0.0]), &v(&[0.0])).unwrap();
        assert!(res.converged());
        assert!((res.state.x[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fbn_without_nonsmooth_part_finds_the_unconstrained_minimizer() {
        let p = identity_problem(&[3.0, -1.0], ProxSpec::zero(2));
        let c = 2.0 * p.f.lipschitz_upper();
        let res = fb_newton_solve(&p, &FbnConfig::new(c), &Vector::zeros(2)).unwrap();
        assert!(res.converged());
        assert!((&res.state.x - v(&[3.0, -1.0])).amax() < 1e-10);
        let g = p.f.grad(&res.state.x).unwrap();
        assert_eq!(res.state.lambda, -g);
    }

    #[test]
    fn fbn_scalar_lasso() {
        let p = identity_problem(&[2.0], ProxSpec::l1(1.0, 1).unwrap());
        let c = 2.0 * p.f.lipschitz_upper();
        let res = fb_newton_solve(&p, &FbnConfig::new(c), &v(&[-5.0])).unwrap();
        assert!(res.converged());
        assert!((res.state.x[0] - 1.0).abs() < 1e-9);
        let fbe = crate::lagrangian::forward_backward_envelope(&p, &res.state.x, c).unwrap();
        assert!((fbe - 1.5).abs() < 1e-9);
    }

    #[test]
    fn fbn_preconditions() {
        let p = identity_problem(&[1.0], ProxSpec::zero(1));
        let err = fb_newton_solve(&p, &FbnConfig::new(1.0), &v(&[0.0]));
        assert!(matches!(err, Err(Error::Precondition(_))));
        let err = fb_newton_solve(&small_l1tv(), &FbnConfig::new(10.0), &Vector::zeros(64));
        assert!(matches!(err, Err(Error::Precondition(_))));
    }
}
