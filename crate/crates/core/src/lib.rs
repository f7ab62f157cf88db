//! Proximal method of multipliers for nonsmooth convex composite problems
//!
//! ```text
//! minimize  f(x) + phi(E x)
//! ```
//!
//! where `f` is smooth and convex and `phi` is a proper closed convex function
//! with a cheap proximal operator, composed with a linear map `E`. The outer loop is a
//! proximal point iteration on the Lagrangian; each subproblem is solved by a
//! semismooth Newton method with Armijo backtracking, using generalized
//! Jacobians of the proximal operator.
//!
//! Baselines for comparison:
//!
//! - `alm_solve`: the method of multipliers on the same augmented Lagrangian
//! - `admm_solve`: alternating direction method of multipliers
//! - `fb_newton_solve`: forward-backward Newton method for `E = I`
//!
//! Module map:
//!
//! - [`prox`]: function specifications with their proximal maps and Jacobian elements
//! - [`operators`]: matrix-free linear operators, including the periodic 2-D gradient
//! - [`lagrangian`]: problem definition and the augmented Lagrangian with its derivatives
//! - [`inner`]: semismooth Newton subproblem solver
//! - [`outer`]: proximal method of multipliers and the baselines
//! - [`problems`]: l1-TV denoising and lasso builders
//! - [`pgm`]: binary PGM images
//! - [`noise`]: seeded salt-and-pepper noise
//! - [`cli`]: config-file driven batch runner

pub mod cli;
pub mod error;
pub mod inner;
pub mod lagrangian;
pub mod noise;
pub mod operators;
pub mod outer;
pub mod pgm;
pub mod problems;
pub mod prox;

pub use error::{Error, Result};
pub use inner::{newton_solve, newton_solve_from, InnerConfig, InnerResult, SolverFlag};
pub use lagrangian::{IterateState, Problem, SmoothSpec};
pub use operators::LinearOperator;
pub use outer::{
    admm_solve, alm_solve, fb_newton_solve, pmm_solve, AdmmConfig, CSchedule, ConvergenceTrace,
    EpsSchedule, FbnConfig, OuterConfig, SolveResult, SolveStatus, TraceRow,
};
pub use problems::{build_l1tv, build_lasso, Image};
pub use prox::{ExtReal, JacobianElement, ProxSpec};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used for small operators and test oracles.
pub type Matrix = nalgebra::DMatrix<f64>;
