//! Independent oracles and random instance generators shared by the
//! integration tests.

#![allow(dead_code)]

use proxmm::{Matrix, ProxSpec, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut TestRng, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
}

pub fn random_matrix(rng: &mut TestRng, m: usize, n: usize) -> Matrix {
    Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
}

/// Log-uniform penalty in `[0.1, 10]`.
pub fn random_c(rng: &mut TestRng) -> f64 {
    10f64.powf(rng.gen_range(-1.0..1.0))
}

/// Solution of the lasso `min ½|Ax - b|^2 + α|x|_1` by enumerating sign
/// patterns. Supports whose columns are linearly dependent are skipped: some
/// minimizer always has linearly independent active columns, so the optimal
/// value is still found.
pub fn lasso_oracle(a: &Matrix, b: &Vector, alpha: f64) -> (Vector, f64) {
    let n = a.ncols();
    let objective = |x: &Vector| 0.5 * (a * x - b).norm_squared() + alpha * x.lp_norm(1);
    let mut best: Option<(Vector, f64)> = None;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut signs = vec![0i8; n];
        let mut rest = code;
        for s in signs.iter_mut() {
            *s = (rest % 3) as i8 - 1;
            rest /= 3;
        }
        let support: Vec<usize> = (0..n).filter(|&j| signs[j] != 0).collect();
        let mut x = Vector::zeros(n);
        if !support.is_empty() {
            let a_s = a.select_columns(&support);
            let gram = a_s.tr_mul(&a_s);
            let rank = gram.clone().svd(false, false).rank(1e-10 * gram.norm().max(1.0));
            if rank < support.len() {
                continue;
            }
            let s_vec = Vector::from_iterator(support.len(), support.iter().map(|&j| signs[j] as f64));
            let rhs = a_s.tr_mul(b) - s_vec * alpha;
            let Some(x_s) = gram.lu().solve(&rhs) else { continue };
            if support.iter().zip(x_s.iter()).any(|(&j, &v)| v * signs[j] as f64 <= 0.0) {
                continue;
            }
            for (k, &j) in support.iter().enumerate() {
                x[j] = x_s[k];
            }
        }
        let corr = a.tr_mul(&(a * &x - b));
        let feasible = (0..n)
            .filter(|&j| signs[j] == 0)
            .all(|j| corr[j].abs() <= alpha * (1.0 + 1e-9));
        if !feasible {
            continue;
        }
        let obj = objective(&x);
        if best.as_ref().is_none_or(|(_, o)| obj < *o) {
            best = Some((x, obj));
        }
    }
    best.expect("every lasso has a minimizer with independent active columns")
}

/// Distance from `z` to the nearest point where `prox_{phi/c}` is not
/// differentiable.
pub fn kink_distance(spec: &ProxSpec, z: &[f64], c: f64) -> f64 {
    match spec {
        ProxSpec::Zero { .. } => f64::INFINITY,
        ProxSpec::L1 { weight, .. } => z
            .iter()
            .map(|s| (s.abs() - weight / c).abs())
            .fold(f64::INFINITY, f64::min),
        ProxSpec::GroupL21 { pairs } => (0..*pairs)
            .map(|i| (z[i].hypot(z[i + pairs]) - 1.0 / c).abs())
            .fold(f64::INFINITY, f64::min),
        ProxSpec::IndicatorNonpositive { .. } => {
            z.iter().map(|s| s.abs()).fold(f64::INFINITY, f64::min)
        }
        ProxSpec::AffineShifted { inner, shift } => {
            let u: Vec<f64> = z.iter().zip(shift.iter()).map(|(a, b)| a - b).collect();
            kink_distance(inner, &u, c)
        }
        ProxSpec::Scaled {
            inner,
            a,
            alpha,
            beta,
            ..
        } => {
            let u: Vec<f64> = z.iter().zip(beta.iter()).map(|(s, b)| alpha * s + b).collect();
            kink_distance(inner, &u, c / (a * alpha * alpha)) / alpha.abs()
        }
        ProxSpec::AffineAdded { inner, linear, .. } => {
            let u: Vec<f64> = z.iter().zip(linear.iter()).map(|(s, l)| s - l / c).collect();
            kink_distance(inner, &u, c)
        }
        ProxSpec::BlockSum { blocks, .. } => blocks
            .iter()
            .map(|(b, r)| kink_distance(b, &z[r.clone()], c))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Convex conjugate `phi*(u)` from closed forms; `None` outside its domain
/// (up to a relative slack of 1e-9).
pub fn conjugate_value(spec: &ProxSpec, u: &[f64]) -> Option<f64> {
    let slack = 1e-9;
    match spec {
        ProxSpec::Zero { .. } => u.iter().all(|s| s.abs() <= slack).then_some(0.0),
        ProxSpec::L1 { weight, .. } => u
            .iter()
            .all(|s| s.abs() <= weight * (1.0 + slack))
            .then_some(0.0),
        ProxSpec::GroupL21 { pairs } => (0..*pairs)
            .all(|i| u[i].hypot(u[i + pairs]) <= 1.0 + slack)
            .then_some(0.0),
        ProxSpec::IndicatorNonpositive { .. } => u.iter().all(|&s| s >= -slack).then_some(0.0),
        ProxSpec::AffineShifted { inner, shift } => {
            Some(conjugate_value(inner, u)? + dot(u, shift.as_slice()))
        }
        ProxSpec::Scaled {
            inner,
            a,
            alpha,
            beta,
            b,
        } => {
            let w: Vec<f64> = u.iter().map(|s| s / (a * alpha)).collect();
            Some(a * conjugate_value(inner, &w)? - dot(u, beta.as_slice()) / alpha - b)
        }
        ProxSpec::AffineAdded {
            inner,
            linear,
            constant,
        } => {
            let w: Vec<f64> = u.iter().zip(linear.iter()).map(|(s, l)| s - l).collect();
            Some(conjugate_value(inner, &w)? - constant)
        }
        ProxSpec::BlockSum { blocks, .. } => blocks
            .iter()
            .map(|(b, r)| conjugate_value(b, &u[r.clone()]))
            .sum(),
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Random leaf function on `R^dim` (`dim` even so group norms fit).
pub fn random_leaf(rng: &mut TestRng, dim: usize) -> ProxSpec {
    match rng.gen_range(0..4) {
        0 => ProxSpec::zero(dim),
        1 => ProxSpec::l1(rng.gen_range(0.1..3.0), dim).unwrap(),
        2 => ProxSpec::group_l21(dim / 2),
        _ => ProxSpec::indicator_nonpositive(dim),
    }
}

/// The variant families exercised by the randomized suites.
pub const VARIANTS: [&str; 8] = [
    "Zero",
    "L1",
    "GroupL21",
    "IndicatorNonpositive",
    "AffineShifted",
    "Scaled",
    "AffineAdded",
    "BlockSum",
];

/// Random spec of the given variant family on a random even dimension.
pub fn random_spec(rng: &mut TestRng, variant: &str) -> ProxSpec {
    let dim = 2 * rng.gen_range(1..=4);
    match variant {
        "Zero" => ProxSpec::zero(dim),
        "L1" => ProxSpec::l1(rng.gen_range(0.1..3.0), dim).unwrap(),
        "GroupL21" => ProxSpec::group_l21(dim / 2),
        "IndicatorNonpositive" => ProxSpec::indicator_nonpositive(dim),
        "AffineShifted" => {
            let inner = random_leaf(rng, dim);
            ProxSpec::affine_shifted(inner, random_vector(rng, dim, 2.0)).unwrap()
        }
        "Scaled" => {
            let inner = random_leaf(rng, dim);
            let mut alpha = rng.gen_range(0.3..2.0);
            if rng.gen_bool(0.5) {
                alpha = -alpha;
            }
            ProxSpec::scaled(
                inner,
                rng.gen_range(0.2..3.0),
                alpha,
                random_vector(rng, dim, 1.0),
                rng.gen_range(-1.0..1.0),
            )
            .unwrap()
        }
        "AffineAdded" => {
            let inner = random_leaf(rng, dim);
            ProxSpec::affine_added(inner, random_vector(rng, dim, 1.5), rng.gen_range(-1.0..1.0))
                .unwrap()
        }
        "BlockSum" => {
            let mut blocks = Vec::new();
            let mut start = 0;
            for _ in 0..rng.gen_range(2..=3) {
                let len = 2 * rng.gen_range(1..=2);
                let leaf = if rng.gen_bool(0.3) {
                    ProxSpec::affine_shifted(random_leaf(rng, len), random_vector(rng, len, 1.0))
                        .unwrap()
                } else {
                    random_leaf(rng, len)
                };
                blocks.push((leaf, start..start + len));
                start += len;
            }
            ProxSpec::block_sum(blocks).unwrap()
        }
        other => panic!("unknown variant {other}"),
    }
}

/// Spec of any variant family.
pub fn random_any_spec(rng: &mut TestRng) -> ProxSpec {
    let variant = VARIANTS[rng.gen_range(0..VARIANTS.len())];
    random_spec(rng, variant)
}
