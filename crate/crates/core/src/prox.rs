//! Proximal calculus for a closed family of convex functions.
//!
//! A [`ProxSpec`] describes a function `phi` in Γ0(R^m). For every spec we can
//! evaluate `phi` itself, `prox_{phi/c}`, the Moreau envelope `phi_c`, one
//! element of the limiting Jacobian of `prox_{phi/c}`, and the prox of the
//! conjugate `prox_{c phi*}` (through Moreau's decomposition, never through
//! an explicit conjugate).
//!
//! Conventions: `prox(z, c) = argmin_u phi(u) + (c/2)|u - z|^2` and
//! `envelope(z, c)` is the optimal value of the same problem.

use std::fmt;
use std::ops::Range;

use crate::error::{check_dim, check_positive, Error, Result};
use crate::{Matrix, Vector};

/// A value in `R ∪ {+∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    /// `self + rhs`, absorbing into +∞.
    pub fn plus(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PosInf,
        }
    }

    pub fn plus_finite(self, rhs: f64) -> ExtReal {
        self.plus(ExtReal::Finite(rhs))
    }

    /// `a * self` for `a > 0`.
    pub fn scale_pos(self, a: f64) -> ExtReal {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(a * v),
            ExtReal::PosInf => ExtReal::PosInf,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => write!(f, "inf"),
        }
    }
}

/// Symbolic description of a proper closed convex function on `R^dim`.
///
/// Build values through the checked constructors (`ProxSpec::l1`, ...) or
/// call [`ProxSpec::validate`] after building variants by hand.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxSpec {
    /// `phi ≡ 0`.
    Zero { dim: usize },
    /// `phi(z) = weight * |z|_1`.
    L1 { weight: f64, dim: usize },
    /// `phi(z) = sum_i sqrt(z_i^2 + z_{i+pairs}^2)` on `R^{2 pairs}`.
    GroupL21 { pairs: usize },
    /// Indicator of the nonpositive orthant.
    IndicatorNonpositive { dim: usize },
    /// `phi(z) = inner(z - shift)`.
    AffineShifted { inner: Box<ProxSpec>, shift: Vector },
    /// `phi(z) = a * inner(alpha z + beta) + b` with `a > 0`, `alpha != 0`.
    Scaled {
        inner: Box<ProxSpec>,
        a: f64,
        alpha: f64,
        beta: Vector,
        b: f64,
    },
    /// `phi(z) = inner(z) + <linear, z> + constant`.
    AffineAdded {
        inner: Box<ProxSpec>,
        linear: Vector,
        constant: f64,
    },
    /// Separable sum over disjoint coordinate blocks covering `0..dim`.
    BlockSum {
        blocks: Vec<(ProxSpec, Range<usize>)>,
        dim: usize,
    },
}

impl ProxSpec {
    pub fn zero(dim: usize) -> Self {
        ProxSpec::Zero { dim }
    }

    pub fn l1(weight: f64, dim: usize) -> Result<Self> {
        let spec = ProxSpec::L1 { weight, dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn group_l21(pairs: usize) -> Self {
        ProxSpec::GroupL21 { pairs }
    }

    pub fn indicator_nonpositive(dim: usize) -> Self {
        ProxSpec::IndicatorNonpositive { dim }
    }

    pub fn affine_shifted(inner: ProxSpec, shift: Vector) -> Result<Self> {
        let spec = ProxSpec::AffineShifted {
            inner: Box::new(inner),
            shift,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn scaled(inner: ProxSpec, a: f64, alpha: f64, beta: Vector, b: f64) -> Result<Self> {
        let spec = ProxSpec::Scaled {
            inner: Box::new(inner),
            a,
            alpha,
            beta,
            b,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn affine_added(inner: ProxSpec, linear: Vector, constant: f64) -> Result<Self> {
        let spec = ProxSpec::AffineAdded {
            inner: Box::new(inner),
            linear,
            constant,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Blocks may be given in any order; they must be disjoint and cover
    /// `0..dim` where `dim` is the largest range end.
    pub fn block_sum(blocks: Vec<(ProxSpec, Range<usize>)>) -> Result<Self> {
        let dim = blocks.iter().map(|(_, r)| r.end).max().unwrap_or(0);
        let spec = ProxSpec::BlockSum { blocks, dim };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks every structural invariant recursively.
    pub fn validate(&self) -> Result<()> {
        match self {
            ProxSpec::Zero { .. }
            | ProxSpec::GroupL21 { .. }
            | ProxSpec::IndicatorNonpositive { .. } => Ok(()),
            ProxSpec::L1 { weight, .. } => check_positive("L1 weight", *weight),
            ProxSpec::AffineShifted { inner, shift } => {
                inner.validate()?;
                check_dim("AffineShifted shift", inner.dim(), shift.len())
            }
            ProxSpec::Scaled {
                inner,
                a,
                alpha,
                beta,
                b,
            } => {
                inner.validate()?;
                check_positive("Scaled a", *a)?;
                if *alpha == 0.0 || !alpha.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "Scaled requires finite alpha != 0 and finite b, got alpha={alpha}, b={b}"
                    )));
                }
                check_dim("Scaled beta", inner.dim(), beta.len())
            }
            ProxSpec::AffineAdded {
                inner,
                linear,
                constant,
            } => {
                inner.validate()?;
                if !constant.is_finite() {
                    return Err(Error::InvalidParameter("AffineAdded constant must be finite".into()));
                }
                check_dim("AffineAdded linear term", inner.dim(), linear.len())
            }
            ProxSpec::BlockSum { blocks, dim } => {
                let mut ranges: Vec<&Range<usize>> = blocks.iter().map(|(_, r)| r).collect();
                ranges.sort_by_key(|r| r.start);
                let mut next = 0;
                for r in ranges {
                    if r.start != next || r.end <= r.start {
                        return Err(Error::InvalidParameter(format!(
                            "BlockSum ranges must be nonempty, disjoint and cover 0..{dim}; \
                             found gap or overlap at {}..{}",
                            r.start, r.end
                        )));
                    }
                    next = r.end;
                }
                if next != *dim {
                    return Err(Error::InvalidParameter(format!(
                        "BlockSum ranges cover 0..{next}, declared dimension is {dim}"
                    )));
                }
                for (spec, r) in blocks {
                    spec.validate()?;
                    check_dim("BlockSum block", r.len(), spec.dim())?;
                }
                Ok(())
            }
        }
    }

    /// Dimension of the space the function lives on.
    pub fn dim(&self) -> usize {
        match self {
            ProxSpec::Zero { dim }
            | ProxSpec::L1 { dim, .. }
            | ProxSpec::IndicatorNonpositive { dim }
            | ProxSpec::BlockSum { dim, .. } => *dim,
            ProxSpec::GroupL21 { pairs } => 2 * pairs,
            ProxSpec::AffineShifted { inner, .. }
            | ProxSpec::Scaled { inner, .. }
            | ProxSpec::AffineAdded { inner, .. } => inner.dim(),
        }
    }

    fn check_input(&self, z: &[f64]) -> Result<()> {
        check_dim("ProxSpec argument", self.dim(), z.len())
    }

    /// `phi(z)`.
    pub fn value(&self, z: &Vector) -> Result<ExtReal> {
        self.check_input(z.as_slice())?;
        Ok(self.value_slice(z.as_slice()))
    }

    /// `prox_{phi/c}(z)`.
    pub fn prox(&self, z: &Vector, c: f64) -> Result<Vector> {
        self.check_input(z.as_slice())?;
        check_positive("c", c)?;
        let mut out = Vector::zeros(z.len());
        self.prox_slice(z.as_slice(), c, out.as_mut_slice());
        Ok(out)
    }

    /// Moreau envelope `phi_c(z)`; always finite.
    pub fn envelope(&self, z: &Vector, c: f64) -> Result<f64> {
        self.check_input(z.as_slice())?;
        check_positive("c", c)?;
        Ok(self.envelope_slice(z.as_slice(), c))
    }

    /// `phi_c(z + dz) - phi_c(z)`, evaluated blockwise so that the result keeps
    /// relative accuracy when `dz` is small.
    pub fn envelope_increment(&self, z: &Vector, dz: &Vector, c: f64) -> Result<f64> {
        self.check_input(z.as_slice())?;
        self.check_input(dz.as_slice())?;
        check_positive("c", c)?;
        Ok(self.increment_slice(z.as_slice(), dz.as_slice(), c))
    }

    /// One element of the limiting Jacobian of `prox_{phi/c}` at `z`.
    ///
    /// On the boundary between smooth pieces the zero element is chosen.
    pub fn jacobian(&self, z: &Vector, c: f64) -> Result<JacobianElement> {
        self.check_input(z.as_slice())?;
        check_positive("c", c)?;
        Ok(self.jacobian_slice(z.as_slice(), c))
    }

    /// `prox_{c phi*}(z) = z - c prox_{phi/c}(z / c)`.
    pub fn conjugate_prox(&self, z: &Vector, c: f64) -> Result<Vector> {
        let p = self.prox(&(z / c), c)?;
        Ok(z - p * c)
    }

    fn value_slice(&self, z: &[f64]) -> ExtReal {
        match self {
            ProxSpec::Zero { .. } => ExtReal::Finite(0.0),
            ProxSpec::L1 { weight, .. } => {
                ExtReal::Finite(weight * z.iter().map(|s| s.abs()).sum::<f64>())
            }
            ProxSpec::GroupL21 { pairs } => {
                let (u, v) = z.split_at(*pairs);
                ExtReal::Finite(u.iter().zip(v).map(|(a, b)| a.hypot(*b)).sum())
            }
            ProxSpec::IndicatorNonpositive { .. } => {
                if z.iter().all(|&s| s <= 0.0) {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
            ProxSpec::AffineShifted { inner, shift } => {
                let u = shifted(z, shift.as_slice(), -1.0);
                inner.value_slice(&u)
            }
            ProxSpec::Scaled {
                inner,
                a,
                alpha,
                beta,
                b,
            } => {
                let u = affine_map(z, *alpha, beta.as_slice());
                inner.value_slice(&u).scale_pos(*a).plus_finite(*b)
            }
            ProxSpec::AffineAdded {
                inner,
                linear,
                constant,
            } => inner
                .value_slice(z)
                .plus_finite(dot(linear.as_slice(), z) + constant),
            ProxSpec::BlockSum { blocks, .. } => blocks
                .iter()
                .fold(ExtReal::Finite(0.0), |acc, (spec, r)| {
                    acc.plus(spec.value_slice(&z[r.clone()]))
                }),
        }
    }

    fn prox_slice(&self, z: &[f64], c: f64, out: &mut [f64]) {
        match self {
            ProxSpec::Zero { .. } => out.copy_from_slice(z),
            ProxSpec::L1 { weight, .. } => {
                let t = weight / c;
                for (o, &s) in out.iter_mut().zip(z) {
                    *o = soft_threshold(s, t);
                }
            }
            ProxSpec::GroupL21 { pairs } => {
                let p = *pairs;
                for i in 0..p {
                    let (u, v) = (z[i], z[i + p]);
                    let r = u.hypot(v);
                    if c * r >= 1.0 {
                        let shrink = 1.0 - 1.0 / (c * r);
                        out[i] = u * shrink;
                        out[i + p] = v * shrink;
                    } else {
                        out[i] = 0.0;
                        out[i + p] = 0.0;
                    }
                }
            }
            ProxSpec::IndicatorNonpositive { .. } => {
                for (o, &s) in out.iter_mut().zip(z) {
                    *o = s.min(0.0);
                }
            }
            ProxSpec::AffineShifted { inner, shift } => {
                let u = shifted(z, shift.as_slice(), -1.0);
                inner.prox_slice(&u, c, out);
                for (o, y) in out.iter_mut().zip(shift.iter()) {
                    *o += y;
                }
            }
            ProxSpec::Scaled {
                inner,
                a,
                alpha,
                beta,
                ..
            } => {
                let u = affine_map(z, *alpha, beta.as_slice());
                inner.prox_slice(&u, c / (a * alpha * alpha), out);
                for (o, be) in out.iter_mut().zip(beta.iter()) {
                    *o = (*o - be) / alpha;
                }
            }
            ProxSpec::AffineAdded { inner, linear, .. } => {
                let u = shifted(z, linear.as_slice(), -1.0 / c);
                inner.prox_slice(&u, c, out);
            }
            ProxSpec::BlockSum { blocks, .. } => {
                for (spec, r) in blocks {
                    spec.prox_slice(&z[r.clone()], c, &mut out[r.clone()]);
                }
            }
        }
    }

    fn envelope_slice(&self, z: &[f64], c: f64) -> f64 {
        match self {
            ProxSpec::Zero { .. } => 0.0,
            ProxSpec::L1 { weight, .. } => z.iter().map(|&s| huber(s, *weight, c)).sum(),
            ProxSpec::GroupL21 { pairs } => {
                let (u, v) = z.split_at(*pairs);
                u.iter()
                    .zip(v)
                    .map(|(a, b)| group_envelope(a.hypot(*b), c))
                    .sum()
            }
            ProxSpec::IndicatorNonpositive { .. } => {
                0.5 * c * z.iter().map(|&s| s.max(0.0).powi(2)).sum::<f64>()
            }
            ProxSpec::AffineShifted { inner, shift } => {
                inner.envelope_slice(&shifted(z, shift.as_slice(), -1.0), c)
            }
            ProxSpec::Scaled {
                inner,
                a,
                alpha,
                beta,
                b,
            } => {
                let u = affine_map(z, *alpha, beta.as_slice());
                a * inner.envelope_slice(&u, c / (a * alpha * alpha)) + b
            }
            ProxSpec::AffineAdded {
                inner,
                linear,
                constant,
            } => {
                let lin = linear.as_slice();
                let u = shifted(z, lin, -1.0 / c);
                inner.envelope_slice(&u, c) + dot(lin, z) - dot(lin, lin) / (2.0 * c) + constant
            }
            ProxSpec::BlockSum { blocks, .. } => blocks
                .iter()
                .map(|(spec, r)| spec.envelope_slice(&z[r.clone()], c))
                .sum(),
        }
    }

    fn increment_slice(&self, z: &[f64], dz: &[f64], c: f64) -> f64 {
        match self {
            ProxSpec::Zero { .. } => 0.0,
            ProxSpec::L1 { weight, .. } => {
                let t = weight / c;
                z.iter()
                    .zip(dz)
                    .map(|(&s, &d)| {
                        let s1 = s + d;
                        if s.abs() <= t && s1.abs() <= t {
                            0.5 * c * d * (2.0 * s + d)
                        } else if s.abs() > t && s1.abs() > t && s.signum() == s1.signum() {
                            weight * s.signum() * d
                        } else {
                            huber(s1, *weight, c) - huber(s, *weight, c)
                        }
                    })
                    .sum()
            }
            ProxSpec::GroupL21 { pairs } => {
                let p = *pairs;
                (0..p)
                    .map(|i| {
                        let (u, v) = (z[i], z[i + p]);
                        let (du, dv) = (dz[i], dz[i + p]);
                        let r = u.hypot(v);
                        let r1 = (u + du).hypot(v + dv);
                        // r1^2 - r^2 without cancellation
                        let q = du * (2.0 * u + du) + dv * (2.0 * v + dv);
                        if c * r <= 1.0 && c * r1 <= 1.0 {
                            0.5 * c * q
                        } else if c * r > 1.0 && c * r1 > 1.0 {
                            q / (r + r1)
                        } else {
                            group_envelope(r1, c) - group_envelope(r, c)
                        }
                    })
                    .sum()
            }
            ProxSpec::IndicatorNonpositive { .. } => z
                .iter()
                .zip(dz)
                .map(|(&s, &d)| {
                    let s1 = s + d;
                    if s <= 0.0 && s1 <= 0.0 {
                        0.0
                    } else if s > 0.0 && s1 > 0.0 {
                        0.5 * c * d * (2.0 * s + d)
                    } else {
                        0.5 * c * (s1.max(0.0).powi(2) - s.max(0.0).powi(2))
                    }
                })
                .sum(),
            ProxSpec::AffineShifted { inner, shift } => {
                inner.increment_slice(&shifted(z, shift.as_slice(), -1.0), dz, c)
            }
            ProxSpec::Scaled {
                inner,
                a,
                alpha,
                beta,
                ..
            } => {
                let u = affine_map(z, *alpha, beta.as_slice());
                let du: Vec<f64> = dz.iter().map(|d| alpha * d).collect();
                a * inner.increment_slice(&u, &du, c / (a * alpha * alpha))
            }
            ProxSpec::AffineAdded { inner, linear, .. } => {
                let lin = linear.as_slice();
                inner.increment_slice(&shifted(z, lin, -1.0 / c), dz, c) + dot(lin, dz)
            }
            ProxSpec::BlockSum { blocks, .. } => blocks
                .iter()
                .map(|(spec, r)| spec.increment_slice(&z[r.clone()], &dz[r.clone()], c))
                .sum(),
        }
    }

    fn jacobian_slice(&self, z: &[f64], c: f64) -> JacobianElement {
        match self {
            ProxSpec::Zero { dim } => JacobianElement::Diagonal(Vector::from_element(*dim, 1.0)),
            ProxSpec::L1 { weight, .. } => {
                let t = weight / c;
                JacobianElement::Diagonal(Vector::from_iterator(
                    z.len(),
                    z.iter().map(|s| if s.abs() > t { 1.0 } else { 0.0 }),
                ))
            }
            ProxSpec::GroupL21 { pairs } => {
                let p = *pairs;
                let blocks = (0..p)
                    .map(|i| {
                        let (u, v) = (z[i], z[i + p]);
                        let r = u.hypot(v);
                        if c * r > 1.0 {
                            let k = 1.0 / (c * r * r * r);
                            [1.0 - k * v * v, k * u * v, 1.0 - k * u * u]
                        } else {
                            [0.0; 3]
                        }
                    })
                    .collect();
                JacobianElement::PairBlockDiagonal { pairs: p, blocks }
            }
            ProxSpec::IndicatorNonpositive { .. } => JacobianElement::Diagonal(
                Vector::from_iterator(z.len(), z.iter().map(|&s| if s < 0.0 { 1.0 } else { 0.0 })),
            ),
            ProxSpec::AffineShifted { inner, shift } => {
                inner.jacobian_slice(&shifted(z, shift.as_slice(), -1.0), c)
            }
            ProxSpec::Scaled {
                inner,
                a,
                alpha,
                beta,
                ..
            } => {
                let u = affine_map(z, *alpha, beta.as_slice());
                inner.jacobian_slice(&u, c / (a * alpha * alpha))
            }
            ProxSpec::AffineAdded { inner, linear, .. } => {
                inner.jacobian_slice(&shifted(z, linear.as_slice(), -1.0 / c), c)
            }
            ProxSpec::BlockSum { blocks, dim } => JacobianElement::BlockCompound {
                blocks: blocks
                    .iter()
                    .map(|(spec, r)| (spec.jacobian_slice(&z[r.clone()], c), r.clone()))
                    .collect(),
                dim: *dim,
            },
        }
    }
}

/// One element `G` of the limiting Jacobian of a prox map, kept in
/// structured form. Every element is symmetric with spectrum in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum JacobianElement {
    Diagonal(Vector),
    /// 2×2 symmetric blocks `[g11, g12, g22]` coupling coordinates `i` and `i + pairs`.
    PairBlockDiagonal { pairs: usize, blocks: Vec<[f64; 3]> },
    BlockCompound {
        blocks: Vec<(JacobianElement, Range<usize>)>,
        dim: usize,
    },
}

impl JacobianElement {
    pub fn dim(&self) -> usize {
        match self {
            JacobianElement::Diagonal(d) => d.len(),
            JacobianElement::PairBlockDiagonal { pairs, .. } => 2 * pairs,
            JacobianElement::BlockCompound { dim, .. } => *dim,
        }
    }

    /// `G v`.
    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        check_dim("JacobianElement::apply", self.dim(), v.len())?;
        let mut out = Vector::zeros(v.len());
        self.apply_slice(v.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// `(I - G) v`.
    pub fn apply_complement(&self, v: &Vector) -> Result<Vector> {
        Ok(v - self.apply(v)?)
    }

    fn apply_slice(&self, v: &[f64], out: &mut [f64]) {
        match self {
            JacobianElement::Diagonal(d) => {
                for ((o, g), x) in out.iter_mut().zip(d.iter()).zip(v) {
                    *o = g * x;
                }
            }
            JacobianElement::PairBlockDiagonal { pairs, blocks } => {
                let p = *pairs;
                for (i, [g11, g12, g22]) in blocks.iter().enumerate() {
                    let (a, b) = (v[i], v[i + p]);
                    out[i] = g11 * a + g12 * b;
                    out[i + p] = g12 * a + g22 * b;
                }
            }
            JacobianElement::BlockCompound { blocks, .. } => {
                for (g, r) in blocks {
                    g.apply_slice(&v[r.clone()], &mut out[r.clone()]);
                }
            }
        }
    }

    /// Materialize `G` as a dense matrix.
    pub fn to_dense(&self) -> Matrix {
        let m = self.dim();
        let mut out = Matrix::zeros(m, m);
        let mut e = vec![0.0; m];
        let mut col = vec![0.0; m];
        for j in 0..m {
            e[j] = 1.0;
            self.apply_slice(&e, &mut col);
            out.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        out
    }
}

fn soft_threshold(s: f64, t: f64) -> f64 {
    (s - t).max((s + t).min(0.0))
}

/// Envelope of `weight |.|` at `s`.
fn huber(s: f64, weight: f64, c: f64) -> f64 {
    let t = weight / c;
    if s.abs() <= t {
        0.5 * c * s * s
    } else {
        weight * s.abs() - 0.5 * weight * t
    }
}

/// Envelope of the Euclidean norm in terms of the radius.
fn group_envelope(r: f64, c: f64) -> f64 {
    if c * r <= 1.0 {
        0.5 * c * r * r
    } else {
        r - 0.5 / c
    }
}

fn shifted(z: &[f64], shift: &[f64], scale: f64) -> Vec<f64> {
    z.iter().zip(shift).map(|(a, b)| a + scale * b).collect()
}

fn affine_map(z: &[f64], alpha: f64, beta: &[f64]) -> Vec<f64> {
    z.iter().zip(beta).map(|(a, b)| alpha * a + b).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn values() {
        let l1 = ProxSpec::l1(2.0, 2).unwrap();
        assert_eq!(l1.value(&v(&[1.0, -3.0])).unwrap(), ExtReal::Finite(8.0));
        let ind = ProxSpec::indicator_nonpositive(2);
        assert_eq!(ind.value(&v(&[-1.0, 0.5])).unwrap(), ExtReal::PosInf);
        assert_eq!(ind.value(&v(&[-1.0, 0.0])).unwrap(), ExtReal::Finite(0.0));
        let g = ProxSpec::group_l21(1);
        assert_eq!(g.value(&v(&[3.0, 4.0])).unwrap(), ExtReal::Finite(5.0));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = ProxSpec::group_l21(2);
        assert!(matches!(
            g.value(&v(&[1.0, 2.0, 3.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(g.prox(&v(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn nonpositive_c_is_rejected() {
        let l1 = ProxSpec::l1(1.0, 1).unwrap();
        assert!(matches!(
            l1.prox(&v(&[1.0]), 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(l1.envelope(&v(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn prox_examples() {
        let l1 = ProxSpec::l1(1.0, 1).unwrap();
        assert_eq!(l1.prox(&v(&[2.5]), 1.0).unwrap()[0], 1.5);
        let g = ProxSpec::group_l21(1);
        let p = g.prox(&v(&[3.0, 4.0]), 1.0).unwrap();
        assert!(close(p[0], 2.4, 1e-15) && close(p[1], 3.2, 1e-15));
        let ind = ProxSpec::indicator_nonpositive(2);
        assert_eq!(ind.prox(&v(&[2.0, -3.0]), 7.0).unwrap(), v(&[0.0, -3.0]));
        let zero = ProxSpec::zero(3);
        let z = v(&[1.0, -2.0, 0.25]);
        assert_eq!(zero.prox(&z, 0.3).unwrap(), z);
    }

    #[test]
    fn envelope_examples() {
        let l1 = ProxSpec::l1(1.0, 1).unwrap();
        assert_eq!(l1.envelope(&v(&[2.0]), 1.0).unwrap(), 1.5);
        assert_eq!(l1.envelope(&v(&[0.5]), 1.0).unwrap(), 0.125);
        assert_eq!(ProxSpec::zero(2).envelope(&v(&[1.0, 2.0]), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn envelope_of_indicator_is_finite_everywhere() {
        let ind = ProxSpec::indicator_nonpositive(2);
        let e = ind.envelope(&v(&[3.0, -1.0]), 2.0).unwrap();
        assert_eq!(e, 9.0);
    }

    #[test]
    fn jacobian_examples() {
        let shifted = ProxSpec::affine_shifted(ProxSpec::l1(1.0, 1).unwrap(), v(&[0.0])).unwrap();
        assert_eq!(
            shifted.jacobian(&v(&[2.5]), 1.0).unwrap(),
            JacobianElement::Diagonal(v(&[1.0]))
        );
        let l1 = ProxSpec::l1(1.0, 1).unwrap();
        assert_eq!(
            l1.jacobian(&v(&[0.3]), 1.0).unwrap(),
            JacobianElement::Diagonal(v(&[0.0]))
        );
        let g = ProxSpec::group_l21(1);
        let dense = g.jacobian(&v(&[3.0, 4.0]), 1.0).unwrap().to_dense();
        let expected = Matrix::from_row_slice(
            2,
            2,
            &[1.0 - 16.0 / 125.0, 12.0 / 125.0, 12.0 / 125.0, 1.0 - 9.0 / 125.0],
        );
        assert!((dense - expected).amax() < 1e-15);
    }

    #[test]
    fn jacobian_ties_pick_zero() {
        let l1 = ProxSpec::l1(1.0, 1).unwrap();
        assert_eq!(
            l1.jacobian(&v(&[0.5]), 2.0).unwrap(),
            JacobianElement::Diagonal(v(&[0.0]))
        );
        let g = ProxSpec::group_l21(1);
        let jac = g.jacobian(&v(&[0.6, 0.8]), 1.0).unwrap();
        assert_eq!(jac.to_dense(), Matrix::zeros(2, 2));
        let ind = ProxSpec::indicator_nonpositive(1);
        assert_eq!(
            ind.jacobian(&v(&[0.0]), 1.0).unwrap(),
            JacobianElement::Diagonal(v(&[0.0]))
        );
    }

    #[test]
    fn conjugate_prox_examples() {
        let l1 = ProxSpec::l1(1.0, 1).unwrap();
        assert!(close(l1.conjugate_prox(&v(&[0.4]), 1.0).unwrap()[0], 0.4, 1e-15));
        assert_eq!(l1.conjugate_prox(&v(&[3.0]), 1.0).unwrap()[0], 1.0);
        let zero = ProxSpec::zero(2);
        assert_eq!(zero.conjugate_prox(&v(&[5.0, -5.0]), 2.0).unwrap(), v(&[0.0, 0.0]));
    }

    #[test]
    fn scaled_prox_follows_composition_rule() {
        // phi(z) = 2 |3 z + 1| + 5, c = 4: minimize 2|3u+1| + 2 (u - z)^2 directly.
        let spec = ProxSpec::scaled(ProxSpec::l1(1.0, 1).unwrap(), 2.0, 3.0, v(&[1.0]), 5.0).unwrap();
        for &z in &[-2.0, -0.4, -0.3, 0.0, 1.7] {
            let p = spec.prox(&v(&[z]), 4.0).unwrap()[0];
            // Objective is piecewise quadratic with kink at u = -1/3.
            let kink = -1.0 / 3.0;
            let candidates = [z - 6.0 / 4.0, z + 6.0 / 4.0, kink];
            let obj = |u: f64| 2.0 * (3.0 * u + 1.0).abs() + 2.0 * (u - z).powi(2);
            // The minimizer is one of the candidates, so the smallest value among them is optimal.
            let best = candidates.iter().fold(f64::INFINITY, |acc, &u| acc.min(obj(u)));
            assert!(obj(p) <= best + 1e-12, "z={z} p={p}");
            let env = spec.envelope(&v(&[z]), 4.0).unwrap();
            assert!(close(env, obj(p) + 5.0, 1e-12));
        }
    }

    #[test]
    fn affine_added_shifts_the_argument() {
        // phi(z) = |z| + 0.5 z + 1: prox_{phi/c}(z) = prox_{|.|/c}(z - 0.5/c).
        let spec = ProxSpec::affine_added(ProxSpec::l1(1.0, 1).unwrap(), v(&[0.5]), 1.0).unwrap();
        let p = spec.prox(&v(&[3.0]), 2.0).unwrap()[0];
        assert_eq!(p, 3.0 - 0.25 - 0.5);
        let env = spec.envelope(&v(&[3.0]), 2.0).unwrap();
        let direct = p.abs() + 0.5 * p + 1.0 + (p - 3.0).powi(2);
        assert!(close(env, direct, 1e-14));
    }

    #[test]
    fn block_sum_validation() {
        let ok = ProxSpec::block_sum(vec![
            (ProxSpec::group_l21(1), 1..3),
            (ProxSpec::l1(1.0, 1).unwrap(), 0..1),
        ]);
        assert!(ok.is_ok());
        assert_eq!(ok.unwrap().dim(), 3);
        let gap = ProxSpec::block_sum(vec![
            (ProxSpec::zero(1), 0..1),
            (ProxSpec::zero(1), 2..3),
        ]);
        assert!(gap.is_err());
        let wrong_dim = ProxSpec::block_sum(vec![(ProxSpec::zero(2), 0..3)]);
        assert!(wrong_dim.is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ProxSpec::l1(0.0, 1).is_err());
        assert!(ProxSpec::scaled(ProxSpec::zero(1), -1.0, 1.0, v(&[0.0]), 0.0).is_err());
        assert!(ProxSpec::scaled(ProxSpec::zero(1), 1.0, 0.0, v(&[0.0]), 0.0).is_err());
        assert!(ProxSpec::affine_shifted(ProxSpec::zero(2), v(&[0.0])).is_err());
    }

    #[test]
    fn increment_matches_difference_of_envelopes() {
        let spec = ProxSpec::block_sum(vec![
            (
                ProxSpec::affine_shifted(ProxSpec::l1(1.5, 2).unwrap(), v(&[0.2, -0.1])).unwrap(),
                0..2,
            ),
            (ProxSpec::group_l21(1), 2..4),
            (ProxSpec::indicator_nonpositive(1), 4..5),
            (
                ProxSpec::scaled(ProxSpec::l1(1.0, 1).unwrap(), 0.5, -2.0, v(&[0.3]), 1.0).unwrap(),
                5..6,
            ),
        ])
        .unwrap();
        let z = v(&[0.9, -0.3, 0.4, 0.2, 0.7, 0.1]);
        for &scale in &[1.0, 0.1, 1e-3] {
            let dz = v(&[0.5, 1.2, -0.3, 0.9, -1.0, 0.6]) * scale;
            let inc = spec.envelope_increment(&z, &dz, 2.0).unwrap();
            let diff = spec.envelope(&(&z + &dz), 2.0).unwrap() - spec.envelope(&z, 2.0).unwrap();
            assert!(close(inc, diff, 1e-13), "scale={scale}: {inc} vs {diff}");
        }
    }

    #[test]
    fn increment_keeps_accuracy_for_tiny_steps() {
        let l1 = ProxSpec::l1(1.0, 1).unwrap();
        let z = v(&[1e3]);
        let dz = v(&[1e-14]);
        let inc = l1.envelope_increment(&z, &dz, 1.0).unwrap();
        assert_eq!(inc, 1e-14);
    }
}
