//! Problem builders: l1-TV image denoising and the lasso.

use crate::error::{check_dim, Error, Result};
use crate::lagrangian::{Problem, SmoothSpec};
use crate::operators::LinearOperator;
use crate::prox::ProxSpec;
use crate::{Matrix, Vector};

/// Square grayscale image with pixels in `[0, 1]`, stored column-major:
/// pixel `(i, j)` (row `i`, column `j`) lives at index `i + side * j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    side: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(side: usize, pixels: Vec<f64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidParameter("image side must be positive".into()));
        }
        check_dim("Image pixels", side * side, pixels.len())?;
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!(
                "pixel value {p} outside [0, 1]"
            )));
        }
        Ok(Image { side, pixels })
    }

    /// Build from a solver vector, clipping values into `[0, 1]`.
    pub fn from_vector_clipped(side: usize, x: &Vector) -> Result<Self> {
        check_dim("Image pixels", side * side, x.len())?;
        Image::new(side, x.iter().map(|p| p.clamp(0.0, 1.0)).collect())
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Pixel at row `i`, column `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[i + self.side * j]
    }

    pub fn to_vector(&self) -> Vector {
        Vector::from_column_slice(&self.pixels)
    }
}

/// A deterministic piecewise-constant test image: a bright square on a dark
/// background with a mid-gray bar along the left edge.
pub fn synthetic_image(side: usize) -> Result<Image> {
    let mut pixels = vec![0.0; side * side];
    let (lo, hi) = (side / 4, side - side / 4);
    for j in 0..side {
        for i in 0..side {
            let value = if (lo..hi).contains(&i) && (lo..hi).contains(&j) {
                0.8
            } else if j < side / 8 {
                0.5
            } else {
                0.2
            };
            pixels[i + side * j] = value;
        }
    }
    Image::new(side, pixels)
}

/// `min_u α |u - y|_1 + |∇u|_{2,1}` written as `f = 0`, `E = [I; ∇]`,
/// `phi(v, w) = α |v - y|_1 + |w|_{2,1}`.
pub fn build_l1tv(img: &Image, alpha: f64) -> Result<Problem> {
    let n = img.side();
    let pixels = n * n;
    let data = ProxSpec::affine_shifted(ProxSpec::l1(alpha, pixels)?, img.to_vector())?;
    let phi = ProxSpec::block_sum(vec![
        (data, 0..pixels),
        (ProxSpec::group_l21(pixels), pixels..3 * pixels),
    ])?;
    let e = LinearOperator::vstack(vec![
        LinearOperator::Identity(pixels),
        LinearOperator::Grad2DPeriodic { side: n },
    ])?;
    Problem::new(SmoothSpec::Zero { dim: pixels }, e, phi)
}

/// `min_x ½ |A x - b|^2 + α |x|_1`.
pub fn build_lasso(a: Matrix, b: Vector, alpha: f64) -> Result<Problem> {
    let n = a.ncols();
    let f = SmoothSpec::quadratic(a, b)?;
    Problem::new(f, LinearOperator::Identity(n), ProxSpec::l1(alpha, n)?)
}
