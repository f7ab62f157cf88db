//! Seeded salt-and-pepper corruption.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::problems::Image;

/// SplitMix64 stream with a fixed `u64 -> [0, 1)` conversion, so that noisy
/// images are reproducible from the seed alone.
#[derive(Debug, Clone)]
pub struct SplitMix {
    inner: SplitMix64,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        SplitMix {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Replace each pixel independently, with probability `density`, by 0 or 1
/// (equally likely). Pixels are visited in storage order and every pixel
/// consumes one draw, plus a second draw when it is corrupted.
pub fn salt_pepper_noise(img: &Image, density: f64, seed: u64) -> Result<Image> {
    if !(density > 0.0 && density < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "noise density must lie in (0, 1), got {density}"
        )));
    }
    let mut rng = SplitMix::new(seed);
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| {
            if rng.next_f64() < density {
                if rng.next_f64() < 0.5 {
                    0.0
                } else {
                    1.0
                }
            } else {
                p
            }
        })
        .collect();
    Image::new(img.side(), pixels)
}
