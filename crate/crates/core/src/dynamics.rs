//! The escape-time recurrence `z <- g(z) + c` from `z = 0`.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::{Error, Result};

/// A map `g` driving the recurrence.
pub trait Dynamics<T: Scalar>: Sync {
    fn apply(&self, z: Complex<T>) -> Complex<T>;
}

impl<T: Scalar, D: Dynamics<T> + ?Sized> Dynamics<T> for &D {
    #[inline]
    fn apply(&self, z: Complex<T>) -> Complex<T> {
        (**self).apply(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationParams {
    /// Escape threshold on `|z|`.
    pub tau: f64,
    pub max_iters: usize,
}

impl Default for IterationParams {
    fn default() -> Self {
        Self {
            tau: 2.0,
            max_iters: 20,
        }
    }
}

impl IterationParams {
    pub fn new(tau: f64, max_iters: usize) -> Result<Self> {
        let p = Self { tau, max_iters };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeResult<T> {
    pub escaped: bool,
    /// Counter value when the loop stopped. For an escaped orbit this is the
    /// number of updates minus one, so an escape on the very first update
    /// reports 0. Bounded orbits report `max_iters`.
    pub escape_iter: usize,
    pub final_z: Complex<T>,
}

/// Iterates `z <- g(z) + c` from `z = 0`.
///
/// Mirrors the counter loop `i = -1; while |z| <= tau && i < max_iters
/// { z = g(z) + c; i += 1 }`: at most `max_iters + 1` updates are made and the
/// orbit escapes on the first update with `|z| > tau`. A non-finite `z` counts
/// as escaped on the update that produced it.
pub fn iterate<T: Scalar, D: Dynamics<T> + ?Sized>(
    g: &D,
    c: Complex<T>,
    params: &IterationParams,
) -> EscapeResult<T> {
    let tau = T::from_f64_lossy(params.tau);
    let mut z = Complex::<T>::zero();
    for i in 0..=params.max_iters {
        z = g.apply(z) + c;
        if !(z.re.is_finite() && z.im.is_finite()) || z.norm() > tau {
            return EscapeResult {
                escaped: true,
                escape_iter: i,
                final_z: z,
            };
        }
    }
    EscapeResult {
        escaped: false,
        escape_iter: params.max_iters,
        final_z: z,
    }
}

/// Set-membership indicator: 1 for bounded orbits, 0 for escaped ones.
pub fn indicator<T>(result: &EscapeResult<T>) -> u8 {
    u8::from(!result.escaped)
}
