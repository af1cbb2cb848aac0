//! Escape threshold selection from first-pass orbit magnitudes.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Stand-in for non-finite first-pass magnitudes. Always counts as above any
/// threshold the search can reach in practice.
pub const DIVERGED_MAGNITUDE: f64 = 1e30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub tau_init: f64,
    pub growth_factor: f64,
    /// Largest allowed fraction of magnitudes at or above the threshold.
    pub above_ratio: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            tau_init: 1.0,
            growth_factor: 1.1,
            above_ratio: 0.6,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_init.is_finite() && self.tau_init > 0.0) {
            return Err(Error::Config(format!("tau_init must be positive, got {}", self.tau_init)));
        }
        if !(self.growth_factor.is_finite() && self.growth_factor > 1.0) {
            return Err(Error::Config(format!(
                "growth_factor must exceed 1, got {}",
                self.growth_factor
            )));
        }
        if !(self.above_ratio > 0.0 && self.above_ratio < 1.0) {
            return Err(Error::Config(format!(
                "above_ratio must lie in (0, 1), got {}",
                self.above_ratio
            )));
        }
        Ok(())
    }
}

/// Maps a raw `|z|` to a value accepted by [`adjust_threshold`].
pub fn sanitize_magnitude(m: f64) -> f64 {
    if m.is_finite() {
        m.max(0.0)
    } else {
        DIVERGED_MAGNITUDE
    }
}

/// Grows `tau` from `tau_init` by `growth_factor` until the fraction of
/// magnitudes `>= tau` is at most `above_ratio`.
pub fn adjust_threshold(magnitudes: &[f64], config: &ThresholdConfig) -> Result<f64> {
    config.validate()?;
    if magnitudes.is_empty() {
        return Err(Error::Argument("no magnitudes to adjust the threshold on".into()));
    }
    if let Some(bad) = magnitudes.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::Argument(format!(
            "magnitudes must be finite and non-negative, got {bad}"
        )));
    }

    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let above_fraction = |tau: f64| {
        let below = sorted.partition_point(|&m| m < tau);
        (sorted.len() - below) as f64 / n
    };

    let mut tau = config.tau_init;
    while above_fraction(tau) > config.above_ratio {
        tau *= config.growth_factor;
    }
    Ok(tau)
}
