use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the network and the dynamics are evaluated in.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    /// Real part beyond which `tanh` rounds to 1 in this type.
    const TANH_SATURATION: f64;

    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const TANH_SATURATION: f64 = 10.0;
}

impl Scalar for f64 {
    const TANH_SATURATION: f64 = 20.0;
}
