//! Physical constants (CODATA 2018).
//!
//! | symbol | value                    | unit  |
//! |--------|--------------------------|-------|
//! | ħ      | 1.054571817 × 10⁻³⁴      | J·s   |
//! | k_B    | 1.380649 × 10⁻²³ (exact) | J/K   |

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Ordinary frequency (Hz) to angular frequency (rad/s).
#[inline]
pub fn hz_to_angular(f: f64) -> f64 {
    TWO_PI * f
}

/// Angular frequency (rad/s) to ordinary frequency (Hz).
#[inline]
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / TWO_PI
}
