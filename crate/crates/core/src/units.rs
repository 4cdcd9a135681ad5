//! Physical constants. Everything in the crate is SI.

use std::f64::consts::PI;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Planck constant (J s).
pub const PLANCK: f64 = 2.0 * PI * HBAR;

/// Mass of a rubidium-87 atom (kg).
pub const RB87_MASS: f64 = 1.443_16e-25;

/// Converts an ordinary frequency (Hz) to an angular frequency (rad/s).
pub fn hz(f: f64) -> f64 {
    2.0 * PI * f
}

/// Energy of `f` hertz, `h f`, in joules.
pub fn hz_energy(f: f64) -> f64 {
    PLANCK * f
}
