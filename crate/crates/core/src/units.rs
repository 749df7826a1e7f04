//! Conversions between the boundary units (MHz, ns) and SI (rad/s, s).

use std::f64::consts::TAU;

/// Linear frequency in MHz to angular frequency in rad/s.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

/// Angular frequency in rad/s to linear frequency in MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / (TAU * 1e6)
}

pub fn ns(t: f64) -> f64 {
    t * 1e-9
}

pub fn to_ns(t: f64) -> f64 {
    t * 1e9
}

pub fn per_ns(rate: f64) -> f64 {
    rate * 1e9
}

pub fn to_per_ns(rate: f64) -> f64 {
    rate * 1e-9
}
