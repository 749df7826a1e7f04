//! Input-output relations for the propagating fields and the transmission
//! coefficient.
//!
//! The probe enters from the left with amplitude `a_in = Ω_p/√(2Γ)`. Each
//! emitter radiates into each direction at Γ/2, and the radiated field carries
//! the `−i` of the input-output relation, so
//!
//! ```text
//! a_R = a_in − i√(Γ/2)(⟨σ₁⟩ + ⟨σ₂⟩e^{−ikd})
//! a_L =      − i√(Γ/2)(⟨σ₁⟩ + ⟨σ₂⟩e^{+ikd})
//! ```
//!
//! With this phase the steady-state ratio `a_R/a_in` reproduces the closed
//! form of [`transmission_analytic`].

use serde::{Deserialize, Serialize};

use crate::dynamics::{steady_state, Coherences, Trajectory};
use crate::error::{Error, Result};
use crate::model::{probe_envelope, Incidence, ProtocolParams, SystemParams};
use crate::quantum::{C64, I, ONE};

/// Propagation direction of an output port.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    pub fn opposite(self) -> Self {
        match self {
            Direction::Right => Direction::Left,
            Direction::Left => Direction::Right,
        }
    }

    /// Port that carries the transmitted probe.
    pub fn forward(incidence: Incidence) -> Self {
        match incidence {
            Incidence::Left => Direction::Right,
            Incidence::Right => Direction::Left,
        }
    }
}

/// Sampled mean-field amplitudes in √(photons/s).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FieldRecord {
    pub times: Vec<f64>,
    pub a_in_right: Vec<C64>,
    pub a_out_right: Vec<C64>,
    pub a_out_left: Vec<C64>,
}

impl FieldRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn output(&self, dir: Direction) -> &[C64] {
        match dir {
            Direction::Right => &self.a_out_right,
            Direction::Left => &self.a_out_left,
        }
    }
}

/// Scattered amplitudes into the right- and left-going modes.
pub fn scattered(c: &Coherences, sp: &SystemParams) -> (C64, C64) {
    let k = (0.5 * sp.gamma).sqrt();
    let phase = C64::from_polar(1.0, sp.kd);
    let right = -I * k * (c.sigma1 + c.sigma2 * phase.conj());
    let left = -I * k * (c.sigma1 + c.sigma2 * phase);
    (right, left)
}

/// Input amplitude for a probe Rabi frequency.
pub fn input_amplitude(rabi: f64, sp: &SystemParams) -> f64 {
    rabi / (2.0 * sp.gamma).sqrt()
}

pub fn fields_from_trajectory(
    traj: &Trajectory,
    sp: &SystemParams,
    p: &ProtocolParams,
) -> FieldRecord {
    fields_from_coherences(&traj.times, &traj.expectations, sp, p)
}

pub fn fields_from_coherences(
    times: &[f64],
    coherences: &[Coherences],
    sp: &SystemParams,
    p: &ProtocolParams,
) -> FieldRecord {
    let n = times.len();
    let mut rec = FieldRecord {
        times: times.to_vec(),
        a_in_right: Vec::with_capacity(n),
        a_out_right: Vec::with_capacity(n),
        a_out_left: Vec::with_capacity(n),
    };
    for (&t, c) in times.iter().zip(coherences) {
        let a_in = C64::from(input_amplitude(probe_envelope(t, p, sp), sp));
        let (right, left) = scattered(c, sp);
        let (r, l) = match sp.incidence {
            Incidence::Left => (a_in + right, left),
            Incidence::Right => (right, a_in + left),
        };
        rec.a_in_right.push(a_in);
        rec.a_out_right.push(r);
        rec.a_out_left.push(l);
    }
    rec
}

/// Steady-state transmission coefficient from the master equation.
pub fn transmission_numeric(delta_p: f64, omega_phi: f64, sp: &SystemParams) -> Result<C64> {
    sp.validate()?;
    let sp = SystemParams { delta_p, ..*sp };
    let rho = steady_state(&sp, omega_phi)?;
    let c = Coherences::of(&rho);
    let (right, left) = scattered(&c, &sp);
    let a_in = input_amplitude(sp.omega_p, &sp);
    let forward = match sp.incidence {
        Incidence::Left => right,
        Incidence::Right => left,
    };
    Ok(ONE + forward / a_in)
}

/// Closed-form transmission of the driven Λ system,
/// `1 + iΓ(Δ−iΓ_m/2) / [(Δ−iΓ_m/2)(Δ−iγ) − Ω_Φ²/4]` with `γ = γ_φ + Γ/2`.
pub fn transmission_analytic(
    delta_p: f64,
    omega_phi: f64,
    gamma: f64,
    gamma_phi: f64,
    gamma_m: f64,
) -> Result<C64> {
    let total = gamma_phi + 0.5 * gamma;
    let memory = C64::new(delta_p, -0.5 * gamma_m);
    let denom = memory * C64::new(delta_p, -total) - 0.25 * omega_phi * omega_phi;
    if denom.norm() <= 1e-30 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(ONE + I * gamma * memory / denom)
}
