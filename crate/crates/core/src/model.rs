//! Physical model of the chiral atom: parameters, control envelopes, the
//! rotating-frame Hamiltonian and the dissipators.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{embed, Operator, Site, SiteOperator, C64};
use crate::units::{mhz, ns, per_ns};

/// Side of the transmission line the probe enters from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Incidence {
    /// Probe travels to the right.
    #[default]
    Left,
    Right,
}

/// Physical rates, frequencies and phases. All angular quantities are in
/// rad/s, phases in rad.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub omega_e: f64,
    pub omega_m: f64,
    /// Emitter relaxation rate Γ.
    pub gamma: f64,
    /// Emitter pure dephasing rate γ_φ.
    pub gamma_phi: f64,
    /// Memory loss rate Γ_m.
    pub gamma_m: f64,
    /// Propagation phase between the emitters (d = λ/4).
    pub kd: f64,
    /// Modulation phase difference φ₁ − φ₂ during the write stage.
    pub phi: f64,
    /// Peak probe Rabi frequency.
    pub omega_p: f64,
    /// Probe detuning ω_e − ω_p.
    pub delta_p: f64,
    /// Offset of the modulation frequency from ω_e − ω_m.
    pub coupling_detuning: f64,
    /// Residual emitter-emitter exchange coupling (assumed cancelled).
    pub g_sigma: f64,
    pub incidence: Incidence,
}

impl Default for SystemParams {
    fn default() -> Self {
        let gamma = mhz(10.0);
        Self {
            omega_e: mhz(5000.0),
            omega_m: mhz(4000.0),
            gamma,
            gamma_phi: mhz(0.1),
            gamma_m: mhz(0.004),
            kd: FRAC_PI_2,
            phi: -FRAC_PI_2,
            omega_p: 0.01 * gamma,
            delta_p: 0.0,
            coupling_detuning: 0.0,
            g_sigma: 0.0,
            incidence: Incidence::Left,
        }
    }
}

/// Probe weaker than this fraction of Γ is in the linear-response regime.
pub const WEAK_PROBE_WARN: f64 = 0.05;
/// Probe above this fraction of Γ is rejected.
pub const WEAK_PROBE_MAX: f64 = 0.2;

impl SystemParams {
    /// Default rates with dephasing and memory loss switched off.
    pub fn ideal() -> Self {
        Self {
            gamma_phi: 0.0,
            gamma_m: 0.0,
            ..Self::default()
        }
    }

    /// Parametric modulation frequency ω_Φ.
    pub fn omega_mod(&self) -> f64 {
        self.omega_e - self.omega_m + self.coupling_detuning
    }

    /// Detuning of the memory term, ω_m − ω_p + ω_Φ. Evaluated as
    /// Δ_p + coupling detuning, which is the same quantity without the
    /// GHz-scale cancellation.
    pub fn memory_detuning(&self) -> f64 {
        self.delta_p + self.coupling_detuning
    }

    /// Total emitter coherence decay rate γ = γ_φ + Γ/2.
    pub fn emitter_decoherence(&self) -> f64 {
        self.gamma_phi + 0.5 * self.gamma
    }

    /// Phase picked up by the probe between the two emitters.
    pub fn drive_phase(&self) -> C64 {
        match self.incidence {
            Incidence::Left => C64::from_polar(1.0, self.kd),
            Incidence::Right => C64::from_polar(1.0, -self.kd),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &'static str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: reason.to_string(),
                })
            }
        };
        check(self.gamma > 0.0, "gamma", "must be positive")?;
        check(self.gamma_phi >= 0.0, "gamma_phi", "must be non-negative")?;
        check(self.gamma_m >= 0.0, "gamma_m", "must be non-negative")?;
        check(self.omega_p > 0.0, "omega_p", "must be positive")?;
        check(
            self.omega_p <= WEAK_PROBE_MAX * self.gamma,
            "omega_p",
            "exceeds 0.2·Gamma; outside the weak-probe regime",
        )?;
        let finite = [
            self.omega_e,
            self.omega_m,
            self.kd,
            self.phi,
            self.delta_p,
            self.coupling_detuning,
            self.g_sigma,
        ];
        check(
            finite.iter().all(|x| x.is_finite()),
            "system",
            "all parameters must be finite",
        )
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.omega_p > WEAK_PROBE_WARN * self.gamma {
            out.push(format!(
                "omega_p = {:.3}·Gamma is above the weak-probe guideline of {WEAK_PROBE_WARN}·Gamma",
                self.omega_p / self.gamma
            ));
        }
        out
    }
}

/// Time profile of the probe Rabi frequency.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeShape {
    #[default]
    Gaussian,
    /// Constant Ω_p, used for steady-state spectra.
    Constant,
}

/// Probe pulse and coupling-envelope controls. Times in s, rates in rad/s,
/// β in 1/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolParams {
    /// Peak effective coupling Rabi frequency Ω_Φ.
    pub omega_phi: f64,
    /// Switching slope β.
    pub beta: f64,
    pub t_off: f64,
    pub t_on: f64,
    /// Modulation phase difference applied for the read stage.
    pub phi_on: f64,
    /// Gaussian probe duration τ_s.
    pub tau_s: f64,
    pub t_center: f64,
    /// Hold the coupling at Ω_Φ for all times.
    pub continuous: bool,
    pub probe: ProbeShape,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self::storage(mhz(6.0), per_ns(0.0085), ns(80.0), ns(1000.0), ns(100.0))
    }
}

impl ProtocolParams {
    /// Continuous coupling with a Gaussian probe.
    pub fn slow_light(omega_phi: f64, tau_s: f64) -> Self {
        Self {
            omega_phi,
            beta: per_ns(0.05),
            t_off: 0.0,
            t_on: 0.0,
            phi_on: -FRAC_PI_2,
            tau_s,
            t_center: 0.0,
            continuous: true,
            probe: ProbeShape::Gaussian,
        }
    }

    /// Storage sequence whose turn-on time gives the requested storage time.
    pub fn storage(omega_phi: f64, beta: f64, t_off: f64, tau_d: f64, tau_s: f64) -> Self {
        Self {
            omega_phi,
            beta,
            t_off,
            t_on: t_off + 5.0 / beta + tau_d,
            phi_on: -FRAC_PI_2,
            tau_s,
            t_center: 0.0,
            continuous: false,
            probe: ProbeShape::Gaussian,
        }
    }

    pub fn with_phi_on(mut self, phi_on: f64) -> Self {
        self.phi_on = phi_on;
        self
    }

    /// τ_d = t_on − t_off − 5/β.
    pub fn storage_time(&self) -> f64 {
        storage_time(self)
    }

    /// Instant at which the modulation phase switches to `phi_on`.
    pub fn t_mid(&self) -> f64 {
        0.5 * (self.t_off + self.t_on)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.omega_phi >= 0.0 && self.omega_phi.is_finite()) {
            return bad("omega_phi", "must be finite and non-negative");
        }
        if !(self.beta > 0.0) {
            return bad("beta", "must be positive");
        }
        if !(self.tau_s > 0.0) {
            return bad("tau_s", "must be positive");
        }
        if !self.continuous && !(self.t_on > self.t_off) {
            return bad("t_on", "must be later than t_off");
        }
        Ok(())
    }
}

/// τ_d = t_on − t_off − 5/β. Negative values mark an invalid storage protocol.
pub fn storage_time(p: &ProtocolParams) -> f64 {
    p.t_on - p.t_off - 5.0 / p.beta
}

/// Probe Rabi frequency Ω_p(t).
pub fn probe_envelope(t: f64, p: &ProtocolParams, sp: &SystemParams) -> f64 {
    match p.probe {
        ProbeShape::Constant => sp.omega_p,
        ProbeShape::Gaussian => {
            let x = (t - p.t_center) / p.tau_s;
            sp.omega_p * (-0.5 * x * x).exp()
        }
    }
}

/// Coupling Rabi frequency Ω_c(t) = (Ω_Φ/2)([1 − tanh β(t−t_off)] + [1 + tanh β(t−t_on)]).
pub fn coupling_envelope(t: f64, p: &ProtocolParams) -> f64 {
    if p.continuous {
        return p.omega_phi;
    }
    // 1 − tanh x = 2/(1 + e^{2x}) and 1 + tanh y = 2/(1 + e^{−2y}), free of cancellation.
    let falling = 2.0 / (1.0 + (2.0 * p.beta * (t - p.t_off)).exp());
    let rising = 2.0 / (1.0 + (-2.0 * p.beta * (t - p.t_on)).exp());
    0.5 * p.omega_phi * (falling + rising)
}

/// Modulation phase difference φ(t): the write phase until the storage
/// midpoint, `phi_on` afterwards.
pub fn modulation_phase(t: f64, p: &ProtocolParams, sp: &SystemParams) -> f64 {
    if p.continuous || t < p.t_mid() {
        sp.phi
    } else {
        p.phi_on
    }
}

/// Effective emitter-memory coupling g_Φ for a given Ω_Φ (Ω_Φ = 2√2 g_Φ).
pub fn coupling_strength(omega_phi: f64) -> f64 {
    omega_phi / (2.0 * SQRT_2)
}

/// Precomputed operator pieces of the Hamiltonian.
#[derive(Clone, Debug)]
pub struct HamiltonianTerms {
    fixed: Operator,
    coupling1: Operator,
    coupling2: Operator,
    drive: Operator,
}

impl HamiltonianTerms {
    pub fn new(sp: &SystemParams) -> Self {
        let n1 = embed(&SiteOperator::number(Site::Emitter1));
        let n2 = embed(&SiteOperator::number(Site::Emitter2));
        let nm = embed(&SiteOperator::number(Site::Memory));
        let s1 = embed(&SiteOperator::lowering(Site::Emitter1));
        let s2 = embed(&SiteOperator::lowering(Site::Emitter2));
        let sm = embed(&SiteOperator::lowering(Site::Memory));

        let exchange = s1.adjoint() * s2;
        let fixed = (n1 + n2) * C64::from(sp.delta_p)
            + nm * C64::from(sp.memory_detuning())
            + (exchange + exchange.adjoint()) * C64::from(sp.g_sigma);
        Self {
            fixed,
            coupling1: s1.adjoint() * sm,
            coupling2: s2.adjoint() * sm,
            drive: s1.adjoint() + s2.adjoint() * sp.drive_phase(),
        }
    }

    /// H for given instantaneous coupling Rabi frequency, modulation phase and
    /// probe Rabi frequency.
    pub fn assemble(&self, coupling_rabi: f64, phase: f64, probe_rabi: f64) -> Operator {
        let g = coupling_strength(coupling_rabi);
        let coupling = self.coupling1 * C64::from_polar(g, phase) + self.coupling2 * C64::from(g);
        let drive = self.drive * C64::from(0.5 * probe_rabi);
        let off_diagonal = coupling + drive;
        self.fixed + off_diagonal + off_diagonal.adjoint()
    }

    pub fn at(&self, t: f64, sp: &SystemParams, p: &ProtocolParams) -> Operator {
        self.assemble(
            coupling_envelope(t, p),
            modulation_phase(t, p, sp),
            probe_envelope(t, p, sp),
        )
    }
}

/// Rotating-frame Hamiltonian H(t).
pub fn build_hamiltonian(t: f64, sp: &SystemParams, p: &ProtocolParams) -> Operator {
    HamiltonianTerms::new(sp).at(t, sp, p)
}

/// A jump operator with the prefactor multiplying
/// D[O]ρ = 2OρO† − ρO†O − O†Oρ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollapseOperator {
    pub op: Operator,
    pub rate: f64,
}

/// (σ₁, Γ/2), (σ₂, Γ/2), (σ₁†σ₁, γ_φ), (σ₂†σ₂, γ_φ), (σ_m, Γ_m/2).
pub fn collapse_operators(sp: &SystemParams) -> Vec<CollapseOperator> {
    let op = |s: SiteOperator, rate: f64| CollapseOperator {
        op: embed(&s),
        rate,
    };
    vec![
        op(SiteOperator::lowering(Site::Emitter1), 0.5 * sp.gamma),
        op(SiteOperator::lowering(Site::Emitter2), 0.5 * sp.gamma),
        op(SiteOperator::number(Site::Emitter1), sp.gamma_phi),
        op(SiteOperator::number(Site::Emitter2), sp.gamma_phi),
        op(SiteOperator::lowering(Site::Memory), 0.5 * sp.gamma_m),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{basis_index, hermiticity_error, max_abs, I};
    use nalgebra::Matrix3;

    #[test]
    fn probe_envelope_shape() {
        let sp = SystemParams::default();
        let p = ProtocolParams::slow_light(mhz(5.0), ns(300.0));
        assert_eq!(probe_envelope(0.0, &p, &sp), sp.omega_p);
        let one_sigma = probe_envelope(p.tau_s, &p, &sp) / sp.omega_p;
        assert!((one_sigma - (-0.5f64).exp()).abs() < 1e-15);
        assert!((one_sigma - 0.6065).abs() < 1e-4);
        assert_eq!(probe_envelope(1.0, &p, &sp), 0.0);
        assert_eq!(probe_envelope(-1.0, &p, &sp), 0.0);

        let cw = ProtocolParams {
            probe: ProbeShape::Constant,
            ..p
        };
        assert_eq!(probe_envelope(123.0, &cw, &sp), sp.omega_p);
    }

    #[test]
    fn coupling_envelope_limits() {
        let p = ProtocolParams::storage(mhz(6.0), per_ns(0.05), ns(80.0), ns(1000.0), ns(100.0));
        assert!(p.beta * (p.t_on - p.t_off) > 20.0);
        assert!((coupling_envelope(-1.0, &p) - p.omega_phi).abs() < 1e-9 * p.omega_phi);
        assert!((coupling_envelope(1.0, &p) - p.omega_phi).abs() < 1e-9 * p.omega_phi);
        assert!(coupling_envelope(p.t_mid(), &p) < 1e-4 * p.omega_phi);
        assert!((coupling_envelope(p.t_off, &p) - 0.5 * p.omega_phi).abs() < 1e-4 * p.omega_phi);
        assert!((coupling_envelope(p.t_on, &p) - 0.5 * p.omega_phi).abs() < 1e-4 * p.omega_phi);

        let cont = ProtocolParams::slow_light(mhz(6.0), ns(100.0));
        assert_eq!(coupling_envelope(p.t_mid(), &cont), cont.omega_phi);
    }

    #[test]
    fn coupling_envelope_bounded_and_continuous() {
        let p = ProtocolParams::storage(mhz(6.0), per_ns(0.2), ns(0.0), ns(20.0), ns(100.0));
        let mut prev = coupling_envelope(-1e-6, &p);
        let dt = 1e-11;
        let max_slope = p.omega_phi * p.beta;
        for k in 1..300_000 {
            let t = -1e-6 + k as f64 * dt;
            let v = coupling_envelope(t, &p);
            assert!(v >= 0.0 && v <= p.omega_phi * (1.0 + 1e-9));
            assert!((v - prev).abs() <= max_slope * dt * 1.0001);
            prev = v;
        }
    }

    #[test]
    fn modulation_phase_switching() {
        let sp = SystemParams::default();
        let p = ProtocolParams::default().with_phi_on(FRAC_PI_2);
        assert_eq!(modulation_phase(p.t_off - 1e-9, &p, &sp), -FRAC_PI_2);
        assert_eq!(modulation_phase(p.t_on + 1e-9, &p, &sp), FRAC_PI_2);
        let cont = ProtocolParams {
            continuous: true,
            ..p
        };
        assert_eq!(modulation_phase(p.t_on + 1e-9, &cont, &sp), -FRAC_PI_2);
    }

    #[test]
    fn storage_time_arithmetic() {
        let p = ProtocolParams {
            t_on: ns(1500.0),
            t_off: ns(80.0),
            beta: per_ns(0.05),
            ..ProtocolParams::default()
        };
        assert!((storage_time(&p) - ns(1320.0)).abs() < 1e-18);
        let fast = ProtocolParams { beta: 1e30, ..p };
        assert!((storage_time(&fast) - ns(1420.0)).abs() < 1e-18);
        let short = ProtocolParams {
            t_on: ns(100.0),
            ..p
        };
        assert!(storage_time(&short) < 0.0);
    }

    #[test]
    fn hamiltonian_zero_when_undriven() {
        let sp = SystemParams {
            delta_p: 0.0,
            ..SystemParams::default()
        };
        let terms = HamiltonianTerms::new(&sp);
        assert_eq!(terms.assemble(0.0, -FRAC_PI_2, 0.0), Operator::zeros());
    }

    #[test]
    fn hamiltonian_coupling_uses_two_root_two() {
        let sp = SystemParams::default();
        let p = ProtocolParams {
            omega_phi: mhz(8.0),
            continuous: true,
            probe: ProbeShape::Gaussian,
            t_center: -1.0,
            ..ProtocolParams::default()
        };
        let h = build_hamiltonian(0.0, &sp, &p);
        let gg1 = basis_index(false, false, true);
        let ge0 = basis_index(false, true, false);
        let eg0 = basis_index(true, false, false);
        let g = mhz(8.0) / (2.0 * SQRT_2);
        assert!((g / mhz(1.0) - 2.8284).abs() < 1e-4);
        // g(e^{iφ}σ₁†σ_m + σ₂†σ_m) with φ = −π/2
        assert!((h[(ge0, gg1)] - C64::from(g)).norm() < 1e-6);
        assert!((h[(eg0, gg1)] - C64::new(0.0, -g)).norm() < 1e-6);
    }

    #[test]
    fn hamiltonian_drive_elements() {
        let sp = SystemParams::default();
        let p = ProtocolParams {
            probe: ProbeShape::Constant,
            ..ProtocolParams::slow_light(0.0, ns(100.0))
        };
        let h = build_hamiltonian(0.0, &sp, &p);
        let ggg = basis_index(false, false, false);
        let eg0 = basis_index(true, false, false);
        let ge0 = basis_index(false, true, false);
        assert!((h[(eg0, ggg)] - C64::from(0.5 * sp.omega_p)).norm() < 1e-9);
        assert!((h[(ge0, ggg)] - I * (0.5 * sp.omega_p)).norm() < 1e-9);

        let right = SystemParams {
            incidence: Incidence::Right,
            ..sp
        };
        let h = build_hamiltonian(0.0, &right, &p);
        assert!((h[(ge0, ggg)] + I * (0.5 * sp.omega_p)).norm() < 1e-9);
    }

    #[test]
    fn hamiltonian_hermitian_over_protocol() {
        let sp = SystemParams {
            delta_p: mhz(1.3),
            g_sigma: mhz(0.2),
            ..SystemParams::default()
        };
        let p = ProtocolParams::default().with_phi_on(FRAC_PI_2);
        let terms = HamiltonianTerms::new(&sp);
        for k in 0..400 {
            let t = -5e-7 + k as f64 * 1e-8;
            let h = terms.at(t, &sp, &p);
            assert!(hermiticity_error(&h) <= 1e-12 * max_abs(&h).max(1.0));
        }
    }

    #[test]
    fn continuous_hamiltonian_only_varies_with_probe() {
        let sp = SystemParams::default();
        let p = ProtocolParams::slow_light(mhz(5.0), ns(100.0));
        let terms = HamiltonianTerms::new(&sp);
        let a = terms.at(-3e-7, &sp, &p);
        let b = terms.at(4e-7, &sp, &p);
        let da = terms.assemble(0.0, 0.0, probe_envelope(-3e-7, &p, &sp));
        let db = terms.assemble(0.0, 0.0, probe_envelope(4e-7, &p, &sp));
        assert!(max_abs(&((a - da) - (b - db))) < 1e-6);
    }

    #[test]
    fn dark_state_in_single_excitation_manifold() {
        let sp = SystemParams::default();
        let p = ProtocolParams {
            probe: ProbeShape::Constant,
            ..ProtocolParams::slow_light(mhz(6.0), ns(100.0))
        };
        let sp = SystemParams {
            omega_p: 1e-300,
            ..sp
        };
        let h = build_hamiltonian(0.0, &sp, &p);
        let idx = [
            basis_index(true, false, false),
            basis_index(false, true, false),
            basis_index(false, false, true),
        ];
        let block = Matrix3::from_fn(|r, c| h[(idx[r], idx[c])]);
        let evs = block.symmetric_eigenvalues();
        let smallest = evs.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
        assert!(smallest < 1e-6 * sp.gamma);
    }

    #[test]
    fn collapse_set() {
        let sp = SystemParams::default();
        let c = collapse_operators(&sp);
        let rates: Vec<f64> = c.iter().map(|c| c.rate).collect();
        assert_eq!(
            rates,
            vec![
                sp.gamma / 2.0,
                sp.gamma / 2.0,
                sp.gamma_phi,
                sp.gamma_phi,
                sp.gamma_m / 2.0
            ]
        );
    }

    #[test]
    fn parameter_guards() {
        assert!(SystemParams::default().validate().is_ok());
        assert!(SystemParams::default().warnings().is_empty());
        let sp = SystemParams {
            gamma_phi: -1.0,
            ..SystemParams::default()
        };
        assert!(matches!(
            sp.validate(),
            Err(Error::InvalidParameter {
                name: "gamma_phi",
                ..
            })
        ));
        let g = SystemParams::default().gamma;
        let loud = SystemParams {
            omega_p: 0.1 * g,
            ..SystemParams::default()
        };
        assert!(loud.validate().is_ok());
        assert_eq!(loud.warnings().len(), 1);
        let too_loud = SystemParams {
            omega_p: 0.3 * g,
            ..SystemParams::default()
        };
        assert!(too_loud.validate().is_err());

        let p = ProtocolParams {
            t_on: ns(10.0),
            ..ProtocolParams::default()
        };
        assert!(p.validate().is_err());
        assert!(ProtocolParams {
            beta: 0.0,
            ..ProtocolParams::default()
        }
        .validate()
        .is_err());
    }
}
