//! Lindblad time evolution and steady states.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{
    collapse_operators, CollapseOperator, HamiltonianTerms, ProbeShape, ProtocolParams,
    SystemParams,
};
use crate::ode::{Dopri5, OdeState, Stats};
use crate::quantum::{
    embed, expect, max_abs, DensityMatrix, Operator, Site, SiteOperator, C64, DIM, I, ONE, ZERO,
};

pub use crate::quantum::StateDiagnostics;

impl OdeState for Operator {
    fn zero() -> Self {
        Operator::zeros()
    }

    fn add_scaled(&self, terms: &[(f64, &Self)]) -> Self {
        let mut out = *self;
        for (c, x) in terms {
            for (o, xi) in out.iter_mut().zip(x.iter()) {
                o.re += c * xi.re;
                o.im += c * xi.im;
            }
        }
        out
    }

    fn weighted_sq_error(err: &Self, a: &Self, b: &Self, atol: f64, rtol: f64) -> (f64, usize) {
        let mut acc = 0.0;
        for i in 0..DIM * DIM {
            let (e, x, y) = (err[i], a[i], b[i]);
            let sr = atol + rtol * x.re.abs().max(y.re.abs());
            let si = atol + rtol * x.im.abs().max(y.im.abs());
            acc += (e.re / sr).powi(2) + (e.im / si).powi(2);
        }
        (acc, 2 * DIM * DIM)
    }
}

/// −i[H,ρ] + Σ_k γ_k (2 O_k ρ O_k† − ρ O_k†O_k − O_k†O_k ρ).
pub fn lindblad_rhs(rho: &Operator, h: &Operator, cops: &[CollapseOperator]) -> Operator {
    let mut out = (h * rho - rho * h) * (-I);
    for c in cops {
        let o = &c.op;
        let od = o.adjoint();
        let odo = od * o;
        out += (o * rho * od * C64::from(2.0) - rho * odo - odo * rho) * C64::from(c.rate);
    }
    out
}

/// Sparse jump sandwich `2γ O ρ O†`.
#[derive(Clone, Debug)]
struct Jump {
    weight: f64,
    entries: Vec<(usize, usize, C64)>,
}

/// Generator of the master equation for a fixed parameter set, prepared for
/// repeated evaluation on Hermitian states.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    sp: SystemParams,
    p: ProtocolParams,
    terms: HamiltonianTerms,
    /// Σ γ_k O_k†O_k.
    damping: Operator,
    jumps: Vec<Jump>,
}

impl Liouvillian {
    pub fn new(sp: &SystemParams, p: &ProtocolParams) -> Self {
        let cops = collapse_operators(sp);
        let mut damping = Operator::zeros();
        let mut jumps = Vec::new();
        for c in cops.iter().filter(|c| c.rate != 0.0) {
            damping += c.op.adjoint() * c.op * C64::from(c.rate);
            let entries = (0..DIM)
                .flat_map(|r| (0..DIM).map(move |col| (r, col)))
                .filter_map(|(r, col)| {
                    let v = c.op[(r, col)];
                    (v != ZERO).then_some((r, col, v))
                })
                .collect();
            jumps.push(Jump {
                weight: 2.0 * c.rate,
                entries,
            });
        }
        Self {
            sp: *sp,
            p: *p,
            terms: HamiltonianTerms::new(sp),
            damping,
            jumps,
        }
    }

    pub fn hamiltonian(&self, t: f64) -> Operator {
        self.terms.at(t, &self.sp, &self.p)
    }

    /// dρ/dt at time `t` for a Hermitian `rho`.
    pub fn rhs(&self, t: f64, rho: &Operator) -> Operator {
        let h_eff = self.hamiltonian(t) - self.damping * I;
        // −i(H_eff ρ − ρ H_eff†) and ρ H_eff† = (H_eff ρ)† for Hermitian ρ.
        let x = h_eff * rho;
        let mut out = Operator::zeros();
        for r in 0..DIM {
            for c in 0..DIM {
                let d = x[(r, c)] - x[(c, r)].conj();
                out[(r, c)] = C64::new(d.im, -d.re);
            }
        }
        for j in &self.jumps {
            for &(a, b, v) in &j.entries {
                for &(c, d, w) in &j.entries {
                    out[(a, c)] += v * rho[(b, d)] * w.conj() * j.weight;
                }
            }
        }
        out
    }
}

/// ⟨σ₁⟩, ⟨σ₂⟩, ⟨σ_m⟩.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Coherences {
    pub sigma1: C64,
    pub sigma2: C64,
    pub sigma_m: C64,
}

impl Coherences {
    pub fn of(rho: &DensityMatrix) -> Self {
        thread_local! {
            static OPS: [Operator; 3] = [
                embed(&SiteOperator::lowering(Site::Emitter1)),
                embed(&SiteOperator::lowering(Site::Emitter2)),
                embed(&SiteOperator::lowering(Site::Memory)),
            ];
        }
        OPS.with(|ops| Self {
            sigma1: expect(&ops[0], rho),
            sigma2: expect(&ops[1], rho),
            sigma_m: expect(&ops[2], rho),
        })
    }
}

/// Sampled solution of the master equation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub expectations: Vec<Coherences>,
    pub stats: Stats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    /// Worst-case state diagnostics over all samples.
    pub fn worst_diagnostics(&self) -> StateDiagnostics {
        self.states.iter().map(|s| s.diagnostics()).fold(
            StateDiagnostics {
                hermiticity: 0.0,
                trace_error: 0.0,
                min_eigenvalue: f64::INFINITY,
            },
            |acc, d| StateDiagnostics {
                hermiticity: acc.hermiticity.max(d.hermiticity),
                trace_error: acc.trace_error.max(d.trace_error),
                min_eigenvalue: acc.min_eigenvalue.min(d.min_eigenvalue),
            },
        )
    }
}

/// Uniform sample grid `t0, t0 + dt, …` not exceeding `t1`.
pub fn sample_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let n = ((t1 - t0) / dt + 1e-9).floor() as usize + 1;
    (0..n).map(|k| t0 + k as f64 * dt).collect()
}

/// Default sampling interval min(τ_s/50, 1/(20Γ)).
pub fn default_sample_dt(sp: &SystemParams, p: &ProtocolParams) -> f64 {
    (p.tau_s / 50.0).min(1.0 / (20.0 * sp.gamma))
}

fn hermitize(rho: &mut Operator) {
    for r in 0..DIM {
        rho[(r, r)].im = 0.0;
        for c in (r + 1)..DIM {
            let avg = 0.5 * (rho[(r, c)] + rho[(c, r)].conj());
            rho[(r, c)] = avg;
            rho[(c, r)] = avg.conj();
        }
    }
}

/// Integrate the master equation from `rho0` at `t0` to `t1`.
pub fn evolve(
    rho0: &DensityMatrix,
    t0: f64,
    t1: f64,
    sp: &SystemParams,
    p: &ProtocolParams,
    sample_dt: f64,
) -> Result<Trajectory> {
    evolve_with(&Dopri5::default(), rho0, t0, t1, sp, p, sample_dt)
}

pub fn evolve_with(
    solver: &Dopri5,
    rho0: &DensityMatrix,
    t0: f64,
    t1: f64,
    sp: &SystemParams,
    p: &ProtocolParams,
    sample_dt: f64,
) -> Result<Trajectory> {
    if !(t1 > t0) {
        return Err(Error::InvalidParameter {
            name: "t1",
            reason: "must be later than t0".into(),
        });
    }
    if !(sample_dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sample_dt",
            reason: "must be positive".into(),
        });
    }
    let liouvillian = Liouvillian::new(sp, p);
    let times = sample_grid(t0, t1, sample_dt);
    let (states, stats) = solver.integrate(
        |t, rho: &Operator| liouvillian.rhs(t, rho),
        *rho0.as_operator(),
        t0,
        t1,
        &times,
        hermitize,
    )?;
    let states: Vec<DensityMatrix> = states
        .into_iter()
        .map(DensityMatrix::new_unchecked)
        .collect();
    let expectations = states.iter().map(Coherences::of).collect();
    Ok(Trajectory {
        times,
        states,
        expectations,
        stats,
    })
}

/// Time-independent configuration: constant probe and coupling held at
/// `omega_phi`.
pub fn stationary_protocol(omega_phi: f64) -> ProtocolParams {
    ProtocolParams {
        omega_phi,
        continuous: true,
        probe: ProbeShape::Constant,
        ..ProtocolParams::default()
    }
}

/// Dense 64×64 generator acting on row-major vec(ρ).
pub fn liouvillian_matrix(h: &Operator, cops: &[CollapseOperator]) -> DMatrix<C64> {
    let n = DIM * DIM;
    let mut l = DMatrix::<C64>::zeros(n, n);
    for k in 0..DIM {
        for m in 0..DIM {
            let mut e = Operator::zeros();
            e[(k, m)] = ONE;
            let col = lindblad_rhs(&e, h, cops);
            for i in 0..DIM {
                for j in 0..DIM {
                    l[(DIM * i + j, DIM * k + m)] = col[(i, j)];
                }
            }
        }
    }
    l
}

/// Steady state for continuous coupling at `omega_phi` and constant probe.
pub fn steady_state(sp: &SystemParams, omega_phi: f64) -> Result<DensityMatrix> {
    let p = stationary_protocol(omega_phi);
    let h = HamiltonianTerms::new(sp).at(0.0, sp, &p);
    let cops = collapse_operators(sp);
    let l = liouvillian_matrix(&h, &cops);

    // Replace the first population equation by Tr ρ = 1.
    let n = DIM * DIM;
    let mut a = l.clone();
    for c in 0..n {
        a[(0, c)] = ZERO;
    }
    for i in 0..DIM {
        a[(0, DIM * i + i)] = ONE;
    }
    let mut b = nalgebra::DVector::<C64>::zeros(n);
    b[0] = ONE;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SteadyState("singular Liouvillian".into()))?;

    let residual = (&l * &x).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let scale = sp.gamma.max(max_abs(&h));
    if !(residual <= 1e-10 * scale) {
        return Err(Error::SteadyState(format!(
            "residual {residual:e} exceeds tolerance {:e}",
            1e-10 * scale
        )));
    }

    let mut rho = Operator::from_fn(|i, j| x[DIM * i + j]);
    hermitize(&mut rho);
    let tr = rho.trace();
    DensityMatrix::new(rho / tr)
}
