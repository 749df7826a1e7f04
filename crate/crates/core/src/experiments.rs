//! Simulated experiments and their figures of merit: steady-state spectra,
//! slow light, storage and retrieval, bandwidth scans and protocol
//! optimization.
//!
//! Sweep points are independent and run on the rayon pool; result tables are
//! always returned in grid order.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{default_sample_dt, evolve, StateDiagnostics, Trajectory};
use crate::error::{Error, Result};
use crate::fields::{
    fields_from_trajectory, transmission_analytic, transmission_numeric, Direction, FieldRecord,
};
use crate::model::{storage_time, ProtocolParams, SystemParams};
use crate::quantum::{C64, ZERO};

/// Retrieved power at the window end, relative to its peak, above which the
/// window counts as truncated.
pub const TRUNCATION_RATIO: f64 = 1e-4;

/// One point of a transmission spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumRow {
    pub delta_p: f64,
    pub omega_phi: f64,
    pub numeric: C64,
    pub analytic: C64,
}

impl SpectrumRow {
    pub fn deviation(&self) -> f64 {
        (self.numeric - self.analytic).norm()
    }
}

/// Steady-state transmission over `omegas × deltas`, Ω_Φ-major.
pub fn spectrum_scan(
    deltas: &[f64],
    omegas: &[f64],
    sp: &SystemParams,
) -> Result<Vec<SpectrumRow>> {
    if deltas.is_empty() {
        return Err(Error::Empty("detuning grid"));
    }
    if omegas.is_empty() {
        return Err(Error::Empty("coupling grid"));
    }
    sp.validate()?;
    let points: Vec<(f64, f64)> = omegas
        .iter()
        .flat_map(|&w| deltas.iter().map(move |&d| (d, w)))
        .collect();
    points
        .par_iter()
        .map(|&(delta_p, omega_phi)| {
            Ok(SpectrumRow {
                delta_p,
                omega_phi,
                numeric: transmission_numeric(delta_p, omega_phi, sp)?,
                analytic: transmission_analytic(
                    delta_p,
                    omega_phi,
                    sp.gamma,
                    sp.gamma_phi,
                    sp.gamma_m,
                )?,
            })
        })
        .collect()
}

/// Group delay of a slow-light run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DelayResult {
    pub t_d: f64,
    pub omega_phi: f64,
    /// Optical depth implied by this single point, t_d·Ω_Φ²/Γ.
    pub d_fit: f64,
}

/// t_d = DΓ/Ω_Φ².
pub fn delay_law(omega_phi: f64, d: f64, gamma: f64) -> Result<f64> {
    if !(omega_phi.abs() > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega_phi",
            reason: "delay law diverges at zero coupling".into(),
        });
    }
    Ok(d * gamma / (omega_phi * omega_phi))
}

/// Least-squares D in log space: log t_d = log D + log(Γ/Ω_Φ²).
pub fn fit_optical_depth(points: &[DelayResult], gamma: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty("delay table"));
    }
    let mut acc = 0.0;
    for p in points {
        if !(p.t_d > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_d",
                reason: format!("non-positive delay {:e} s cannot enter a log fit", p.t_d),
            });
        }
        acc += (p.t_d * p.omega_phi * p.omega_phi / gamma).ln();
    }
    Ok((acc / points.len() as f64).exp())
}

/// Peak time of sampled non-negative data, refined by a parabola through the
/// discrete maximum and its neighbours. `None` if the maximum sits on an end
/// sample or the data are all zero.
pub fn peak_time(times: &[f64], power: &[f64]) -> Option<f64> {
    let (k, &max) =
        power
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, &f64)>, (i, v)| match best {
                Some((_, b)) if *v <= *b => best,
                _ => Some((i, v)),
            })?;
    if k == 0 || k + 1 >= power.len() || !(max > 0.0) {
        return None;
    }
    let (y0, y1, y2) = (power[k - 1], power[k], power[k + 1]);
    let curvature = y0 - 2.0 * y1 + y2;
    let h = 0.5 * (times[k + 1] - times[k - 1]);
    let shift = if curvature < 0.0 {
        0.5 * (y0 - y2) / curvature
    } else {
        0.0
    };
    Some(times[k] + shift * h)
}

fn powers(a: &[C64]) -> Vec<f64> {
    a.iter().map(|z| z.norm_sqr()).collect()
}

/// Trapezoid rule over the samples with `t ≥ from`.
fn trapz_from(times: &[f64], y: &[f64], from: f64) -> f64 {
    let start = times.partition_point(|&t| t < from);
    times[start..]
        .windows(2)
        .zip(y[start..].windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

fn run_window(
    sp: &SystemParams,
    p: &ProtocolParams,
    t0: f64,
    t1: f64,
) -> Result<(Trajectory, FieldRecord)> {
    let traj = evolve(
        &crate::quantum::DensityMatrix::ground(),
        t0,
        t1,
        sp,
        p,
        default_sample_dt(sp, p),
    )?;
    let rec = fields_from_trajectory(&traj, sp, p);
    Ok((traj, rec))
}

/// Gaussian probe through the atom under continuous coupling Ω_Φ.
pub fn slow_light_run(
    omega_phi: f64,
    tau_s: f64,
    sp: &SystemParams,
) -> Result<(FieldRecord, DelayResult)> {
    sp.validate()?;
    let p = ProtocolParams::slow_light(omega_phi, tau_s);
    p.validate()?;
    let dir = Direction::forward(sp.incidence);
    let t0 = p.t_center - 5.0 * tau_s;
    let mut t1 = p.t_center + 10.0 * tau_s;
    for attempt in 0..2 {
        let (_, rec) = run_window(sp, &p, t0, t1)?;
        if let Some(t_out) = peak_time(&rec.times, &powers(rec.output(dir))) {
            let t_in = peak_time(&rec.times, &powers(&rec.a_in_right))
                .ok_or(Error::PeakNotFound { what: "input" })?;
            let t_d = t_out - t_in;
            let d_fit = t_d * omega_phi * omega_phi / sp.gamma;
            return Ok((
                rec,
                DelayResult {
                    t_d,
                    omega_phi,
                    d_fit,
                },
            ));
        }
        if attempt == 0 {
            t1 += 10.0 * tau_s;
        }
    }
    Err(Error::PeakNotFound {
        what: "transmitted",
    })
}

/// Slow-light delays over a set of couplings plus the fitted optical depth.
pub fn delay_sweep(
    omegas: &[f64],
    tau_s: f64,
    sp: &SystemParams,
) -> Result<(Vec<DelayResult>, f64)> {
    let rows = omegas
        .par_iter()
        .map(|&w| slow_light_run(w, tau_s, sp).map(|(_, d)| d))
        .collect::<Result<Vec<_>>>()?;
    let d = fit_optical_depth(&rows, sp.gamma)?;
    Ok((rows, d))
}

/// How the retrieval shift t' in the fidelity overlap is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    /// Difference of the peak times of the retrieved and input powers.
    #[default]
    Peak,
    /// Shift maximizing the overlap.
    CrossCorrelation,
}

/// Figures of merit of a storage and retrieval sequence.
#[derive(Clone, Debug)]
pub struct StorageResult {
    pub eta: f64,
    pub fidelity: f64,
    pub tau_d: f64,
    pub t_prime: f64,
    /// Total energies over the window, in photons.
    pub energy_in: f64,
    pub energy_right: f64,
    pub energy_left: f64,
    /// Energies emitted after the storage midpoint.
    pub retrieved_right: f64,
    pub retrieved_left: f64,
    pub direction: Direction,
    /// Worst state diagnostics over the run, when requested.
    pub diagnostics: Option<StateDiagnostics>,
    pub field_record: FieldRecord,
}

/// Port that receives the retrieved pulse: the read stage couples the memory
/// to e^{iφ_on}|eg⟩ + |ge⟩, which radiates right with weight 1 − sin φ_on and
/// left with weight 1 + sin φ_on.
pub fn retrieval_direction(phi_on: f64) -> Direction {
    if phi_on.sin() > 0.0 {
        Direction::Left
    } else {
        Direction::Right
    }
}

/// Options of a storage run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StorageOptions {
    pub alignment: Alignment,
    /// Check every sampled state; costs one eigendecomposition per sample.
    pub diagnostics: bool,
}

impl Default for StorageOptions {
    fn default() -> Self {
        Self {
            alignment: Alignment::Peak,
            diagnostics: true,
        }
    }
}

/// Options used inside optimizer and heatmap sweeps.
const SWEEP: StorageOptions = StorageOptions {
    alignment: Alignment::Peak,
    diagnostics: false,
};

/// Full write, hold and read sequence with peak-aligned fidelity.
pub fn storage_run(sp: &SystemParams, p: &ProtocolParams) -> Result<StorageResult> {
    storage_run_with(sp, p, StorageOptions::default())
}

pub fn storage_run_with(
    sp: &SystemParams,
    p: &ProtocolParams,
    opts: StorageOptions,
) -> Result<StorageResult> {
    sp.validate()?;
    p.validate()?;
    if p.continuous {
        return Err(Error::InvalidParameter {
            name: "continuous",
            reason: "storage needs a switched coupling".into(),
        });
    }
    // Roundoff in t_on = t_off + 5/β + τ_d must not reject τ_d = 0.
    let tau_d = storage_time(p);
    if tau_d < -1e-9 * p.t_on.abs().max(1e-9) {
        return Err(Error::InvalidParameter {
            name: "t_on",
            reason: format!("storage time t_on − t_off − 5/β = {tau_d:e} s is negative"),
        });
    }
    let tau_d = tau_d.max(0.0);
    let dir = retrieval_direction(p.phi_on);
    let from = p.t_mid();
    let t0 = p.t_center - 5.0 * p.tau_s;
    let tail = (10.0 * p.tau_s).max(20.0 / p.beta).max(3e-6);
    let mut t1 = p.t_on + tail;
    let mut extended = false;
    loop {
        let (traj, rec) = run_window(sp, p, t0, t1)?;
        let out = powers(rec.output(dir));
        let start = rec.times.partition_point(|&t| t < from);
        let peak = out[start..].iter().cloned().fold(0.0, f64::max);
        let ratio = out.last().copied().unwrap_or(0.0) / peak;
        if peak > 0.0 && ratio > TRUNCATION_RATIO {
            if extended {
                return Err(Error::WindowTruncated { ratio });
            }
            extended = true;
            t1 += tail;
            continue;
        }
        let energy_in = trapz_from(&rec.times, &powers(&rec.a_in_right), f64::NEG_INFINITY);
        if !(energy_in > 0.0) {
            return Err(Error::ZeroEnergy("input"));
        }
        let right = powers(&rec.a_out_right);
        let left = powers(&rec.a_out_left);
        let eta = efficiency(&rec, from, dir)?;
        let (fidelity, t_prime) = fidelity(&rec, from, dir, opts.alignment)?;
        return Ok(StorageResult {
            eta,
            fidelity,
            tau_d,
            t_prime,
            energy_in,
            energy_right: trapz_from(&rec.times, &right, f64::NEG_INFINITY),
            energy_left: trapz_from(&rec.times, &left, f64::NEG_INFINITY),
            retrieved_right: trapz_from(&rec.times, &right, from),
            retrieved_left: trapz_from(&rec.times, &left, from),
            direction: dir,
            diagnostics: opts.diagnostics.then(|| traj.worst_diagnostics()),
            field_record: rec,
        });
    }
}

/// η = ∫_{from} |a_out|² dt / ∫ |a_in|² dt on the selected port.
pub fn efficiency(rec: &FieldRecord, from: f64, dir: Direction) -> Result<f64> {
    let e_in = trapz_from(&rec.times, &powers(&rec.a_in_right), f64::NEG_INFINITY);
    if !(e_in > 0.0) {
        return Err(Error::ZeroEnergy("input"));
    }
    Ok(trapz_from(&rec.times, &powers(rec.output(dir)), from) / e_in)
}

/// Linear interpolation of uniformly or non-uniformly sampled data; zero
/// outside `[times[lo], times.last()]`.
fn interpolate(times: &[f64], values: &[C64], lo: usize, t: f64) -> C64 {
    let n = times.len();
    if lo >= n || t < times[lo] || t > times[n - 1] {
        return ZERO;
    }
    let k = times.partition_point(|&s| s <= t).clamp(lo + 1, n - 1);
    let (ta, tb) = (times[k - 1], times[k]);
    let w = if tb > ta { (t - ta) / (tb - ta) } else { 0.0 };
    values[k - 1] * (1.0 - w) + values[k] * w
}

/// |∫ a_in*(t) a_out(t + t') dt|² with the output restricted to samples at or
/// after index `lo`.
fn overlap(rec: &FieldRecord, out: &[C64], lo: usize, shift: f64) -> f64 {
    let t = &rec.times;
    let f: Vec<C64> = t
        .iter()
        .zip(&rec.a_in_right)
        .map(|(&s, a)| a.conj() * interpolate(t, out, lo, s + shift))
        .collect();
    t.windows(2)
        .zip(f.windows(2))
        .map(|(s, v)| (v[0] + v[1]) * (0.5 * (s[1] - s[0])))
        .sum::<C64>()
        .norm_sqr()
}

/// Normalized overlap of the retrieved pulse (t ≥ `from`) with the input,
/// returning `(F, t')`.
pub fn fidelity(
    rec: &FieldRecord,
    from: f64,
    dir: Direction,
    alignment: Alignment,
) -> Result<(f64, f64)> {
    let t = &rec.times;
    let p_in = powers(&rec.a_in_right);
    let e_in = trapz_from(t, &p_in, f64::NEG_INFINITY);
    if !(e_in > 0.0) {
        return Err(Error::ZeroEnergy("input"));
    }
    let out = rec.output(dir);
    let lo = t.partition_point(|&s| s < from);
    let p_out = powers(out);
    let e_out = trapz_from(t, &p_out, from);
    if !(e_out > 0.0) {
        return Err(Error::ZeroEnergy("retrieved"));
    }
    let t_in = peak_time(t, &p_in).ok_or(Error::PeakNotFound { what: "input" })?;
    let t_out =
        peak_time(&t[lo..], &p_out[lo..]).ok_or(Error::PeakNotFound { what: "retrieved" })?;
    let (shift, num) = match alignment {
        Alignment::Peak => (t_out - t_in, overlap(rec, out, lo, t_out - t_in)),
        Alignment::CrossCorrelation => maximize_overlap(rec, out, lo, t_out - t_in),
    };
    Ok((num / (e_in * e_out), shift))
}

/// Overlap maximum within 200 samples of the peak-aligned shift, as
/// `(shift, overlap)`. Lags stay on the sample grid, where the overlap needs
/// no interpolation; the parabolic vertex through the best three lags gives
/// the sub-sample optimum. Interpolating off-grid would bias the maximum
/// toward whole-sample shifts.
fn maximize_overlap(rec: &FieldRecord, out: &[C64], lo: usize, guess: f64) -> (f64, f64) {
    let t = &rec.times;
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1).max(1) as f64;
    let base = (guess / dt).round();
    let at = |k: i64| overlap(rec, out, lo, (base + k as f64) * dt);
    let span = 200;
    let (mut k_best, mut v_best) = (0, at(0));
    for k in -span..=span {
        let v = at(k);
        if v > v_best {
            (k_best, v_best) = (k, v);
        }
    }
    let (y0, y2) = (at(k_best - 1), at(k_best + 1));
    let curv = y0 - 2.0 * v_best + y2;
    if !(curv < 0.0) {
        return ((base + k_best as f64) * dt, v_best);
    }
    let x = (0.5 * (y0 - y2) / curv).clamp(-0.5, 0.5);
    let v = v_best - 0.25 * (y0 - y2) * x;
    ((base + k_best as f64 + x) * dt, v.max(v_best))
}

/// One row of a bandwidth scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandRow {
    pub delta_p: f64,
    pub eta: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandwidthResult {
    pub rows: Vec<BandRow>,
    /// Width of the contiguous η ≥ 0.5 interval around the best row, rad/s.
    pub bandwidth: f64,
}

/// Storage at fixed controls across probe detunings.
pub fn bandwidth_scan(
    deltas: &[f64],
    sp: &SystemParams,
    p: &ProtocolParams,
) -> Result<BandwidthResult> {
    if deltas.is_empty() {
        return Err(Error::Empty("detuning grid"));
    }
    let rows = deltas
        .par_iter()
        .map(|&d| {
            let r = storage_run(&SystemParams { delta_p: d, ..*sp }, p)?;
            Ok(BandRow {
                delta_p: d,
                eta: r.eta,
                fidelity: r.fidelity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bandwidth = band_width(&rows, 0.5)?;
    Ok(BandwidthResult { rows, bandwidth })
}

/// Width of the contiguous interval with η ≥ `level` containing the best row,
/// with linear interpolation at both crossings.
pub fn band_width(rows: &[BandRow], level: f64) -> Result<f64> {
    let best = rows
        .iter()
        .enumerate()
        .fold(None, |acc: Option<usize>, (i, r)| match acc {
            Some(j) if rows[j].eta >= r.eta => acc,
            _ => Some(i),
        })
        .ok_or(Error::Empty("detuning grid"))?;
    if rows[best].eta < level {
        return Err(Error::BandNotBracketed);
    }
    let cross = |a: &BandRow, b: &BandRow| {
        a.delta_p + (level - a.eta) * (b.delta_p - a.delta_p) / (b.eta - a.eta)
    };
    let mut lo = best;
    while lo > 0 && rows[lo - 1].eta >= level {
        lo -= 1;
    }
    let mut hi = best;
    while hi + 1 < rows.len() && rows[hi + 1].eta >= level {
        hi += 1;
    }
    if lo == 0 || hi + 1 == rows.len() {
        return Err(Error::BandNotBracketed);
    }
    Ok(cross(&rows[hi], &rows[hi + 1]) - cross(&rows[lo - 1], &rows[lo]))
}

/// Storage-time sweep at fixed controls with a single-exponential fit
/// η ≈ A·e^{−κ τ_d}.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayResult {
    pub rows: Vec<(f64, f64, f64)>,
    pub amplitude: f64,
    pub rate: f64,
}

pub fn decay_sweep(tau_ds: &[f64], sp: &SystemParams, p: &ProtocolParams) -> Result<DecayResult> {
    if tau_ds.len() < 2 {
        return Err(Error::Empty("storage-time grid"));
    }
    let rows = tau_ds
        .par_iter()
        .map(|&tau_d| {
            let q = ProtocolParams {
                t_on: p.t_off + 5.0 / p.beta + tau_d,
                ..*p
            };
            let r = storage_run(sp, &q)?;
            Ok((tau_d, r.eta, r.fidelity))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.1.ln()).sum::<f64>() / n;
    let sxy: f64 = rows.iter().map(|r| (r.0 - mx) * (r.1.ln() - my)).sum();
    let sxx: f64 = rows.iter().map(|r| (r.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau_d",
            reason: "storage times must not all coincide".into(),
        });
    }
    let slope = sxy / sxx;
    Ok(DecayResult {
        amplitude: (my - slope * mx).exp(),
        rate: -slope,
        rows,
    })
}

/// Search box and grid sizes for [`optimize_protocol`]. β is searched on a
/// logarithmic axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizeBox {
    pub omega: (f64, f64),
    pub beta: (f64, f64),
    pub t_off: f64,
    pub tau_d: f64,
    pub coarse: usize,
    pub refine: usize,
    pub passes: usize,
    pub zoom: f64,
}

impl OptimizeBox {
    pub fn validate(&self) -> Result<()> {
        let (w0, w1) = self.omega;
        let (b0, b1) = self.beta;
        if !(w0 >= 0.0 && w1 > w0 && b0 > 0.0 && b1 > b0) {
            return Err(Error::Empty("constraint box"));
        }
        if self.coarse < 2 || self.refine < 2 || !(self.zoom > 1.0) || !(self.tau_d >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "optimize",
                reason: "grids need ≥ 2 points per axis, zoom > 1 and τ_d ≥ 0".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizeResult {
    pub tau_s: f64,
    pub omega_phi: f64,
    pub beta: f64,
    pub eta: f64,
    pub fidelity: f64,
    pub evaluations: usize,
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Window of width `width` centred on `c`, shifted to lie inside `[lo, hi]`.
fn zoom_window(c: f64, width: f64, lo: f64, hi: f64) -> (f64, f64) {
    let a = (c - 0.5 * width).max(lo);
    let b = (a + width).min(hi);
    (b - width, b)
}

/// Deterministic coarse-to-fine grid search for the (Ω_Φ, β) maximizing η.
/// Points whose run fails are skipped; ties keep the earlier grid point.
pub fn optimize_protocol(tau_s: f64, sp: &SystemParams, b: &OptimizeBox) -> Result<OptimizeResult> {
    b.validate()?;
    if !(tau_s > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau_s",
            reason: "must be positive".into(),
        });
    }
    let (lb0, lb1) = (b.beta.0.ln(), b.beta.1.ln());
    let mut win_w = b.omega;
    let mut win_b = (lb0, lb1);
    let mut best: Option<OptimizeResult> = None;
    let mut evaluations = 0;
    for pass in 0..=b.passes {
        let n = if pass == 0 { b.coarse } else { b.refine };
        let grid: Vec<(f64, f64)> = axis(win_w.0, win_w.1, n)
            .into_iter()
            .flat_map(|w| {
                axis(win_b.0, win_b.1, n)
                    .into_iter()
                    .map(move |lb| (w, lb.exp()))
            })
            .collect();
        let results: Vec<Option<(f64, f64)>> = grid
            .par_iter()
            .map(|&(w, beta)| {
                let p = ProtocolParams::storage(w, beta, b.t_off, b.tau_d, tau_s);
                storage_run_with(sp, &p, SWEEP)
                    .ok()
                    .map(|r| (r.eta, r.fidelity))
            })
            .collect();
        evaluations += grid.len();
        for (&(w, beta), r) in grid.iter().zip(&results) {
            if let Some((eta, fidelity)) = *r {
                if eta.is_finite() && best.is_none_or(|inc| eta > inc.eta) {
                    best = Some(OptimizeResult {
                        tau_s,
                        omega_phi: w,
                        beta,
                        eta,
                        fidelity,
                        evaluations: 0,
                    });
                }
            }
        }
        let inc = best.ok_or(Error::Empty("feasible protocol set"))?;
        win_w = zoom_window(
            inc.omega_phi,
            (win_w.1 - win_w.0) / b.zoom,
            b.omega.0,
            b.omega.1,
        );
        win_b = zoom_window(inc.beta.ln(), (win_b.1 - win_b.0) / b.zoom, lb0, lb1);
    }
    best.map(|r| OptimizeResult { evaluations, ..r })
        .ok_or(Error::Empty("feasible protocol set"))
}

/// η and F over an (Ω_Φ, β) grid, Ω_Φ-major. Failed runs are reported as NaN.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeatmapRow {
    pub omega_phi: f64,
    pub beta: f64,
    pub eta: f64,
    pub fidelity: f64,
}

pub fn heatmap(
    omegas: &[f64],
    betas: &[f64],
    tau_s: f64,
    t_off: f64,
    tau_d: f64,
    sp: &SystemParams,
) -> Result<Vec<HeatmapRow>> {
    if omegas.is_empty() || betas.is_empty() {
        return Err(Error::Empty("heatmap grid"));
    }
    let grid: Vec<(f64, f64)> = omegas
        .iter()
        .flat_map(|&w| betas.iter().map(move |&b| (w, b)))
        .collect();
    Ok(grid
        .par_iter()
        .map(|&(omega_phi, beta)| {
            let p = ProtocolParams::storage(omega_phi, beta, t_off, tau_d, tau_s);
            let (eta, fidelity) = storage_run_with(sp, &p, SWEEP)
                .map_or((f64::NAN, f64::NAN), |r| (r.eta, r.fidelity));
            HeatmapRow {
                omega_phi,
                beta,
                eta,
                fidelity,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz, ns, per_ns};
    use proptest::prelude::*;

    fn gaussian_record(shift: f64, scale: C64, from: f64) -> FieldRecord {
        // Linear interpolation of a shifted copy errs by ~(dt/τ)²/8.
        let n = 12_000;
        let dt = ns(0.25);
        let times: Vec<f64> = (0..n).map(|k| ns(-500.0) + k as f64 * dt).collect();
        let g = |t: f64| (-0.5 * (t / ns(100.0)).powi(2)).exp();
        let a_in: Vec<C64> = times.iter().map(|&t| C64::from(g(t))).collect();
        let out: Vec<C64> = times
            .iter()
            .map(|&t| {
                if t >= from {
                    scale * g(t - shift)
                } else {
                    ZERO
                }
            })
            .collect();
        FieldRecord {
            times,
            a_in_right: a_in,
            a_out_right: out,
            a_out_left: vec![ZERO; n],
        }
    }

    #[test]
    fn delay_law_arithmetic() {
        let g = mhz(10.0);
        assert!((delay_law(mhz(5.6), 4.0, g).unwrap() - ns(203.0)).abs() < ns(0.5));
        assert!((delay_law(2.0 * g, 4.0, g).unwrap() - 1.0 / g).abs() < 1e-20);
        assert!(delay_law(0.0, 4.0, g).is_err());
    }

    #[test]
    fn log_fit_recovers_exact_depth() {
        let g = mhz(10.0);
        let rows: Vec<DelayResult> = [3.0, 5.0, 8.0]
            .iter()
            .map(|&f| {
                let w = mhz(f);
                DelayResult {
                    t_d: 3.7 * g / (w * w),
                    omega_phi: w,
                    d_fit: 3.7,
                }
            })
            .collect();
        assert!((fit_optical_depth(&rows, g).unwrap() - 3.7).abs() < 1e-12);
        assert!(fit_optical_depth(&[], g).is_err());
    }

    #[test]
    fn parabolic_peak_is_exact_for_parabola() {
        let times: Vec<f64> = (0..11).map(|k| k as f64).collect();
        let y: Vec<f64> = times.iter().map(|t| 10.0 - (t - 4.3) * (t - 4.3)).collect();
        assert!((peak_time(&times, &y).unwrap() - 4.3).abs() < 1e-12);
        let rising: Vec<f64> = times.clone();
        assert_eq!(peak_time(&times, &rising), None);
    }

    #[test]
    fn efficiency_examples() {
        let from = ns(600.0);
        let shifted = gaussian_record(ns(1200.0), C64::new(0.0, 1.0), from);
        assert!((efficiency(&shifted, from, Direction::Right).unwrap() - 1.0).abs() < 1e-6);
        let empty = gaussian_record(0.0, ZERO, from);
        assert_eq!(efficiency(&empty, from, Direction::Right).unwrap(), 0.0);
        let mut silent = empty.clone();
        silent.a_in_right.iter_mut().for_each(|a| *a = ZERO);
        assert!(matches!(
            efficiency(&silent, from, Direction::Right),
            Err(Error::ZeroEnergy(_))
        ));
    }

    #[test]
    fn orthogonal_shape_has_low_fidelity() {
        let mut rec = gaussian_record(ns(1200.0), ONE_C, ns(600.0));
        let tau = ns(100.0);
        for (t, a) in rec.times.iter().zip(rec.a_out_right.iter_mut()) {
            let x = (t - ns(1200.0)) / tau;
            // Same power envelope as the input, with the sign flipped on one half.
            *a = if *t >= ns(600.0) {
                C64::from(x.signum() * (-0.5 * x * x).exp())
            } else {
                ZERO
            };
        }
        let (f, _) = fidelity(&rec, ns(600.0), Direction::Right, Alignment::Peak).unwrap();
        assert!(f < 0.1, "F = {f}");
    }

    const ONE_C: C64 = C64::new(1.0, 0.0);

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn scaled_delayed_copy_has_unit_fidelity(
            delay in 1100.0f64..1400.0,
            re in -2.0f64..2.0,
            im in 0.1f64..2.0,
        ) {
            let rec = gaussian_record(ns(delay), C64::new(re, im), ns(500.0));
            for alignment in [Alignment::Peak, Alignment::CrossCorrelation] {
                let (f, t) = fidelity(&rec, ns(500.0), Direction::Right, alignment).unwrap();
                prop_assert!((f - 1.0).abs() < 1e-6, "F = {}", f);
                prop_assert!((t - ns(delay)).abs() < ns(0.01), "{:?} t = {} ns", alignment, t * 1e9);
            }
        }
    }

    #[test]
    fn band_width_interpolates_crossings() {
        let rows: Vec<BandRow> = [(-2.0, 0.2), (-1.0, 0.6), (0.0, 0.9), (1.0, 0.7), (2.0, 0.3)]
            .iter()
            .map(|&(d, eta)| BandRow {
                delta_p: d,
                eta,
                fidelity: 1.0,
            })
            .collect();
        // Crossings at −1.25 and 1.5.
        assert!((band_width(&rows, 0.5).unwrap() - 2.75).abs() < 1e-12);
        assert!(matches!(
            band_width(&rows[1..], 0.5),
            Err(Error::BandNotBracketed)
        ));
    }

    #[test]
    fn zoom_window_stays_inside() {
        assert_eq!(zoom_window(0.1, 0.5, 0.0, 1.0), (0.0, 0.5));
        assert_eq!(zoom_window(0.9, 0.5, 0.0, 1.0), (0.5, 1.0));
        assert_eq!(zoom_window(0.5, 0.5, 0.0, 1.0), (0.25, 0.75));
    }

    #[test]
    fn retrieval_port_follows_read_phase() {
        use std::f64::consts::FRAC_PI_2;
        assert_eq!(retrieval_direction(FRAC_PI_2), Direction::Left);
        assert_eq!(retrieval_direction(-FRAC_PI_2), Direction::Right);
    }

    #[test]
    fn negative_storage_time_is_rejected() {
        let p = ProtocolParams {
            t_on: ns(100.0),
            ..ProtocolParams::storage(mhz(6.0), per_ns(0.01), ns(80.0), 0.0, ns(100.0))
        };
        assert!(matches!(
            storage_run(&SystemParams::default(), &p),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn spectrum_single_point_and_empty_grid() {
        let sp = SystemParams::default();
        let rows = spectrum_scan(&[0.0], &[mhz(8.0)], &sp).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(spectrum_scan(&[], &[mhz(8.0)], &sp).is_err());
    }

    #[test]
    fn empty_box_is_rejected() {
        let b = OptimizeBox {
            omega: (mhz(5.0), mhz(5.0)),
            beta: (per_ns(0.01), per_ns(0.1)),
            t_off: ns(80.0),
            tau_d: 0.0,
            coarse: 15,
            refine: 15,
            passes: 2,
            zoom: 4.0,
        };
        assert!(matches!(
            optimize_protocol(ns(100.0), &SystemParams::ideal(), &b),
            Err(Error::Empty(_))
        ));
    }
}
