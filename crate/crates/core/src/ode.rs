//! Dormand-Prince 5(4) integrator with step-size control and the fourth-order
//! continuous extension, specialised to small fixed-size states.

use crate::error::{Error, Result};

/// A vector-space element the integrator can advance.
pub trait OdeState: Copy {
    fn zero() -> Self;

    /// `self + Σ cᵢ·xᵢ`.
    fn add_scaled(&self, terms: &[(f64, &Self)]) -> Self;

    /// Sum over components of `(errᵢ / (atol + rtol·max(|aᵢ|, |bᵢ|)))²` and the
    /// number of real components.
    fn weighted_sq_error(err: &Self, a: &Self, b: &Self, atol: f64, rtol: f64) -> (f64, usize);
}

impl OdeState for f64 {
    fn zero() -> Self {
        0.0
    }

    fn add_scaled(&self, terms: &[(f64, &Self)]) -> Self {
        terms.iter().fold(*self, |acc, (c, x)| acc + c * **x)
    }

    fn weighted_sq_error(err: &Self, a: &Self, b: &Self, atol: f64, rtol: f64) -> (f64, usize) {
        let sc = atol + rtol * a.abs().max(b.abs());
        ((err / sc).powi(2), 1)
    }
}

impl<const N: usize> OdeState for [f64; N] {
    fn zero() -> Self {
        [0.0; N]
    }

    fn add_scaled(&self, terms: &[(f64, &Self)]) -> Self {
        let mut out = *self;
        for (c, x) in terms {
            for (o, xi) in out.iter_mut().zip(x.iter()) {
                *o += c * xi;
            }
        }
        out
    }

    fn weighted_sq_error(err: &Self, a: &Self, b: &Self, atol: f64, rtol: f64) -> (f64, usize) {
        let mut acc = 0.0;
        for i in 0..N {
            let sc = atol + rtol * a[i].abs().max(b[i].abs());
            acc += (err[i] / sc).powi(2);
        }
        (acc, N)
    }
}

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size; `f64::INFINITY` for none.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

struct Dense<S> {
    r1: S,
    r2: S,
    r3: S,
    r4: S,
    r5: S,
}

impl<S: OdeState> Dense<S> {
    fn eval(&self, theta: f64) -> S {
        let th1 = 1.0 - theta;
        // r1 + θ(r2 + (1−θ)(r3 + θ(r4 + (1−θ) r5)))
        let inner = self.r4.add_scaled(&[(th1, &self.r5)]);
        let inner = self.r3.add_scaled(&[(theta, &inner)]);
        let inner = self.r2.add_scaled(&[(th1, &inner)]);
        self.r1.add_scaled(&[(theta, &inner)])
    }
}

impl Dopri5 {
    /// Integrate `dy/dt = f(t, y)` from `t0` and return `y` at each of the
    /// ascending `samples` (all within `[t0, t1]`). `project` is applied to
    /// every accepted step.
    pub fn integrate<S, F, P>(
        &self,
        mut f: F,
        y0: S,
        t0: f64,
        t1: f64,
        samples: &[f64],
        mut project: P,
    ) -> Result<(Vec<S>, Stats)>
    where
        S: OdeState,
        F: FnMut(f64, &S) -> S,
        P: FnMut(&mut S),
    {
        debug_assert!(samples.windows(2).all(|w| w[0] <= w[1]));
        let mut out = Vec::with_capacity(samples.len());
        let mut next = 0;
        let mut stats = Stats::default();

        while next < samples.len() && samples[next] <= t0 {
            out.push(y0);
            next += 1;
        }
        if t1 <= t0 {
            return Ok((out, stats));
        }

        let span = t1 - t0;
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        stats.evaluations += 1;
        let mut h = self.initial_step(&mut f, t, &y, &k1, span, &mut stats);
        let h_min_rel = 1e-14;
        let mut last_rejected = false;

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::TooManySteps {
                    t,
                    max_steps: self.max_steps,
                });
            }
            h = h.min(self.max_step);
            let mut last = false;
            if t + h >= t1 {
                h = t1 - t;
                last = true;
            }
            if h <= h_min_rel * t.abs().max(span) {
                return Err(Error::StepSizeUnderflow { t, h });
            }

            let y2 = y.add_scaled(&[(h * A21, &k1)]);
            let k2 = f(t + C2 * h, &y2);
            let y3 = y.add_scaled(&[(h * A31, &k1), (h * A32, &k2)]);
            let k3 = f(t + C3 * h, &y3);
            let y4 = y.add_scaled(&[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]);
            let k4 = f(t + C4 * h, &y4);
            let y5 = y.add_scaled(&[
                (h * A51, &k1),
                (h * A52, &k2),
                (h * A53, &k3),
                (h * A54, &k4),
            ]);
            let k5 = f(t + C5 * h, &y5);
            let y6 = y.add_scaled(&[
                (h * A61, &k1),
                (h * A62, &k2),
                (h * A63, &k3),
                (h * A64, &k4),
                (h * A65, &k5),
            ]);
            let k6 = f(t + h, &y6);
            let ynew = y.add_scaled(&[
                (h * A71, &k1),
                (h * A73, &k3),
                (h * A74, &k4),
                (h * A75, &k5),
                (h * A76, &k6),
            ]);
            let k7 = f(t + h, &ynew);
            stats.evaluations += 6;

            let err = S::zero().add_scaled(&[
                (h * E1, &k1),
                (h * E3, &k3),
                (h * E4, &k4),
                (h * E5, &k5),
                (h * E6, &k6),
                (h * E7, &k7),
            ]);
            let (sq, n) = S::weighted_sq_error(&err, &y, &ynew, self.atol, self.rtol);
            let err_norm = (sq / n as f64).sqrt();

            if err_norm <= 1.0 {
                stats.accepted += 1;
                let t_new = t + h;

                // Dense output coefficients.
                let ydiff = ynew.add_scaled(&[(-1.0, &y)]);
                let bspl = S::zero().add_scaled(&[(h, &k1), (-1.0, &ydiff)]);
                let r4 = ydiff.add_scaled(&[(-h, &k7), (-1.0, &bspl)]);
                let r5 = S::zero().add_scaled(&[
                    (h * D1, &k1),
                    (h * D3, &k3),
                    (h * D4, &k4),
                    (h * D5, &k5),
                    (h * D6, &k6),
                    (h * D7, &k7),
                ]);
                let dense = Dense {
                    r1: y,
                    r2: ydiff,
                    r3: bspl,
                    r4,
                    r5,
                };
                while next < samples.len() && (samples[next] <= t_new || last) {
                    let theta = ((samples[next] - t) / h).clamp(0.0, 1.0);
                    let mut s = dense.eval(theta);
                    project(&mut s);
                    out.push(s);
                    next += 1;
                }

                y = ynew;
                project(&mut y);
                t = t_new;
                if last {
                    break;
                }
                k1 = f(t, &y);
                stats.evaluations += 1;

                let mut fac = 0.9 * err_norm.max(1e-10).powf(-0.2);
                fac = fac.clamp(0.2, 10.0);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                h *= fac;
                last_rejected = false;
            } else {
                stats.rejected += 1;
                let fac = if err_norm.is_finite() {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 1.0)
                } else {
                    0.2
                };
                h *= fac;
                last_rejected = true;
            }
        }
        Ok((out, stats))
    }

    fn initial_step<S, F>(
        &self,
        f: &mut F,
        t: f64,
        y: &S,
        k1: &S,
        span: f64,
        stats: &mut Stats,
    ) -> f64
    where
        S: OdeState,
        F: FnMut(f64, &S) -> S,
    {
        // Hairer-Wanner heuristic.
        let norm = |v: &S| {
            let (sq, n) = S::weighted_sq_error(v, y, y, self.atol, self.rtol);
            (sq / n as f64).sqrt()
        };
        let d0 = norm(y);
        let d1 = norm(k1);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span);
        let y1 = y.add_scaled(&[(h0, k1)]);
        let k2 = f(t + h0, &y1);
        stats.evaluations += 1;
        let d2 = norm(&S::zero().add_scaled(&[(1.0, &k2), (-1.0, k1)])) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let rate = 3.0;
        let samples: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        let (ys, stats) = Dopri5::default()
            .integrate(|_, y: &f64| -rate * y, 1.0, 0.0, 2.0, &samples, |_| {})
            .unwrap();
        assert_eq!(ys.len(), samples.len());
        for (t, y) in samples.iter().zip(&ys) {
            let exact = (-rate * t).exp();
            assert!(
                (y - exact).abs() <= 1e-8 * exact.max(1e-3),
                "t={t} y={y} exact={exact}"
            );
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        // Samples much denser than the steps exercise the continuous extension.
        let w = 2.0;
        let samples: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
        let solver = Dopri5 {
            rtol: 1e-10,
            atol: 1e-12,
            ..Dopri5::default()
        };
        let (ys, stats) = solver
            .integrate(
                |_, y: &[f64; 2]| [y[1], -w * w * y[0]],
                [1.0, 0.0],
                0.0,
                10.0,
                &samples,
                |_| {},
            )
            .unwrap();
        assert!(stats.accepted < samples.len());
        for (t, y) in samples.iter().zip(&ys) {
            assert!((y[0] - (w * t).cos()).abs() < 1e-7, "t={t}");
            assert!((y[1] + w * (w * t).sin()).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn time_dependent_forcing() {
        // y' = cos t, y(0) = 0 → y = sin t
        let samples = [0.5, 1.0, 3.0];
        let (ys, _) = Dopri5::default()
            .integrate(|t, _y: &f64| t.cos(), 0.0, 0.0, 3.0, &samples, |_| {})
            .unwrap();
        for (t, y) in samples.iter().zip(&ys) {
            assert!((y - t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn projection_is_applied() {
        let samples = [0.5, 1.0];
        let (ys, _) = Dopri5::default()
            .integrate(
                |_, _y: &f64| 1.0,
                0.0,
                0.0,
                1.0,
                &samples,
                |y| *y = y.min(0.25),
            )
            .unwrap();
        assert!(ys.iter().all(|y| *y <= 0.25 + 1e-12));
    }

    #[test]
    fn step_budget_exhaustion() {
        let solver = Dopri5 {
            max_steps: 3,
            ..Dopri5::default()
        };
        let err = solver
            .integrate(
                |t, _y: &f64| (1e4 * t).sin(),
                0.0,
                0.0,
                100.0,
                &[100.0],
                |_| {},
            )
            .unwrap_err();
        assert!(matches!(err, Error::TooManySteps { .. }));
    }

    #[test]
    fn underflow_reports_time() {
        // Blow-up at t = 1 forces the step size to collapse.
        let err = Dopri5::default()
            .integrate(|_, y: &f64| y * y, 1.0, 0.0, 2.0, &[2.0], |_| {})
            .unwrap_err();
        match err {
            Error::StepSizeUnderflow { t, .. } => assert!((t - 1.0).abs() < 1e-2),
            Error::TooManySteps { .. } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }
}
