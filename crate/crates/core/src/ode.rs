//! Adaptive Dormand-Prince 5(4) integrator over real or complex state vectors.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait OdeScalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl OdeScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl OdeScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Returned by the step observer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug)]
pub struct Rk45 {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Rk45 {
    fn default() -> Self {
        Rk45 { rtol: 1e-10, atol: 1e-12, h_init: 1e-3, h_max: 0.5, max_steps: 2_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Independent-variable value where integration ended.
    pub t_end: f64,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl Rk45 {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Rk45 { rtol, atol, ..Default::default() }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction), overwriting `y`.
    /// The observer runs after every accepted step and may rescale `y` or stop early.
    pub fn integrate<S, F, O>(&self, mut f: F, t0: f64, t1: f64, y: &mut [S], mut observe: O) -> Result<OdeStats>
    where
        S: OdeScalar,
        F: FnMut(f64, &[S], &mut [S]),
        O: FnMut(f64, &mut [S]) -> Control,
    {
        let n = y.len();
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let span = (t1 - t0).abs();
        let mut stats = OdeStats { t_end: t0, ..Default::default() };
        if span == 0.0 {
            return Ok(stats);
        }
        let mut k: Vec<Vec<S>> = vec![vec![S::zero(); n]; 7];
        let mut tmp = vec![S::zero(); n];
        let mut ynew = vec![S::zero(); n];
        let mut t = t0;
        let mut h = self.h_init.min(span).min(self.h_max);
        f(t, y, &mut k[0]);
        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::NonConvergence {
                    what: "RK45 step budget".into(),
                    iterations: self.max_steps,
                    residual: (t1 - t).abs(),
                });
            }
            let remaining = (t1 - t).abs();
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let hs = h * dir;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, a) in A[s].iter().enumerate().take(s) {
                        if *a != 0.0 {
                            acc = acc + k[j][i] * (hs * a);
                        }
                    }
                    tmp[i] = acc;
                }
                f(t + C[s] * hs, &tmp, &mut k[s]);
                if s == 6 {
                    ynew.copy_from_slice(&tmp);
                }
            }
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut e = S::zero();
                for (j, ej) in E.iter().enumerate() {
                    if *ej != 0.0 {
                        e = e + k[j][i] * (hs * ej);
                    }
                }
                let sc = self.atol + self.rtol * y[i].magnitude().max(ynew[i].magnitude());
                err = err.max(e.magnitude() / sc);
            }
            if !err.is_finite() {
                return Err(Error::NonConvergence { what: "RK45 non-finite error estimate".into(), iterations: stats.accepted, residual: err });
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + hs };
                y.copy_from_slice(&ynew);
                stats.accepted += 1;
                stats.t_end = t;
                let ctl = observe(t, y);
                if last || ctl == Control::Stop {
                    return Ok(stats);
                }
                // FSAL: the observer may have rescaled y, so re-evaluate.
                f(t, y, &mut k[0]);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h = (h * fac).min(self.h_max);
            } else {
                stats.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-14 * span.max(1.0) {
                    return Err(Error::NonConvergence { what: "RK45 step underflow".into(), iterations: stats.accepted, residual: err });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let mut y = [1.0, 0.0];
        let rk = Rk45::with_tol(1e-11, 1e-13);
        rk.integrate(|_, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        }, 0.0, 2.0 * std::f64::consts::PI, &mut y, |_, _| Control::Continue)
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    }

    #[test]
    fn backward_complex_exponential() {
        let lam = Complex64::new(-0.5, 2.0);
        let mut y = [Complex64::new(1.0, 0.0)];
        Rk45::with_tol(1e-11, 1e-14)
            .integrate(|_, y: &[Complex64], d: &mut [Complex64]| d[0] = y[0] * lam, 3.0, 0.0, &mut y, |_, _| Control::Continue)
            .unwrap();
        let want = (lam * -3.0).exp();
        assert!((y[0] - want).norm() < 1e-8 * want.norm());
    }

    #[test]
    fn observer_can_stop() {
        let mut y = [0.0];
        let st = Rk45::default()
            .integrate(|_, _: &[f64], d: &mut [f64]| d[0] = 1.0, 0.0, 10.0, &mut y, |_, y| {
                if y[0] > 1.0 { Control::Stop } else { Control::Continue }
            })
            .unwrap();
        assert!(st.t_end < 10.0 && y[0] > 1.0);
    }
}
