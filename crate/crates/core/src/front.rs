//! The critical front of the scalar cubic KPP equation, by shooting and Newton polish.

use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::fd;
use crate::grid::{Frame, Grid1D};
use crate::ode::{Control, Rk45};
use crate::params::SystemParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontProfile {
    pub grid: Grid1D,
    pub q: Vec<f64>,
    /// `1 − q`, accurate to full relative precision in the left tail.
    pub one_minus_q: Vec<f64>,
    pub qprime: Vec<f64>,
    pub c: f64,
    /// Saddle rate κ of the left tail.
    pub kappa: f64,
    /// Tail rate `c/(2d)` on the right.
    pub rate: f64,
    /// Residual of the discrete ODE after polishing (sup norm over equation nodes).
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontOptions {
    /// Point where `q = 1/2`.
    pub phase_point: f64,
    pub max_newton: usize,
    pub tol: f64,
}

impl Default for FrontOptions {
    fn default() -> Self {
        FrontOptions { phase_point: 0.0, max_newton: 50, tol: 1e-10 }
    }
}

/// Unstable rate of the saddle `(1, 0)` at speed `c`.
pub fn saddle_rate(p: &SystemParams<f64>, c: f64) -> f64 {
    (-c + (c * c + 8.0 * p.d * p.alpha).sqrt()) / (2.0 * p.d)
}

#[derive(Clone, Debug)]
pub struct Shot {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub qp: Vec<f64>,
    /// Smallest value of q reached.
    pub min_q: f64,
}

impl Shot {
    pub fn overshoots(&self) -> bool {
        self.min_q < 0.0
    }
}

/// Shoots from the saddle along its unstable direction at speed `c`, shifted so that q crosses
/// 1/2 at `x = 0`, and continues to `x_end` or until q turns negative.
pub fn shoot(p: &SystemParams<f64>, c: f64, x_end: f64) -> Result<Shot> {
    let kappa = saddle_rate(p, c);
    let delta = 1e-10;
    let mut y = [1.0 - delta, -delta * kappa];
    let (d, al) = (p.d, p.alpha);
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -(c * y[1] + al * y[0] * (1.0 - y[0] * y[0])) / d;
    };
    let mut xs = vec![0.0];
    let mut qs = vec![y[0]];
    let mut qps = vec![y[1]];
    let mut x_half: Option<f64> = None;
    let rk = Rk45 { rtol: 1e-11, atol: 1e-300, h_max: 0.05, ..Default::default() };
    // Reaching q = 1/2 from δ takes ln(1/(2δ))/κ; allow a generous horizon.
    let horizon = 40.0 / kappa + x_end.abs() + 200.0;
    rk.integrate(rhs, 0.0, horizon, &mut y, |x, y| {
        let (q0, x0) = (*qs.last().unwrap(), *xs.last().unwrap());
        if x_half.is_none() && q0 >= 0.5 && y[0] < 0.5 {
            x_half = Some(x0 + (x - x0) * (q0 - 0.5) / (q0 - y[0]));
        }
        xs.push(x);
        qs.push(y[0]);
        qps.push(y[1]);
        match x_half {
            Some(h) if x - h >= x_end || y[0] < 0.0 => Control::Stop,
            _ => Control::Continue,
        }
    })?;
    let h = x_half.ok_or_else(|| Error::NonConvergence { what: "front shooting (no half crossing)".into(), iterations: xs.len(), residual: f64::NAN })?;
    for x in xs.iter_mut() {
        *x -= h;
    }
    let min_q = qs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Shot { x: xs, q: qs, qp: qps, min_q })
}

fn initial_guess(p: &SystemParams<f64>, grid: &Grid1D, shot: &Shot, kappa: f64, phase: f64) -> Vec<f64> {
    let k = p.front_rate();
    let (x0, q0) = (shot.x[0], shot.q[0]);
    let (xl, ql) = (*shot.x.last().unwrap(), *shot.q.last().unwrap());
    let mut j = 0;
    grid.xs()
        .into_iter()
        .map(|xg| {
            let x = xg - phase;
            if x <= x0 {
                1.0 - (1.0 - q0) * (kappa * (x - x0)).exp()
            } else if x >= xl {
                ql.max(0.0) * (-k * (x - xl)).exp()
            } else {
                while shot.x[j + 1] < x {
                    j += 1;
                }
                let t = (x - shot.x[j]) / (shot.x[j + 1] - shot.x[j]);
                shot.q[j] * (1.0 - t) + shot.q[j + 1] * t
            }
        })
        .collect()
}

/// Four-point Lagrange weights for evaluating at `x` from nodes `j−1..=j+2`.
fn lagrange4(grid: &Grid1D, x: f64) -> (usize, [f64; 4]) {
    let s = (x - grid.x_min) / grid.dx;
    let j = (s.floor() as isize).clamp(1, grid.n as isize - 3) as usize;
    let t = s - j as f64;
    let w = [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ];
    (j, w)
}

/// Residual of `d q'' + c q' + α q(1−q²)` at node `i` (1 ≤ i ≤ n−2).
pub fn ode_residual_at(p: &SystemParams<f64>, c: f64, grid: &Grid1D, q: &[f64], i: usize) -> f64 {
    let (s1, s2) = fd::first_second(i, grid.n, grid.dx);
    p.d * fd::apply(&s2, q, i) + c * fd::apply(&s1, q, i) + p.alpha * q[i] * (1.0 - q[i] * q[i])
}

/// Unknowns are `w = 1 − q` left of the phase point and `q` to the right, so both tails keep
/// full relative precision.
struct Mixed {
    split: usize,
}

impl Mixed {
    fn is_w(&self, j: usize) -> bool {
        j < self.split
    }

    fn q(&self, z: &[f64], j: usize) -> f64 {
        if self.is_w(j) { 1.0 - z[j] } else { z[j] }
    }

    fn w(&self, z: &[f64], j: usize) -> f64 {
        if self.is_w(j) { z[j] } else { 1.0 - z[j] }
    }

    /// Residual at node `i` in the node's own variable, and its Jacobian row over `i−2..=i+2`.
    fn row(&self, p: &SystemParams<f64>, c: f64, n: usize, h: f64, z: &[f64], i: usize) -> (f64, [f64; 5]) {
        let (s1, s2) = fd::first_second(i, n, h);
        let st = fd::combine(&s2, p.d, &s1, c);
        let mut jac = [0.0; 5];
        let mut r = 0.0;
        if self.is_w(i) {
            // −(d w'' + c w') + α w(1−w)(2−w)
            for (k, v) in st.iter().enumerate() {
                if *v == 0.0 {
                    continue;
                }
                let j = i + k - 2;
                r -= v * self.w(z, j);
                jac[k] = if self.is_w(j) { -v } else { *v };
            }
            let w = z[i];
            r += p.alpha * w * (1.0 - w) * (2.0 - w);
            jac[2] += p.alpha * (2.0 - 6.0 * w + 3.0 * w * w);
        } else {
            for (k, v) in st.iter().enumerate() {
                if *v == 0.0 {
                    continue;
                }
                let j = i + k - 2;
                r += v * self.q(z, j);
                jac[k] = if self.is_w(j) { -v } else { *v };
            }
            let q = z[i];
            r += p.alpha * q * (1.0 - q * q);
            jac[2] += p.alpha * (1.0 - 3.0 * q * q);
        }
        (r, jac)
    }
}

/// Solves for the critical front on `grid` with Newton's method on the discretised problem.
pub fn solve_front_on_grid(p: &SystemParams<f64>, grid: Grid1D, opts: FrontOptions) -> Result<FrontProfile> {
    p.validate()?;
    let c = p.c_star();
    let kappa = saddle_rate(p, c);
    let n = grid.n;
    let h = grid.dx;
    if grid.x_min > opts.phase_point - 20.0 || grid.x_max < opts.phase_point + 20.0 {
        return Err(Error::Domain("front domain must extend at least 20 on both sides of the phase point".into()));
    }
    if h > 0.1 / kappa.min(c / (2.0 * p.d)) && h > 0.2 {
        return Err(Error::Underresolved(format!("dx = {h} does not resolve the saddle rate {kappa}")));
    }
    let shot = shoot(p, c, grid.x_max - opts.phase_point + 1.0)?;
    let q0 = initial_guess(p, &grid, &shot, kappa, opts.phase_point);
    let (jp, wp) = lagrange4(&grid, opts.phase_point);
    let mx = Mixed { split: jp };
    let mut z: Vec<f64> = (0..n).map(|j| if mx.is_w(j) { 1.0 - q0[j] } else { q0[j] }).collect();
    let growth = (kappa * h).exp();
    let mut last_res = f64::INFINITY;
    for it in 0..opts.max_newton {
        let mut a = BandMatrix::zeros(n, 3, 2);
        let mut f = vec![0.0; n];
        // Row 0: w_1 = e^{κh} w_0 (exact on the linearised left tail).
        a.set(0, 0, -growth);
        a.set(0, 1, 1.0);
        f[0] = z[1] - growth * z[0];
        let mut res: f64 = 0.0;
        for node in 1..=n - 2 {
            let row = if node <= jp { node } else { node + 1 };
            let (r, jac) = mx.row(p, c, n, h, &z, node);
            for (k, v) in jac.iter().enumerate() {
                if *v != 0.0 {
                    a.add(row, node + k - 2, *v);
                }
            }
            f[row] = r;
            res = res.max(r.abs());
        }
        let prow = jp + 1;
        let mut ph = -0.5;
        for (k, w) in wp.iter().enumerate() {
            let j = jp - 1 + k;
            a.set(prow, j, if mx.is_w(j) { -w } else { *w });
            ph += w * mx.q(&z, j);
        }
        f[prow] = ph;
        let total = res.max(f[0].abs()).max(ph.abs());
        last_res = total;
        if total <= opts.tol && it > 0 {
            return Ok(finish(p, grid, &mx, &z, c, kappa, res));
        }
        let lu = a.factor()?;
        lu.solve_in_place(&mut f);
        let mut step: f64 = 0.0;
        for (zi, di) in z.iter_mut().zip(&f) {
            *zi -= di;
            step = step.max(di.abs());
        }
        if step < 1e-13 {
            let res = (1..n - 1).map(|i| mx.row(p, c, n, h, &z, i).0.abs()).fold(0.0, f64::max);
            return Ok(finish(p, grid, &mx, &z, c, kappa, res));
        }
    }
    Err(Error::NonConvergence { what: "front Newton".into(), iterations: opts.max_newton, residual: last_res })
}

fn finish(p: &SystemParams<f64>, grid: Grid1D, mx: &Mixed, z: &[f64], c: f64, kappa: f64, residual: f64) -> FrontProfile {
    let n = grid.n;
    let h = grid.dx;
    let q: Vec<f64> = (0..n).map(|j| mx.q(z, j)).collect();
    let w: Vec<f64> = (0..n).map(|j| mx.w(z, j)).collect();
    let mut qprime = vec![0.0; n];
    for i in 1..n - 1 {
        let s1 = fd::first_second(i, n, h).0;
        qprime[i] = if mx.is_w(i) { -fd::apply(&s1, &w, i) } else { fd::apply(&s1, &q, i) };
    }
    qprime[0] = -kappa * w[0];
    qprime[n - 1] = (3.0 * q[n - 1] - 4.0 * q[n - 2] + q[n - 3]) / (2.0 * h);
    FrontProfile { grid, q, one_minus_q: w, qprime, c, kappa, rate: c / (2.0 * p.d), residual }
}

/// Front on `[x_min, x_max)` with `n` nodes in the co-moving frame.
pub fn solve_front(p: &SystemParams<f64>, domain: (f64, f64), n: usize) -> Result<FrontProfile> {
    let grid = Grid1D::with_points(domain.0, domain.1, n, Frame::Comoving, false)?;
    solve_front_on_grid(p, grid, FrontOptions::default())
}

/// Default resolution: `[−40, 60]` with 4001 nodes.
pub fn solve_front_default(p: &SystemParams<f64>) -> Result<FrontProfile> {
    solve_front(p, (-40.0, 60.0), 4001)
}

impl FrontProfile {
    /// Smooth evaluation of `(q, q')` at any `x`; outside the grid the exponential tails are used.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let g = &self.grid;
        let last = g.x(g.n - 1);
        if x < g.x_min {
            let e = self.one_minus_q[0] * (self.kappa * (x - g.x_min)).exp();
            return (1.0 - e, -self.kappa * e);
        }
        if x > last {
            let v = self.q[g.n - 1] * (-self.rate * (x - last)).exp();
            return (v, -self.rate * v);
        }
        let (j, w) = lagrange4(g, x);
        let mut q = 0.0;
        let mut qp = 0.0;
        for k in 0..4 {
            q += w[k] * self.q[j - 1 + k];
            qp += w[k] * self.qprime[j - 1 + k];
        }
        (q, qp)
    }

    pub fn is_monotone(&self) -> bool {
        self.qprime[1..self.grid.n - 1].iter().all(|v| *v < 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontFit {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Linear fit of `q*'(x)·e^{c x/(2d)}` against `a x + b` on `window` (default `[10, x_max − 5]`).
pub fn check_front_asymptotics(f: &FrontProfile, window: Option<(f64, f64)>) -> Result<FrontFit> {
    let window = window.unwrap_or((10.0, f.grid.x_max - 5.0));
    let pts: Vec<(f64, f64)> = (0..f.grid.n)
        .map(|i| (f.grid.x(i), f.qprime[i]))
        .filter(|(x, _)| *x >= window.0 && *x <= window.1)
        .map(|(x, qp)| (x, qp * (f.rate * x).exp()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Domain("fit window contains fewer than three nodes".into()));
    }
    let (slope, intercept, r2) = linear_fit(&pts);
    Ok(FrontFit { a: slope, b: intercept, r_squared: r2, window })
}

/// Least squares `y ≈ a x + b`, returning `(a, b, R²)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (a, b, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SystemParams<f64> {
        SystemParams::gate_preset()
    }

    #[test]
    fn default_front_is_accurate() {
        let f = solve_front_default(&params()).unwrap();
        assert!(f.residual <= 1e-8, "{}", f.residual);
        assert!(f.is_monotone());
        assert!((f.eval(0.0).0 - 0.5).abs() < 1e-12);
        assert!(f.one_minus_q[0] < 1e-6 && f.q[f.grid.n - 1] < 1e-6);
    }

    #[test]
    fn left_tail_rate() {
        let f = solve_front_default(&params()).unwrap();
        let kappa = 3f64.sqrt() - 1.0;
        for i in 0..=f.grid.index_of(f.grid.x_min + 5.0) {
            let x = f.grid.x(i);
            let r = f.one_minus_q[i].ln() / x;
            assert!((r - kappa).abs() < 0.01 * kappa, "x={x}: {r}");
        }
    }

    #[test]
    fn shooting_detects_sub_critical_speed() {
        let p = params();
        assert!(shoot(&p, p.c_star() - 0.1, 60.0).unwrap().overshoots());
        assert!(!shoot(&p, p.c_star(), 60.0).unwrap().overshoots());
    }

    #[test]
    fn translation_covariance() {
        let p = params();
        let g = Grid1D::with_points(-40.0, 60.0, 4001, Frame::Comoving, false).unwrap();
        let a = solve_front_on_grid(&p, g, FrontOptions::default()).unwrap();
        let b = solve_front_on_grid(&p, g, FrontOptions { phase_point: 3.3, ..Default::default() }).unwrap();
        for k in 0..200 {
            let x = -15.0 + 0.15 * k as f64;
            let d = (b.eval(x + 3.3).0 - a.eval(x).0).abs();
            assert!(d < 1e-6, "x={x}: {d}");
        }
    }

    #[test]
    fn rejects_short_domain() {
        assert!(solve_front(&params(), (-10.0, 60.0), 2000).is_err());
    }
}
