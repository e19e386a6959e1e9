//! Co-moving time integration of the coupled system around the front.
//!
//! The state is stored as a perturbation of `(q*, 0)`, either raw (`P`) or divided by the
//! exponential weight ω* (`U`). Linear terms are treated by Crank-Nicolson with banded LU
//! factors computed once per run; nonlinear terms by second-order Adams-Bashforth.
//! The discrete residual of the interpolated front is not added, so `(q*, 0)` is an exact
//! equilibrium of the scheme.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::banded::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::fd::{apply7, wide_4th};
use crate::front::{solve_front_default, FrontProfile};
use crate::grid::{Frame, Grid1D};
use crate::params::{require_gated, SystemParams};
use crate::spectral::select_theta;
use crate::weights::{WeightKind, WeightSpec};

/// Half-width of the seven-point stencils; this many nodes at each end are clamped to zero.
const CLAMP: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sponge {
    pub width: f64,
    pub strength: f64,
}

impl Default for Sponge {
    fn default() -> Self {
        Sponge { width: 40.0, strength: 5.0 }
    }
}

impl Sponge {
    pub fn off() -> Self {
        Sponge { width: 0.0, strength: 0.0 }
    }

    /// Cubic ramp from `strength` at the left end to 0 at `x_min + width`.
    pub fn profile(&self, grid: &Grid1D) -> Vec<f64> {
        (0..grid.n)
            .map(|i| {
                if self.strength == 0.0 {
                    return 0.0;
                }
                let s = ((grid.x_min + self.width - grid.x(i)) / self.width).clamp(0.0, 1.0);
                self.strength * s * s * s
            })
            .collect()
    }
}

/// Damping `−σ_sp·P`; relaxes the state to `(q*, 0)`, which equals `(1, 0)` to roundoff in the layer.
pub fn sponge_term(sigma: &[f64], p: &[f64]) -> Vec<f64> {
    sigma.iter().zip(p).map(|(s, v)| -s * v).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimFrame {
    /// Raw perturbation `P`.
    Full,
    /// `U = P/ω*`.
    Weighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum BackgroundSpec {
    Front,
    /// Spatially constant `q`, for homogeneous checks.
    Constant(f64),
}

/// Initial perturbation, expressed in the evolved frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialCondition {
    Zero,
    Gaussian { center: f64, width: f64, amplitude: [f64; 2] },
    /// One Gaussian per component with `‖u₁ρ*³‖∞ = δ` (default `0.01·√μ`) and
    /// `‖u₂ρ*³‖∞ = ratio·δ`.
    SmallBump { center: [f64; 2], width: [f64; 2], delta: Option<f64>, ratio: f64 },
    /// Gaussian-windowed white noise from a seeded generator.
    Noise { center: f64, width: f64, amplitude: f64, seed: u64 },
    Custom { first: Vec<f64>, second: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: SystemParams<f64>,
    pub grid: Grid1D,
    pub dt: f64,
    pub t_end: f64,
    pub sponge: Sponge,
    pub ic: InitialCondition,
    /// Time between recorded norms.
    pub record: f64,
    /// Time between stored snapshots; 0 disables them.
    pub snapshot_every: f64,
    pub frame: SimFrame,
    pub background: BackgroundSpec,
    /// Weight exponent θ; chosen by the spectral gate when absent.
    pub theta: Option<f64>,
    /// Wall-clock budget in seconds.
    pub budget_secs: Option<f64>,
}

impl SimConfig {
    pub fn default_grid() -> Grid1D {
        Grid1D::with_spacing(-400.0, 200.0, 0.15, Frame::Comoving, false).expect("static grid")
    }

    /// Shipped preset: the documented defaults with a small bump.
    pub fn preset(params: SystemParams<f64>) -> Self {
        SimConfig {
            params,
            grid: Self::default_grid(),
            dt: 0.01,
            t_end: 400.0,
            sponge: Sponge::default(),
            ic: InitialCondition::SmallBump { center: [0.0, -15.0], width: [2.0, 1.5], delta: None, ratio: 0.01 },
            record: 1.0,
            snapshot_every: 10.0,
            frame: SimFrame::Weighted,
            background: BackgroundSpec::Front,
            theta: None,
            budget_secs: None,
        }
    }

    /// Largest rate of the explicit part at unit amplitude; `dt` times it must stay ≤ 1/4.
    ///
    /// Every linear term is implicit, so no diffusive `dx²` restriction applies.
    pub fn explicit_stiffness(&self) -> f64 {
        (3.0 * self.params.alpha).max(self.params.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let g = &self.grid;
        if g.periodic || g.frame != Frame::Comoving {
            return Err(Error::Domain("simulation grids are non-periodic and co-moving".into()));
        }
        if g.dx > 0.2 {
            return Err(Error::Underresolved(format!("dx = {} exceeds 0.2", g.dx)));
        }
        if g.n < 4 * CLAMP {
            return Err(Error::Domain(format!("grid of {} points is too small", g.n)));
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !(self.record > 0.0) || self.snapshot_every < 0.0 {
            return Err(Error::Domain("dt and record must be positive, t_end and snapshot_every nonnegative".into()));
        }
        if self.dt * self.explicit_stiffness() > 0.25 {
            return Err(Error::Domain(format!(
                "dt = {} too large for the explicit reaction part (limit {})",
                self.dt,
                0.25 / self.explicit_stiffness()
            )));
        }
        if self.sponge.strength < 0.0 || (self.sponge.strength > 0.0 && self.sponge.width < 20.0) {
            return Err(Error::Domain("sponge needs strength ≥ 0 and width ≥ 20".into()));
        }
        if let InitialCondition::Custom { first, second } = &self.ic {
            if first.len() != g.n || second.len() != g.n {
                return Err(Error::GridMismatch("custom initial condition length".into()));
            }
        }
        Ok(())
    }

    fn theta(&self) -> Result<f64> {
        match self.theta {
            Some(t) => Ok(t),
            None => Ok(select_theta(&self.params)?.theta),
        }
    }
}

/// Background state `q` sampled on the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub q: Vec<f64>,
    pub one_minus_q: Vec<f64>,
}

impl Background {
    pub fn constant(grid: &Grid1D, q: f64) -> Self {
        Background { q: vec![q; grid.n], one_minus_q: vec![1.0 - q; grid.n] }
    }

    pub fn from_front(grid: &Grid1D, front: &FrontProfile) -> Self {
        let q: Vec<f64> = grid.xs().iter().map(|&x| front.eval(x).0).collect();
        let one_minus_q = grid
            .xs()
            .iter()
            .zip(&q)
            .map(|(&x, &v)| {
                // Full relative precision in the left tail.
                if x < front.grid.x_min {
                    front.one_minus_q[0] * (front.kappa * (x - front.grid.x_min)).exp()
                } else {
                    1.0 - v
                }
            })
            .collect();
        Background { q, one_minus_q }
    }
}

/// Logarithms of the weights on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameWeights {
    pub theta: f64,
    pub ln_omega_star: Vec<f64>,
    pub ln_varpi: Vec<f64>,
    pub ln_rho: Vec<f64>,
}

impl FrameWeights {
    pub fn new(grid: &Grid1D, p: &SystemParams<f64>, theta: f64) -> Self {
        let ln = |k: WeightKind| -> Vec<f64> {
            let w = WeightSpec::new(k, p, theta);
            grid.xs().iter().map(|&x| w.log_jet(x).value()).collect()
        };
        FrameWeights {
            theta,
            ln_omega_star: ln(WeightKind::OmegaStar),
            ln_varpi: ln(WeightKind::Varpi),
            ln_rho: ln(WeightKind::RhoStar),
        }
    }

    /// `ln w` with `P = w·F` for a field of the given kind.
    pub fn ln_weight(&self, kind: PerturbationKind, i: usize) -> f64 {
        match kind {
            PerturbationKind::P => 0.0,
            PerturbationKind::U => self.ln_omega_star[i],
            PerturbationKind::V => self.ln_varpi[i],
        }
    }

    /// Pointwise factors converting a field of kind `from` into kind `to`.
    pub fn factors(&self, from: PerturbationKind, to: PerturbationKind) -> Vec<f64> {
        (0..self.ln_rho.len()).map(|i| (self.ln_weight(from, i) - self.ln_weight(to, i)).exp()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerturbationKind {
    /// `(u, v) = Q + P`.
    P,
    /// `(u, v) = Q + ω*·U`.
    U,
    /// `(u, v) = Q + ϖ·V`.
    V,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationField {
    pub grid: Grid1D,
    pub kind: PerturbationKind,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub t: f64,
}

const FRAME_GUARD: f64 = 1e12;

/// Converts between `P`, `U` and `V` by pointwise weight ratios.
pub fn change_frame(f: &PerturbationField, target: PerturbationKind, w: &FrameWeights) -> Result<PerturbationField> {
    if f.first.len() != f.grid.n || f.second.len() != f.grid.n || w.ln_rho.len() != f.grid.n {
        return Err(Error::GridMismatch("perturbation and weights differ in length".into()));
    }
    let fac = w.factors(f.kind, target);
    let conv = |src: &[f64]| -> Result<Vec<f64>> {
        src.iter()
            .zip(&fac)
            .enumerate()
            .map(|(i, (&v, &k))| {
                let out = if v == 0.0 { 0.0 } else { v * k };
                if out.abs() > FRAME_GUARD || !out.is_finite() {
                    Err(Error::Overflow(format!("frame change gives {out:e} at x = {}", f.grid.x(i))))
                } else {
                    Ok(out)
                }
            })
            .collect()
    };
    Ok(PerturbationField { grid: f.grid, kind: target, first: conv(&f.first)?, second: conv(&f.second)?, t: f.t })
}

/// `w⁻¹N(w·F)` for `P = w·F`: `(−α(3q w a² + w² a³), γ w a b − σ w² b³)`.
pub fn weighted_nonlinearity(p: &SystemParams<f64>, q: f64, w: f64, a: f64, b: f64) -> (f64, f64) {
    let n1 = -p.alpha * (3.0 * q * w * a * a + w * w * a * a * a);
    let n2 = p.gamma * w * a * b - p.sigma * w * w * b * b * b;
    (n1, n2)
}

/// Nonlinear terms in the field's own frame (`N` for `P`, `𝒩` for `U`, `𝒬` for `V`).
pub fn nonlinear_terms(
    p: &SystemParams<f64>,
    f: &PerturbationField,
    bg: &Background,
    w: &FrameWeights,
) -> Result<[Vec<f64>; 2]> {
    if bg.q.len() != f.grid.n {
        return Err(Error::GridMismatch("background and field differ in length".into()));
    }
    let mut out = [vec![0.0; f.grid.n], vec![0.0; f.grid.n]];
    for i in 0..f.grid.n {
        let wi = w.ln_weight(f.kind, i).exp();
        let (a, b) = weighted_nonlinearity(p, bg.q[i], wi, f.first[i], f.second[i]);
        out[0][i] = a;
        out[1][i] = b;
    }
    Ok(out)
}

fn binom(n: usize, k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64)
}

/// Coefficients of `w⁻¹(Σ a_k ∂^k)w` given `r_m = w^{(m)}/w`.
pub fn conjugate_coefficients(a: &[f64; 5], r: &[f64; 5]) -> [f64; 5] {
    std::array::from_fn(|j| (j..5).map(|k| binom(k, j) * a[k] * r[k - j]).sum())
}

/// Unweighted co-moving coefficients `a_0..a_4` of the KPP and SH blocks at background `q`.
pub fn base_coefficients(p: &SystemParams<f64>, q: f64, one_minus_q: f64) -> [[f64; 5]; 2] {
    let c = p.c_star();
    [
        [p.alpha * (1.0 - 3.0 * q * q), c, p.d, 0.0, 0.0],
        [p.mu - 1.0 - p.gamma * one_minus_q, c, -2.0, 0.0, -1.0],
    ]
}

/// `(S_1, S_2)` of the `V` formulation in its printed form, with quadratic correction
/// `(ϖ−1)(−3αq v₁², γv₁v₂)`. Nodes lacking a full stencil are set to zero.
pub fn source_term(
    p: &SystemParams<f64>,
    v: &PerturbationField,
    bg: &Background,
    weights: &FrameWeights,
) -> Result<[Vec<f64>; 2]> {
    source_term_with(p, v, bg, weights, false)
}

/// `𝒯V − 𝒯⁻V + 𝒬(V) − 𝒬⁻(V)` evaluated literally; exceeds [`source_term`] by `3α(1−q)v₁²`.
pub fn source_term_from_definition(
    p: &SystemParams<f64>,
    v: &PerturbationField,
    bg: &Background,
    weights: &FrameWeights,
) -> Result<[Vec<f64>; 2]> {
    source_term_with(p, v, bg, weights, true)
}

fn source_term_with(
    p: &SystemParams<f64>,
    v: &PerturbationField,
    bg: &Background,
    weights: &FrameWeights,
    literal: bool,
) -> Result<[Vec<f64>; 2]> {
    if v.kind != PerturbationKind::V {
        return Err(Error::Domain("source term needs a V field".into()));
    }
    let g = &v.grid;
    let varpi = WeightSpec::new(WeightKind::Varpi, p, weights.theta);
    let st = wide_4th(g.dx);
    let c = p.c_star();
    let mut out = [vec![0.0; g.n], vec![0.0; g.n]];
    for i in CLAMP..g.n - CLAMP {
        let x = g.x(i);
        let r = varpi.log_derivative_ratios(x);
        let d1: [f64; 5] = std::array::from_fn(|k| apply7(&st[k], &v.first, i));
        let d2: [f64; 5] = std::array::from_fn(|k| apply7(&st[k], &v.second, i));
        let (q, omq) = (bg.q[i], bg.one_minus_q[i]);
        let wv = weights.ln_varpi[i].exp();
        let kpp_comm = p.d * (r[2] * d1[0] + 2.0 * r[1] * d1[1]);
        let sh_comm = -(2.0 * (r[2] * d2[0] + 2.0 * r[1] * d2[1])
            + r[4] * d2[0]
            + 4.0 * r[3] * d2[1]
            + 6.0 * r[2] * d2[2]
            + 4.0 * r[1] * d2[3]);
        let (a, b) = (d1[0], d2[0]);
        out[0][i] = kpp_comm + c * r[1] * a + 3.0 * p.alpha * omq * (1.0 + q) * a
            - 3.0 * p.alpha * if literal { q * wv - 1.0 } else { q * (wv - 1.0) } * a * a
            - p.alpha * (wv * wv - 1.0) * a * a * a;
        out[1][i] = sh_comm + c * r[1] * b - p.gamma * omq * b + p.gamma * (wv - 1.0) * a * b
            - p.sigma * (wv * wv - 1.0) * b * b * b;
    }
    Ok(out)
}

/// Crank-Nicolson / Adams-Bashforth stepper for one frame.
#[derive(Clone, Debug)]
pub struct Stepper {
    pub grid: Grid1D,
    pub frame: SimFrame,
    pub dt: f64,
    params: SystemParams<f64>,
    q: Vec<f64>,
    /// `w` with `P = w·F` for the evolved field `F`.
    weight: Vec<f64>,
    lu: [BandLu<f64>; 2],
    explicit: [BandMatrix<f64>; 2],
    previous: Option<[Vec<f64>; 2]>,
}

impl Stepper {
    pub fn new(
        params: &SystemParams<f64>,
        grid: Grid1D,
        dt: f64,
        frame: SimFrame,
        bg: &Background,
        weights: &FrameWeights,
        sponge: &[f64],
    ) -> Result<Self> {
        let n = grid.n;
        let st = wide_4th(grid.dx);
        let spec = WeightSpec::new(WeightKind::OmegaStar, params, weights.theta);
        let mut implicit = [BandMatrix::zeros(n, CLAMP, CLAMP), BandMatrix::zeros(n, CLAMP, CLAMP)];
        let mut explicit = implicit.clone();
        for i in 0..n {
            if i < CLAMP || i + CLAMP >= n {
                for c in 0..2 {
                    implicit[c].set_identity_row(i, 1.0);
                    explicit[c].set_identity_row(i, 0.0);
                }
                continue;
            }
            let base = base_coefficients(params, bg.q[i], bg.one_minus_q[i]);
            let ratios = match frame {
                SimFrame::Full => [1.0, 0.0, 0.0, 0.0, 0.0],
                SimFrame::Weighted => spec.log_derivative_ratios(grid.x(i)),
            };
            for c in 0..2 {
                let b = conjugate_coefficients(&base[c], &ratios);
                for k in 0..7 {
                    let mut a: f64 = (0..5).map(|j| b[j] * st[j][k]).sum();
                    if k == CLAMP {
                        a -= sponge[i];
                    }
                    let j = i + k - CLAMP;
                    let id = if k == CLAMP { 1.0 } else { 0.0 };
                    implicit[c].set(i, j, id - 0.5 * dt * a);
                    explicit[c].set(i, j, id + 0.5 * dt * a);
                }
            }
        }
        let [iu, iv] = implicit;
        let weight = match frame {
            SimFrame::Full => vec![1.0; n],
            SimFrame::Weighted => weights.ln_omega_star.iter().map(|l| l.exp()).collect(),
        };
        Ok(Stepper {
            grid,
            frame,
            dt,
            params: params.clone(),
            q: bg.q.clone(),
            weight,
            lu: [iu.factor()?, iv.factor()?],
            explicit,
            previous: None,
        })
    }

    pub fn kind(&self) -> PerturbationKind {
        match self.frame {
            SimFrame::Full => PerturbationKind::P,
            SimFrame::Weighted => PerturbationKind::U,
        }
    }

    fn nonlinear(&self, f: &[Vec<f64>; 2]) -> [Vec<f64>; 2] {
        let n = self.grid.n;
        let mut out = [vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let (a, b) = weighted_nonlinearity(&self.params, self.q[i], self.weight[i], f[0][i], f[1][i]);
            out[0][i] = a;
            out[1][i] = b;
        }
        out
    }

    /// Forgets the Adams-Bashforth history; the next step is explicit Euler in the nonlinearity.
    pub fn reset_history(&mut self) {
        self.previous = None;
    }

    /// One step in place. The SH block is solved first so the coupling `β·u₂` is centred in time.
    pub fn step(&mut self, f: &mut [Vec<f64>; 2]) {
        let n = self.grid.n;
        let dt = self.dt;
        let now = self.nonlinear(f);
        let ab = |c: usize, i: usize| match &self.previous {
            Some(prev) => 1.5 * now[c][i] - 0.5 * prev[c][i],
            None => now[c][i],
        };
        let mut rhs = vec![0.0; n];
        self.explicit[1].matvec(&f[1], &mut rhs);
        for (i, r) in rhs.iter_mut().enumerate() {
            *r += dt * ab(1, i);
        }
        clamp(&mut rhs);
        self.lu[1].solve_in_place(&mut rhs);
        let second_old = std::mem::replace(&mut f[1], rhs);

        let mut rhs = vec![0.0; n];
        self.explicit[0].matvec(&f[0], &mut rhs);
        for (i, r) in rhs.iter_mut().enumerate() {
            *r += dt * (0.5 * self.params.beta * (second_old[i] + f[1][i]) + ab(0, i));
        }
        clamp(&mut rhs);
        self.lu[0].solve_in_place(&mut rhs);
        f[0] = rhs;
        self.previous = Some(now);
    }
}

fn clamp(v: &mut [f64]) {
    let n = v.len();
    for i in (0..CLAMP).chain(n - CLAMP..n) {
        v[i] = 0.0;
    }
}

/// Full state `(u, v)` on the co-moving grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateField {
    pub grid: Grid1D,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl StateField {
    /// Finite values and the boundary conditions `u = 1/0`, `v = ∂v = 0` within `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        if self.u.iter().chain(&self.v).any(|z| !z.is_finite()) {
            return Err(Error::NonFinite { t: self.t, last_good: Box::new((self.u.clone(), self.v.clone())) });
        }
        let n = self.grid.n;
        let bad = (self.u[0] - 1.0).abs() > tol
            || self.u[n - 1].abs() > tol
            || [0, 1, n - 2, n - 1].iter().any(|&i| self.v[i].abs() > tol);
        if bad {
            return Err(Error::Domain("boundary conditions violated".into()));
        }
        Ok(())
    }
}

/// One step of the full system from `s`, starting a fresh stepper (Euler start).
pub fn step_full(s: &StateField, cfg: &SimConfig) -> Result<StateField> {
    cfg.validate()?;
    cfg.grid.require_same(&s.grid)?;
    let ctx = Context::build(cfg)?;
    let mut stepper = Stepper::new(&cfg.params, cfg.grid, cfg.dt, SimFrame::Full, &ctx.bg, &ctx.weights, &ctx.sponge)?;
    let mut f = [
        s.u.iter().zip(&ctx.bg.q).map(|(u, q)| u - q).collect(),
        s.v.clone(),
    ];
    stepper.step(&mut f);
    let out = StateField {
        grid: s.grid,
        u: f[0].iter().zip(&ctx.bg.q).map(|(p, q)| p + q).collect(),
        v: std::mem::take(&mut f[1]),
        t: s.t + cfg.dt,
    };
    if out.u.iter().chain(&out.v).any(|z| !z.is_finite()) {
        return Err(Error::NonFinite { t: out.t, last_good: Box::new((s.u.clone(), s.v.clone())) });
    }
    Ok(out)
}

/// Grid data shared by a run.
#[derive(Clone, Debug)]
pub struct Context {
    pub bg: Background,
    pub weights: FrameWeights,
    pub sponge: Vec<f64>,
}

impl Context {
    pub fn build(cfg: &SimConfig) -> Result<Self> {
        let bg = match cfg.background {
            BackgroundSpec::Front => Background::from_front(&cfg.grid, &solve_front_default(&cfg.params)?),
            BackgroundSpec::Constant(q) => Background::constant(&cfg.grid, q),
        };
        Ok(Context { bg, weights: FrameWeights::new(&cfg.grid, &cfg.params, cfg.theta()?), sponge: cfg.sponge.profile(&cfg.grid) })
    }
}

/// Initial field in the evolved frame.
pub fn initial_field(cfg: &SimConfig, w: &FrameWeights) -> Result<[Vec<f64>; 2]> {
    let g = &cfg.grid;
    let gauss = |c: f64, s: f64| -> Vec<f64> { g.xs().iter().map(|x| (-((x - c) / s).powi(2)).exp()).collect() };
    let mut f = match &cfg.ic {
        InitialCondition::Zero => [vec![0.0; g.n], vec![0.0; g.n]],
        InitialCondition::Gaussian { center, width, amplitude } => {
            let b = gauss(*center, *width);
            [b.iter().map(|v| v * amplitude[0]).collect(), b.iter().map(|v| v * amplitude[1]).collect()]
        }
        InitialCondition::SmallBump { center, width, delta, ratio } => {
            let delta = delta.unwrap_or(0.01 * cfg.params.mu.max(0.0).sqrt());
            // Normalise ‖u_iρ*³‖∞ in the U frame, then convert.
            let bump = |c: usize| -> Vec<f64> {
                let b = gauss(center[c], width[c]);
                let peak = b.iter().zip(&w.ln_rho).map(|(v, l)| v * (3.0 * l).exp()).fold(0.0, f64::max);
                let scale = if c == 0 { delta } else { delta * ratio };
                b.iter().map(|v| v * scale / peak).collect()
            };
            let field = PerturbationField { grid: *g, kind: PerturbationKind::U, first: bump(0), second: bump(1), t: 0.0 };
            let target = match cfg.frame {
                SimFrame::Full => PerturbationKind::P,
                SimFrame::Weighted => PerturbationKind::U,
            };
            let out = change_frame(&field, target, w)?;
            [out.first, out.second]
        }
        InitialCondition::Noise { center, width, amplitude, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let b = gauss(*center, *width);
            let mut draw = || -> Vec<f64> { b.iter().map(|v| v * amplitude * rng.random_range(-1.0..1.0)).collect() };
            let first = draw();
            [first, draw()]
        }
        InitialCondition::Custom { first, second } => [first.clone(), second.clone()],
    };
    clamp(&mut f[0]);
    clamp(&mut f[1]);
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKey {
    /// `‖U/ρ*‖∞` over both components.
    UOverRho,
    /// `‖V‖∞` over both components.
    VSup,
    /// `‖u₂‖∞`.
    U2Sup,
    /// `‖v‖∞` of the physical SH component.
    PatternSup,
}

impl SeriesKey {
    pub const ALL: [SeriesKey; 4] = [SeriesKey::UOverRho, SeriesKey::VSup, SeriesKey::U2Sup, SeriesKey::PatternSup];

    pub fn name(self) -> &'static str {
        match self {
            SeriesKey::UOverRho => "u_over_rho_sup",
            SeriesKey::VSup => "v_sup",
            SeriesKey::U2Sup => "u2_sup",
            SeriesKey::PatternSup => "pattern_sup",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub grid: Grid1D,
    pub t: Vec<f64>,
    pub u_over_rho: Vec<f64>,
    pub v_sup: Vec<f64>,
    pub u2_sup: Vec<f64>,
    pub pattern_sup: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    /// The wall-clock budget ran out before `t_end`.
    pub truncated: bool,
    pub steps: usize,
}

impl TimeSeries {
    pub fn get(&self, key: SeriesKey) -> &[f64] {
        match key {
            SeriesKey::UOverRho => &self.u_over_rho,
            SeriesKey::VSup => &self.v_sup,
            SeriesKey::U2Sup => &self.u2_sup,
            SeriesKey::PatternSup => &self.pattern_sup,
        }
    }
}

struct Recorder {
    to_u: Vec<f64>,
    to_v: Vec<f64>,
    to_p: Vec<f64>,
    inv_rho: Vec<f64>,
    q: Vec<f64>,
}

impl Recorder {
    fn record(&self, ts: &mut TimeSeries, t: f64, f: &[Vec<f64>; 2]) {
        let mut uor: f64 = 0.0;
        let mut vs: f64 = 0.0;
        let mut u2: f64 = 0.0;
        let mut pat: f64 = 0.0;
        for i in 0..f[0].len() {
            let (a, b) = (f[0][i] * self.to_u[i], f[1][i] * self.to_u[i]);
            uor = uor.max(a.abs().max(b.abs()) * self.inv_rho[i]);
            u2 = u2.max(b.abs());
            vs = vs.max((f[0][i] * self.to_v[i]).abs().max((f[1][i] * self.to_v[i]).abs()));
            pat = pat.max((f[1][i] * self.to_p[i]).abs());
        }
        ts.t.push(t);
        ts.u_over_rho.push(uor);
        ts.v_sup.push(vs);
        ts.u2_sup.push(u2);
        ts.pattern_sup.push(pat);
    }

    fn snapshot(&self, t: f64, f: &[Vec<f64>; 2]) -> Snapshot {
        Snapshot {
            t,
            u: f[0].iter().zip(&self.to_p).zip(&self.q).map(|((a, k), q)| q + a * k).collect(),
            v: f[1].iter().zip(&self.to_p).map(|(b, k)| b * k).collect(),
        }
    }
}

/// Runs `cfg` and records norms and snapshots. Front backgrounds require the hypothesis gate.
pub fn run_simulation(cfg: &SimConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    if cfg.background == BackgroundSpec::Front {
        require_gated(&cfg.params)?;
    }
    let ctx = Context::build(cfg)?;
    let mut stepper = Stepper::new(&cfg.params, cfg.grid, cfg.dt, cfg.frame, &ctx.bg, &ctx.weights, &ctx.sponge)?;
    let kind = stepper.kind();
    let rec = Recorder {
        to_u: ctx.weights.factors(kind, PerturbationKind::U),
        to_v: ctx.weights.factors(kind, PerturbationKind::V),
        to_p: ctx.weights.factors(kind, PerturbationKind::P),
        inv_rho: ctx.weights.ln_rho.iter().map(|l| (-l).exp()).collect(),
        q: ctx.bg.q.clone(),
    };
    let mut f = initial_field(cfg, &ctx.weights)?;
    let mut ts = TimeSeries {
        grid: cfg.grid,
        t: vec![],
        u_over_rho: vec![],
        v_sup: vec![],
        u2_sup: vec![],
        pattern_sup: vec![],
        snapshots: vec![],
        truncated: false,
        steps: 0,
    };
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let every = ((cfg.record / cfg.dt).round() as usize).max(1);
    let snap_every = if cfg.snapshot_every > 0.0 { ((cfg.snapshot_every / cfg.dt).round() as usize).max(1) } else { 0 };
    let budget = cfg.budget_secs.map(Duration::from_secs_f64);
    let start = Instant::now();
    rec.record(&mut ts, 0.0, &f);
    if snap_every > 0 {
        ts.snapshots.push(rec.snapshot(0.0, &f));
    }
    let mut last_good = f.clone();
    for k in 1..=steps {
        stepper.step(&mut f);
        let t = k as f64 * cfg.dt;
        ts.steps = k;
        if k % every == 0 || k == steps {
            if f[0].iter().chain(&f[1]).any(|z| !z.is_finite()) {
                let snap = rec.snapshot(t, &last_good);
                return Err(Error::NonFinite { t, last_good: Box::new((snap.u, snap.v)) });
            }
            last_good.clone_from(&f);
            rec.record(&mut ts, t, &f);
            if let Some(b) = budget {
                if start.elapsed() > b {
                    ts.truncated = true;
                    break;
                }
            }
        }
        if snap_every > 0 && k % snap_every == 0 {
            ts.snapshots.push(rec.snapshot(t, &f));
        }
    }
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::apply7;
    use proptest::prelude::*;

    fn small_cfg(frame: SimFrame, background: BackgroundSpec, ic: InitialCondition, t_end: f64) -> SimConfig {
        SimConfig {
            grid: Grid1D::with_spacing(-60.0, 40.0, 0.15, Frame::Comoving, false).unwrap(),
            t_end,
            ic,
            frame,
            background,
            snapshot_every: 0.0,
            sponge: Sponge::off(),
            ..SimConfig::preset(SystemParams::gate_preset())
        }
    }

    #[test]
    fn nonlinearity_examples() {
        let p = SystemParams { alpha: 1.0, ..SystemParams::gate_preset() };
        let (n1, n2) = weighted_nonlinearity(&p, 1.0, 1.0, 0.1, 0.0);
        assert!((n1 + 0.031).abs() < 1e-15);
        assert_eq!(n2, 0.0);
        let (n1, n2) = weighted_nonlinearity(&p, 0.7, 1.0, 0.0, 0.2);
        assert_eq!(n1, 0.0);
        assert!((n2 + p.sigma * 0.008).abs() < 1e-15);
    }

    #[test]
    fn weighted_nonlinearity_matches_conjugation() {
        let p = SystemParams::gate_preset();
        for (q, w, a, b) in [(0.3, 2.5, 0.1, -0.2), (0.9, 1e-3, 4.0, 7.0), (1.0, 1.0, 0.5, 0.5)] {
            let (n1, n2) = weighted_nonlinearity(&p, q, 1.0, w * a, w * b);
            let (m1, m2) = weighted_nonlinearity(&p, q, w, a, b);
            assert!((n1 / w - m1).abs() <= 1e-12 * m1.abs().max(1e-300));
            assert!((n2 / w - m2).abs() <= 1e-12 * m2.abs().max(1e-300));
        }
    }

    #[test]
    fn frame_round_trip_and_link() {
        let g = SimConfig::default_grid();
        let p = SystemParams::gate_preset();
        let w = FrameWeights::new(&g, &p, select_theta(&p).unwrap().theta);
        let u: Vec<f64> = g.xs().iter().map(|x| (x / 17.0).sin() * (-(x / 80.0).powi(2)).exp()).collect();
        let f = PerturbationField { grid: g, kind: PerturbationKind::U, first: u.clone(), second: u.clone(), t: 0.0 };
        let v = change_frame(&f, PerturbationKind::V, &w).unwrap();
        let back = change_frame(&v, PerturbationKind::U, &w).unwrap();
        for i in 0..g.n {
            assert!((back.first[i] - u[i]).abs() <= 1e-12 * u[i].abs());
        }
        let ones = PerturbationField { first: vec![1.0; g.n], second: vec![1.0; g.n], ..f.clone() };
        let v1 = change_frame(&ones, PerturbationKind::V, &w).unwrap();
        let sh = WeightSpec::new(WeightKind::OmegaSh, &p, w.theta);
        let rho = WeightSpec::new(WeightKind::RhoStar, &p, w.theta);
        for i in (0..g.n).step_by(97) {
            let x = g.x(i);
            let want = sh.eval(x) / rho.eval(x);
            assert!((v1.first[i] - want).abs() <= 1e-12 * want);
        }
        let zero = PerturbationField { first: vec![0.0; g.n], second: vec![0.0; g.n], ..f };
        let z = change_frame(&zero, PerturbationKind::V, &w).unwrap();
        assert!(z.first.iter().chain(&z.second).all(|v| *v == 0.0));
    }

    #[test]
    fn frame_change_guards_overflow() {
        let g = SimConfig::default_grid();
        let p = SystemParams::sim_preset();
        let w = FrameWeights::new(&g, &p, select_theta(&p).unwrap().theta);
        // P = 1 everywhere is far outside the weighted space: U = e^{x}·1 blows up on the right.
        let f = PerturbationField { grid: g, kind: PerturbationKind::P, first: vec![1.0; g.n], second: vec![0.0; g.n], t: 0.0 };
        assert!(matches!(change_frame(&f, PerturbationKind::U, &w), Err(Error::Overflow(_))));
    }

    #[test]
    fn sponge_is_passive_and_ramped() {
        let g = SimConfig::default_grid();
        let s = Sponge::default().profile(&g);
        assert!((s[0] - 5.0).abs() < 1e-12);
        assert_eq!(s[g.index_of(-360.0) + 1], 0.0);
        assert!(s.windows(2).all(|w| w[1] <= w[0]));
        assert!(sponge_term(&s, &vec![0.0; g.n]).iter().all(|v| *v == 0.0));
        assert!(Sponge::off().profile(&g).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn front_is_stationary() {
        let mut cfg = small_cfg(SimFrame::Full, BackgroundSpec::Front, InitialCondition::Zero, 50.0);
        cfg.sponge = Sponge::default();
        let ts = run_simulation(&cfg).unwrap();
        assert!(ts.u_over_rho.iter().all(|v| *v <= 1e-6));
        // The state-level step leaves the front untouched as well.
        let ctx = Context::build(&cfg).unwrap();
        let s = StateField { grid: cfg.grid, u: ctx.bg.q.clone(), v: vec![0.0; cfg.grid.n], t: 0.0 };
        let s1 = step_full(&s, &cfg).unwrap();
        let dev = s1.u.iter().zip(&ctx.bg.q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-12);
    }

    #[test]
    fn homogeneous_u_mode_relaxes_at_two_alpha() {
        let mut cfg = small_cfg(SimFrame::Full, BackgroundSpec::Constant(1.0), InitialCondition::Zero, 2.0);
        let n = cfg.grid.n;
        cfg.ic = InitialCondition::Custom { first: vec![1e-5; n], second: vec![0.0; n] };
        let ctx = Context::build(&cfg).unwrap();
        let mut st = Stepper::new(&cfg.params, cfg.grid, cfg.dt, cfg.frame, &ctx.bg, &ctx.weights, &ctx.sponge).unwrap();
        let mut f = initial_field(&cfg, &ctx.weights).unwrap();
        let mid = cfg.grid.index_of(-10.0);
        let steps = 200;
        for _ in 0..steps {
            st.step(&mut f);
        }
        let rate = -(f[0][mid] / 1e-5).ln() / (steps as f64 * cfg.dt);
        assert!((rate - 2.0 * cfg.params.alpha).abs() < 1e-3, "rate {rate}");
    }

    #[test]
    fn turing_mode_grows_at_mu_behind_the_front() {
        let mut cfg = small_cfg(SimFrame::Full, BackgroundSpec::Constant(1.0), InitialCondition::Zero, 10.0);
        cfg.params = SystemParams::sim_preset();
        cfg.grid = Grid1D::with_spacing(-300.0, 300.0, 0.15, Frame::Comoving, false).unwrap();
        let g = cfg.grid;
        let second: Vec<f64> = g.xs().iter().map(|x| 1e-6 * x.cos() * (-(x / 60.0).powi(2)).exp()).collect();
        cfg.ic = InitialCondition::Custom { first: vec![0.0; g.n], second };
        let ts = run_simulation(&cfg).unwrap();
        let (a0, a1) = (ts.pattern_sup[0], *ts.pattern_sup.last().unwrap());
        let rate = (a1 / a0).ln() / cfg.t_end;
        let mu = cfg.params.mu;
        assert!((rate - mu).abs() <= 0.1 * mu, "rate {rate}");
    }

    #[test]
    fn weighted_and_full_frames_agree() {
        let p = SystemParams::sim_preset();
        let mut cfg = small_cfg(SimFrame::Full, BackgroundSpec::Front, InitialCondition::Zero, 5.0);
        cfg.params = p.clone();
        cfg.grid = Grid1D::with_spacing(-40.0, 30.0, 0.1, Frame::Comoving, false).unwrap();
        let ctx = Context::build(&cfg).unwrap();
        let g = cfg.grid;
        let u0: Vec<f64> = g.xs().iter().map(|x| 0.05 * (-((x + 2.0) / 3.0).powi(2)).exp()).collect();
        let w = &ctx.weights;
        let as_p = change_frame(
            &PerturbationField { grid: g, kind: PerturbationKind::U, first: u0.clone(), second: u0.clone(), t: 0.0 },
            PerturbationKind::P,
            w,
        )
        .unwrap();
        let mut full = Stepper::new(&p, g, cfg.dt, SimFrame::Full, &ctx.bg, w, &ctx.sponge).unwrap();
        let mut weighted = Stepper::new(&p, g, cfg.dt, SimFrame::Weighted, &ctx.bg, w, &ctx.sponge).unwrap();
        let mut fp = [as_p.first, as_p.second];
        let mut fu = [u0.clone(), u0];
        for _ in 0..500 {
            full.step(&mut fp);
            weighted.step(&mut fu);
        }
        let back = change_frame(
            &PerturbationField { grid: g, kind: PerturbationKind::P, first: fp[0].clone(), second: fp[1].clone(), t: 5.0 },
            PerturbationKind::U,
            w,
        )
        .unwrap();
        let scale = fu[0].iter().chain(&fu[1]).fold(0.0_f64, |m, v| m.max(v.abs()));
        // Compare away from the clamped ends, where the two frames impose different boundary data.
        let (lo, hi) = (g.index_of(-30.0), g.index_of(20.0));
        let err = (lo..hi)
            .map(|i| (back.first[i] - fu[0][i]).abs().max((back.second[i] - fu[1][i]).abs()))
            .fold(0.0, f64::max);
        assert!(err <= 1e-3 * scale, "err {err:e} scale {scale:e}");
    }

    #[test]
    fn source_term_left_form_and_zero() {
        let p = SystemParams::gate_preset();
        let g = Grid1D::with_spacing(-40.0, 30.0, 0.1, Frame::Comoving, false).unwrap();
        let front = solve_front_default(&p).unwrap();
        let bg = Background::from_front(&g, &front);
        let w = FrameWeights::new(&g, &p, select_theta(&p).unwrap().theta);
        let v1: Vec<f64> = g.xs().iter().map(|x| 0.2 * (0.3 * x).sin()).collect();
        let v2: Vec<f64> = g.xs().iter().map(|x| 0.1 * (0.9 * x).cos()).collect();
        let f = PerturbationField { grid: g, kind: PerturbationKind::V, first: v1.clone(), second: v2.clone(), t: 0.0 };
        let s = source_term(&p, &f, &bg, &w).unwrap();
        for i in CLAMP..g.index_of(-1.0) {
            let omq = bg.one_minus_q[i];
            let want = (omq * 3.0 * p.alpha * (1.0 + bg.q[i]) * v1[i], -omq * p.gamma * v2[i]);
            assert!((s[0][i] - want.0).abs() <= 1e-10 * (1.0 + want.0.abs()));
            assert!((s[1][i] - want.1).abs() <= 1e-10 * (1.0 + want.1.abs()));
        }
        // Sampled bound on the right in terms of derivatives of V up to order three.
        let st = wide_4th(g.dx);
        for i in g.index_of(1.0)..g.n - CLAMP {
            let norm: f64 = (0..4).map(|k| apply7(&st[k], &v1, i).abs() + apply7(&st[k], &v2, i).abs()).sum();
            assert!(s[0][i].abs() + s[1][i].abs() <= 40.0 * norm.max(0.05));
        }
        let lit = source_term_from_definition(&p, &f, &bg, &w).unwrap();
        for i in CLAMP..g.n - CLAMP {
            let gap = 3.0 * p.alpha * bg.one_minus_q[i] * v1[i] * v1[i];
            assert!((lit[0][i] - s[0][i] - gap).abs() <= 1e-12 * (1.0 + s[0][i].abs()));
            assert_eq!(lit[1][i], s[1][i]);
        }
        let zero = PerturbationField { first: vec![0.0; g.n], second: vec![0.0; g.n], ..f };
        let s0 = source_term(&p, &zero, &bg, &w).unwrap();
        assert!(s0[0].iter().chain(&s0[1]).all(|v| *v == 0.0));
    }

    #[test]
    fn config_guards() {
        let cfg = SimConfig::preset(SystemParams::sim_preset());
        cfg.validate().unwrap();
        assert!(SimConfig { dt: 0.05, ..cfg.clone() }.validate().is_err());
        assert!(SimConfig { sponge: Sponge { width: 10.0, strength: 5.0 }, ..cfg.clone() }.validate().is_err());
        let coarse = Grid1D::with_spacing(-400.0, 200.0, 0.3, Frame::Comoving, false).unwrap();
        assert!(SimConfig { grid: coarse, ..cfg.clone() }.validate().is_err());
        let bad = SimConfig { params: SystemParams { gamma: 1.0, ..SystemParams::sim_preset() }, theta: Some(-0.01), t_end: 0.1, ..cfg };
        assert!(matches!(run_simulation(&bad), Err(Error::Gate(_))));
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let mut cfg = small_cfg(SimFrame::Weighted, BackgroundSpec::Front, InitialCondition::Zero, 0.0);
        cfg.ic = InitialCondition::Noise { center: 0.0, width: 5.0, amplitude: 1e-3, seed: 7 };
        let w = FrameWeights::new(&cfg.grid, &cfg.params, -0.01);
        assert_eq!(initial_field(&cfg, &w).unwrap(), initial_field(&cfg, &w).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn conjugation_by_exponential_is_a_shift(a in prop::array::uniform5(-3.0..3.0f64), k in -2.0..2.0f64) {
            // e^{-kx} (Σ a_j ∂^j) e^{kx} = Σ a_j (∂ + k)^j
            let r = [1.0, k, k * k, k.powi(3), k.powi(4)];
            let b = conjugate_coefficients(&a, &r);
            for z in [-1.3f64, 0.4, 2.0] {
                let lhs: f64 = (0..5).map(|j| b[j] * z.powi(j as i32)).sum();
                let rhs: f64 = (0..5).map(|j| a[j] * (z + k).powi(j as i32)).sum();
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            }
        }
    }
}
