//! Critical/stable mode filters for the constant-coefficient operator behind the front.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::params::SystemParams;
use crate::spectrum::Fourier;

/// `C^∞` transition from 0 (s ≤ 0) to 1 (s ≥ 1) built from `exp(−1/s)`.
pub fn smooth_step(s: f64) -> f64 {
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = f(s);
        a / (a + f(1.0 - s))
    }
}

/// Even cutoff in ξ: 1 for |ξ| ∈ [inner_lo, inner_hi], 0 outside (outer_lo, outer_hi).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub inner_lo: f64,
    pub inner_hi: f64,
    pub outer_lo: f64,
    pub outer_hi: f64,
}

impl Cutoff {
    pub const fn new(outer_lo: f64, inner_lo: f64, inner_hi: f64, outer_hi: f64) -> Self {
        Cutoff { inner_lo, inner_hi, outer_lo, outer_hi }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= self.outer_lo || a >= self.outer_hi {
            0.0
        } else if a < self.inner_lo {
            smooth_step((a - self.outer_lo) / (self.inner_lo - self.outer_lo))
        } else if a > self.inner_hi {
            smooth_step((self.outer_hi - a) / (self.outer_hi - self.inner_hi))
        } else {
            1.0
        }
    }

    /// Does the closed support meet `|ξ| = a`?
    pub fn supports(&self, a: f64) -> bool {
        a > self.outer_lo && a < self.outer_hi
    }
}

pub const CHI_C: Cutoff = Cutoff::new(0.75, 0.875, 1.125, 1.25);
pub const CHI_C_H: Cutoff = Cutoff::new(0.5, 0.75, 1.25, 1.5);
pub const CHI_S_H: Cutoff = Cutoff::new(0.875, 0.9375, 1.0625, 1.125);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigendata {
    pub lambda_c: f64,
    pub lambda_s: f64,
    pub rho_c: [f64; 2],
    pub rho_s: [f64; 2],
    pub rho_c_star: [f64; 2],
    pub rho_s_star: [f64; 2],
}

/// Eigen-decomposition of the triangular symbol `[[−dξ²−2α, β], [0, −(1−ξ²)²+μ]]`.
pub fn eigendata(p: &SystemParams<f64>, xi: f64) -> Result<Eigendata> {
    let x2 = xi * xi;
    let lambda_s = -p.d * x2 - 2.0 * p.alpha;
    let lambda_c = -(1.0 - x2).powi(2) + p.mu;
    let gap = lambda_c - lambda_s;
    if gap.abs() < 1e-12 {
        return Err(Error::Collision(format!("critical and stable eigenvalues meet at ξ = {xi}")));
    }
    Ok(Eigendata {
        lambda_c,
        lambda_s,
        rho_c: [p.beta, gap],
        rho_s: [1.0, 0.0],
        rho_c_star: [0.0, 1.0 / gap],
        rho_s_star: [1.0, -p.beta / gap],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    C,
    S,
    CH,
    SH,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeFilterSpec {
    pub params: SystemParams<f64>,
    pub chi_c: Cutoff,
    pub chi_c_h: Cutoff,
    pub chi_s_h: Cutoff,
}

type Mat2 = [[f64; 2]; 2];

fn critical_projector(e: &Eigendata) -> Mat2 {
    let (r, s) = (e.rho_c, e.rho_c_star);
    [[r[0] * s[0], r[0] * s[1]], [r[1] * s[0], r[1] * s[1]]]
}

impl ModeFilterSpec {
    pub fn new(params: SystemParams<f64>) -> Self {
        ModeFilterSpec { params, chi_c: CHI_C, chi_c_h: CHI_C_H, chi_s_h: CHI_S_H }
    }

    /// Per-bin filter matrix; the stable filters are written as `I − χ Π₁` so that Π₁ is only
    /// needed on the support of χ.
    pub fn matrix(&self, kind: FilterKind, xi: f64) -> Result<Mat2> {
        let (chi, complement) = match kind {
            FilterKind::C => (self.chi_c.eval(xi), false),
            FilterKind::CH => (self.chi_c_h.eval(xi), false),
            FilterKind::S => (self.chi_c.eval(xi), true),
            FilterKind::SH => (self.chi_s_h.eval(xi), true),
        };
        let pi = if chi == 0.0 { [[0.0; 2]; 2] } else { critical_projector(&eigendata(&self.params, xi)?) };
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let v = chi * pi[i][j];
                m[i][j] = if complement { f64::from(u8::from(i == j)) - v } else { v };
            }
        }
        Ok(m)
    }

    fn check_grid(grid: &Grid1D) -> Result<()> {
        if !grid.periodic {
            return Err(Error::Unsupported("mode filters need a periodic grid".into()));
        }
        let periods = grid.length() / (2.0 * std::f64::consts::PI);
        if (periods - periods.round()).abs() > 1e-9 {
            return Err(Error::GridMismatch("periodic length must be a multiple of 2π".into()));
        }
        if grid.dx > 0.2 {
            return Err(Error::Underresolved(format!("dx = {} > 0.2", grid.dx)));
        }
        Ok(())
    }

    /// Applies a matrix filter to a real field pair; the imaginary residue is discarded.
    pub fn project(&self, grid: &Grid1D, v: [&[f64]; 2], kind: FilterKind) -> Result<[Vec<f64>; 2]> {
        Self::check_grid(grid)?;
        let fr = Fourier::new(grid)?;
        let h = [fr.forward_real(v[0]), fr.forward_real(v[1])];
        let mut out = [vec![Complex64::new(0.0, 0.0); grid.n], vec![Complex64::new(0.0, 0.0); grid.n]];
        for (j, &xi) in fr.xi.iter().enumerate() {
            let m = self.matrix(kind, xi)?;
            out[0][j] = h[0][j] * m[0][0] + h[1][j] * m[0][1];
            out[1][j] = h[0][j] * m[1][0] + h[1][j] * m[1][1];
        }
        Ok(out.map(|c| fr.inverse(&c).into_iter().map(|z| z.re).collect()))
    }

    /// Scalar one-sided critical amplitude `π₁ʰ`.
    pub fn pi1h(&self, grid: &Grid1D, v: [&[f64]; 2]) -> Result<Vec<Complex64>> {
        Self::check_grid(grid)?;
        let fr = Fourier::new(grid)?;
        let h = [fr.forward_real(v[0]), fr.forward_real(v[1])];
        let anchor = eigendata(&self.params, 1.0)?;
        let mut out = vec![Complex64::new(0.0, 0.0); grid.n];
        for (j, &xi) in fr.xi.iter().enumerate() {
            let chi = self.chi_c_h.eval(xi);
            if xi <= 0.0 || chi == 0.0 {
                continue;
            }
            let e = eigendata(&self.params, xi)?;
            let s = e.rho_c_star;
            let num = h[0][j] * s[0] + h[1][j] * s[1];
            let den = anchor.rho_c[0] * s[0] + anchor.rho_c[1] * s[1];
            out[j] = num * (chi / den);
        }
        Ok(fr.inverse(&out))
    }

    /// `‖Π_c B(Π_c V₁, Π_c V₂)‖∞ / (‖V₁‖∞ ‖V₂‖∞)` with the quadratic form of the amplitude expansion.
    pub fn quadratic_vanishing_check(&self, grid: &Grid1D, v1: [&[f64]; 2], v2: [&[f64]; 2]) -> Result<f64> {
        let a = self.project(grid, v1, FilterKind::C)?;
        let b = self.project(grid, v2, FilterKind::C)?;
        let (al, ga) = (self.params.alpha, self.params.gamma);
        let q0: Vec<f64> = (0..grid.n).map(|i| -3.0 * al * a[0][i] * b[0][i]).collect();
        let q1: Vec<f64> = (0..grid.n).map(|i| 0.5 * ga * (a[0][i] * b[1][i] + a[1][i] * b[0][i])).collect();
        let r = self.project(grid, [&q0, &q1], FilterKind::C)?;
        let sup = |f: &[f64]| f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let num = sup(&r[0]).max(sup(&r[1]));
        let den = sup(v1[0]).max(sup(v1[1])) * sup(v2[0]).max(sup(v2[1]));
        Ok(if den == 0.0 { 0.0 } else { num / den })
    }

    /// Largest per-bin operator norms of `e^{tT̂}Π̂_cʰ` and `e^{tT̂}Π̂_sʰ` over the given bins.
    pub fn semigroup_norms(&self, xi: &[f64], t: f64) -> Result<(f64, f64)> {
        let mut crit: f64 = 0.0;
        let mut stab: f64 = 0.0;
        for &x in xi {
            let e = self.symbol_exp(x, t);
            crit = crit.max(norm2(&mul(&e, &self.matrix(FilterKind::CH, x)?)));
            stab = stab.max(norm2(&mul(&e, &self.matrix(FilterKind::SH, x)?)));
        }
        Ok((crit, stab))
    }

    /// `exp(t T̂(ξ))` in closed form for the triangular symbol.
    pub fn symbol_exp(&self, xi: f64, t: f64) -> Mat2 {
        let p = &self.params;
        let a = -p.d * xi * xi - 2.0 * p.alpha;
        let c = -(1.0 - xi * xi).powi(2) + p.mu;
        let (ea, ec) = ((a * t).exp(), (c * t).exp());
        let dd = if ((a - c) * t).abs() < 1e-8 { t * (0.5 * (a + c) * t).exp() } else { (ea - ec) / (a - c) };
        [[ea, p.beta * dd], [0.0, ec]]
    }
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

/// Spectral norm of a real 2×2 matrix.
pub fn norm2(m: &Mat2) -> f64 {
    let s11 = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let s22 = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let s12 = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let tr = s11 + s22;
    let det = s11 * s22 - s12 * s12;
    (0.5 * (tr + (tr * tr - 4.0 * det).max(0.0).sqrt())).sqrt()
}
