//! Exponential and algebraic weights, weighted sup norms and uniformly local norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field1D, Frame, Grid1D};
use crate::jet::Jet;
use crate::params::SystemParams;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    OmegaKpp,
    OmegaSh,
    RhoStar,
    Varpi,
    OmegaStar,
    RhoUl,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec<T> {
    pub kind: WeightKind,
    pub c_star: T,
    pub d: T,
    pub theta: T,
    /// Evaluate `1/w` instead of `w`.
    pub reciprocal: bool,
}

/// `S(s) = s⁵(126 − 420s + 540s² − 315s³ + 70s⁴)`: C⁴ step from 0 to 1 on [0, 1].
const STEP: [f64; 10] = [0.0, 0.0, 0.0, 0.0, 0.0, 126.0, -420.0, 540.0, -315.0, 70.0];
/// `∫₀ˢ S`, equal to 1/2 at s = 1.
const STEP_INTEGRAL: [f64; 11] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 21.0, -60.0, 67.5, -35.0, 7.0];

fn coeffs<T: Real>(c: &[f64]) -> Vec<T> {
    c.iter().map(|&v| T::lit(v)).collect()
}

/// Smooth step in `x`: 0 for x ≤ −1, 1 for x ≥ 1.
pub fn step_jet<T: Real>(x: T) -> Jet<T> {
    let one = T::one();
    if x <= -one {
        Jet::constant(T::zero())
    } else if x >= one {
        Jet::constant(one)
    } else {
        let s = Jet::variable(x).add_const(one).scale(T::lit(0.5));
        s.poly(&coeffs::<T>(&STEP))
    }
}

/// Smoothed `max(x, 0)`: 0 for x ≤ −1 and x for x ≥ 1, with derivative equal to the step.
pub fn ramp_jet<T: Real>(x: T) -> Jet<T> {
    let one = T::one();
    if x <= -one {
        Jet::constant(T::zero())
    } else if x >= one {
        Jet::variable(x)
    } else {
        let s = Jet::variable(x).add_const(one).scale(T::lit(0.5));
        s.poly(&coeffs::<T>(&STEP_INTEGRAL)).scale(T::int(2))
    }
}

impl<T: Real> WeightSpec<T> {
    pub fn new(kind: WeightKind, p: &SystemParams<T>, theta: T) -> Self {
        WeightSpec { kind, c_star: p.c_star(), d: p.d, theta, reciprocal: false }
    }

    pub fn reciprocal(self) -> Self {
        WeightSpec { reciprocal: !self.reciprocal, ..self }
    }

    fn rate(&self) -> T {
        self.c_star / (T::int(2) * self.d)
    }

    /// Jet of `ln w` at `x`.
    pub fn log_jet(&self, x: T) -> Jet<T> {
        let one = T::one();
        let lg = match self.kind {
            WeightKind::OmegaKpp => ramp_jet(x).scale(-self.rate()),
            WeightKind::OmegaSh => (Jet::variable(x) - ramp_jet(x)).scale(self.theta),
            WeightKind::RhoStar => {
                let y = Jet::variable(x);
                step_jet(x) * (y * y).add_const(one).ln().scale(T::lit(0.5))
            }
            WeightKind::Varpi => {
                WeightSpec { kind: WeightKind::RhoStar, reciprocal: false, ..*self }.log_jet(x)
                    + WeightSpec { kind: WeightKind::OmegaKpp, reciprocal: false, ..*self }.log_jet(x)
            }
            WeightKind::OmegaStar => {
                WeightSpec { kind: WeightKind::OmegaKpp, reciprocal: false, ..*self }.log_jet(x)
                    + WeightSpec { kind: WeightKind::OmegaSh, reciprocal: false, ..*self }.log_jet(x)
            }
            WeightKind::RhoUl => {
                let y = Jet::variable(x);
                -(y * y).add_const(one).ln()
            }
        };
        if self.reciprocal {
            -lg
        } else {
            lg
        }
    }

    /// Jet of the weight itself (derivatives of order 0..=4).
    pub fn jet(&self, x: T) -> Jet<T> {
        self.log_jet(x).exp()
    }

    pub fn eval(&self, x: T) -> T {
        self.log_jet(x).value().exp()
    }

    /// `w^{(k)}/w` for k = 0..=4, computed without forming huge or tiny weights.
    pub fn log_derivative_ratios(&self, x: T) -> [T; 5] {
        let mut g = self.log_jet(x);
        g.c[0] = T::zero();
        g.exp().derivatives()
    }
}

/// `max_x |f(x)|·w(x)` over the grid.
pub fn weighted_sup_norm(f: &Field1D<f64>, w: &WeightSpec<f64>) -> Result<f64> {
    if f.grid.frame != Frame::Comoving {
        return Err(Error::GridMismatch("weights live in the co-moving frame".into()));
    }
    Ok(f.values.iter().enumerate().map(|(i, v)| v.abs() * w.eval(f.grid.x(i))).fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UlNorm {
    pub value: f64,
    /// Set when `dx > 0.5`, where the quadrature is unreliable.
    pub coarse: bool,
}

/// Uniformly local `H^s` norm (s ∈ {0, 1}) of a vector of real components on one grid.
///
/// Window centres run over grid nodes; periodic grids use the nearest-image distance.
pub fn ul_sobolev_norm_components(grid: &Grid1D, comps: &[&[f64]], s: u8) -> Result<UlNorm> {
    if s > 1 {
        return Err(Error::Unsupported(format!("uniformly local norm of order {s}")));
    }
    for c in comps {
        if c.len() != grid.n {
            return Err(Error::GridMismatch("component length differs from grid".into()));
        }
    }
    let n = grid.n;
    let mut density = vec![0.0; n];
    for c in comps {
        for (d, v) in density.iter_mut().zip(c.iter()) {
            *d += v * v;
        }
        if s == 1 {
            let g = crate::grid::gradient(grid, c);
            for (d, v) in density.iter_mut().zip(&g) {
                *d += v * v;
            }
        }
    }
    let len = grid.length();
    let h = grid.dx;
    let window = |dist: f64| {
        let r = 1.0 / (1.0 + dist * dist);
        r * r
    };
    let best = (0..n)
        .map(|j| {
            let y = grid.x(j);
            let mut acc = 0.0;
            for (i, d) in density.iter().enumerate() {
                let mut dist = grid.x(i) - y;
                if grid.periodic {
                    dist -= len * (dist / len).round();
                }
                let wgt = if !grid.periodic && (i == 0 || i == n - 1) { 0.5 } else { 1.0 };
                acc += wgt * window(dist) * d;
            }
            acc * h
        })
        .fold(0.0, f64::max);
    Ok(UlNorm { value: best.sqrt(), coarse: h > 0.5 })
}

pub fn ul_sobolev_norm(f: &Field1D<f64>, s: u8) -> Result<UlNorm> {
    ul_sobolev_norm_components(&f.grid, &[&f.values], s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fixture(kind: WeightKind) -> WeightSpec<f64> {
        WeightSpec { kind, c_star: 2.0, d: 1.0, theta: -0.13, reciprocal: false }
    }

    #[test]
    fn printed_values() {
        let w = fixture(WeightKind::OmegaKpp);
        assert_eq!(w.eval(-2.0), 1.0);
        assert!((w.eval(2.0) - (-2.0f64).exp()).abs() < 1e-15);
        assert!((fixture(WeightKind::RhoStar).eval(1.0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(fixture(WeightKind::RhoUl).eval(0.0), 1.0);
        assert!((fixture(WeightKind::RhoUl).eval(3.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn branches_exact_outside_blend() {
        let sh = fixture(WeightKind::OmegaSh);
        assert!((sh.eval(-3.0) - (-0.13f64 * -3.0).exp()).abs() < 1e-15);
        assert_eq!(sh.eval(1.0), 1.0);
        assert_eq!(sh.eval(4.0), 1.0);
        assert_eq!(fixture(WeightKind::Varpi).eval(-1.0), 1.0);
        assert_eq!(fixture(WeightKind::Varpi).eval(-7.5), 1.0);
        let st = fixture(WeightKind::OmegaStar);
        for x in [-5.0, -1.0] {
            assert!((st.eval(x) - (-0.13 * x).exp()).abs() < 1e-14);
        }
        for x in [1.0, 3.0] {
            assert!((st.eval(x) - (-x).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn blend_monotone_and_positive() {
        let kpp = fixture(WeightKind::OmegaKpp);
        let sh = fixture(WeightKind::OmegaSh);
        let rho = fixture(WeightKind::RhoStar);
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for i in 0..=400 {
            let x = -1.0 + i as f64 * 0.005;
            let (a, b) = (kpp.eval(x), sh.eval(x));
            assert!(a <= prev.0 && b <= prev.1);
            assert!(rho.eval(x) >= 1.0);
            prev = (a, b);
        }
    }

    #[test]
    fn seams_are_smooth() {
        for kind in [WeightKind::OmegaKpp, WeightKind::OmegaSh, WeightKind::RhoStar, WeightKind::Varpi] {
            let w = fixture(kind);
            for seam in [-1.0, 1.0] {
                let l = w.jet(seam - 1e-9).derivatives();
                let r = w.jet(seam + 1e-9).derivatives();
                for k in 0..5 {
                    assert!((l[k] - r[k]).abs() < 1e-6, "{kind:?} k={k} at {seam}: {} vs {}", l[k], r[k]);
                }
            }
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let w = fixture(WeightKind::Varpi);
        let h = 1e-4;
        for x in [-0.7, -0.2, 0.3, 0.9, 2.0] {
            let d = w.jet(x).derivatives();
            let fd = (w.eval(x + h) - w.eval(x - h)) / (2.0 * h);
            let fd2 = (w.eval(x + h) - 2.0 * w.eval(x) + w.eval(x - h)) / (h * h);
            assert!((d[1] - fd).abs() < 1e-7);
            assert!((d[2] - fd2).abs() < 1e-5);
        }
    }

    #[test]
    fn weighted_sup_norm_cases() {
        let g = Grid1D::with_points(-20.0, 20.0, 400, Frame::Comoving, false).unwrap();
        let rho = fixture(WeightKind::RhoStar);
        let zero = Field1D::from_fn(g, |_| 0.0);
        assert_eq!(weighted_sup_norm(&zero, &rho).unwrap(), 0.0);
        let f = Field1D::from_fn(g, |x| 1.0 / rho.eval(x));
        assert!((weighted_sup_norm(&f, &rho).unwrap() - 1.0).abs() < 1e-14);
        let sh = fixture(WeightKind::OmegaSh);
        let f = Field1D::from_fn(g, |x| sh.eval(x) * x.sin());
        let n = weighted_sup_norm(&f, &sh.reciprocal()).unwrap();
        assert!((n - 1.0).abs() < 1e-3);
        let lab = Grid1D { frame: Frame::Lab, ..g };
        assert!(weighted_sup_norm(&Field1D::from_fn(lab, |_| 1.0), &rho).is_err());
    }

    #[test]
    fn ul_norm_of_constant() {
        let g = Grid1D::with_points(-200.0, 200.0, 8000, Frame::Lab, true).unwrap();
        let f = Field1D::from_fn(g, |_| 1.0);
        let n = ul_sobolev_norm(&f, 0).unwrap();
        let want = (std::f64::consts::PI / 2.0).sqrt();
        assert!((n.value - want).abs() < 1e-4, "{}", n.value);
        assert!(!n.coarse);
    }

    #[test]
    fn ul_norm_translation_invariant() {
        let g = Grid1D::with_points(0.0, 32.0 * std::f64::consts::PI, 1024, Frame::Lab, true).unwrap();
        let f: Vec<f64> = g.xs().iter().map(|x| (x / 4.0).sin() + 0.3 * (x / 2.0).cos()).collect();
        let mut shifted = f.clone();
        shifted.rotate_right(37);
        let a = ul_sobolev_norm_components(&g, &[&f], 1).unwrap().value;
        let b = ul_sobolev_norm_components(&g, &[&shifted], 1).unwrap().value;
        assert!((a - b).abs() < 1e-10 * a);
    }

    proptest! {
        #[test]
        fn ul_norm_sandwiches_sup_norm(
            amps in proptest::collection::vec(-1.0f64..1.0, 6),
            phases in proptest::collection::vec(0.0f64..6.28, 6),
        ) {
            let g = Grid1D::with_points(0.0, 16.0 * std::f64::consts::PI, 512, Frame::Lab, true).unwrap();
            let f: Vec<f64> = g.xs().iter().map(|x| {
                amps.iter().zip(&phases).enumerate().map(|(k, (a, p))| a * ((k as f64 + 1.0) * x / 8.0 + p).cos()).sum()
            }).collect();
            let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let ul = ul_sobolev_norm_components(&g, &[&f], 1).unwrap().value;
            // Sobolev embedding on unit windows: ‖f‖∞ ≤ 2‖f‖_{H¹_ul} is ample here.
            prop_assert!(0.5 * sup <= 2.0 * ul + 1e-12);
            let ul0 = ul_sobolev_norm_components(&g, &[&f], 0).unwrap().value;
            prop_assert!(ul0 <= (std::f64::consts::PI / 2.0).sqrt() * sup * (1.0 + 1e-9) + 1e-12);
        }
    }
}
