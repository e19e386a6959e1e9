//! Model parameters, the two γ thresholds and the hypothesis gate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::{Real, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams<T> {
    pub d: T,
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub sigma: T,
    pub mu: T,
    pub mu0: T,
}

impl SystemParams<f64> {
    /// Gate preset: small coupling, strong cubic saturation, γ inside the admissible window.
    pub fn gate_preset() -> Self {
        SystemParams { d: 1.0, alpha: 1.0, beta: 0.1, gamma: 12.0, sigma: 10.0, mu: 0.0, mu0: 0.01 }
    }

    /// Simulation preset; μ₀ is raised so that μ = 0.1 passes the gate.
    pub fn sim_preset() -> Self {
        SystemParams { mu: 0.1, mu0: 0.15, ..Self::gate_preset() }
    }
}

impl<T: Scalar> SystemParams<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let checks = [
            (self.d > z, "d must be positive"),
            (self.alpha > z, "alpha must be positive"),
            (self.sigma > z, "sigma must be positive"),
            (self.gamma > z, "gamma must be positive"),
            (self.beta != z, "beta must be nonzero"),
            (self.mu0 > z, "mu0 must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Domain(msg.into()));
            }
        }
        Ok(())
    }

    pub fn with_gamma(&self, gamma: T) -> Self {
        SystemParams { gamma, ..self.clone() }
    }

    pub fn with_mu(&self, mu: T) -> Self {
        SystemParams { mu, ..self.clone() }
    }
}

impl<T: Real> SystemParams<T> {
    pub fn c_star(&self) -> T {
        T::int(2) * (self.d * self.alpha).sqrt()
    }

    /// Decay rate `c*/(2d)` of the front tail.
    pub fn front_rate(&self) -> T {
        self.c_star() / (T::int(2) * self.d)
    }

    /// ε = √μ; zero for μ ≤ 0.
    pub fn epsilon(&self) -> T {
        self.mu.max(T::zero()).sqrt()
    }
}

pub fn critical_speed<T: Real>(p: &SystemParams<T>) -> Result<T> {
    if !(p.d > T::zero()) || !(p.alpha > T::zero()) {
        return Err(Error::Domain("critical speed needs d > 0 and alpha > 0".into()));
    }
    Ok(p.c_star())
}

pub fn gamma_rem<T: Scalar>(p: &SystemParams<T>) -> Result<T> {
    if !(p.d > T::zero()) {
        return Err(Error::Domain("gamma_rem needs d > 0".into()));
    }
    let r = p.alpha.clone() / p.d.clone();
    Ok(T::int(8) * r.clone() * r.clone() + T::int(4) * r - T::int(2) * p.alpha.clone() + p.mu0.clone())
}

/// The constant `a` of the γ² term.
pub fn gl_a<T: Scalar>(p: &SystemParams<T>) -> T {
    let (d, al) = (p.d.clone(), p.alpha.clone());
    let s = d.clone() + T::int(2) * al.clone();
    let q = T::int(4) * d + T::int(2) * al.clone();
    T::int(19) / T::int(9) + s * (T::one() / al + T::one() / (T::int(9) * q))
}

/// `P` as a quadratic polynomial in γ.
pub fn gl_cubic_polynomial<T: Scalar>(p: &SystemParams<T>) -> Poly<T> {
    let (d, al, b, sg) = (p.d.clone(), p.alpha.clone(), p.beta.clone(), p.sigma.clone());
    let b2 = b.clone() * b;
    let s = d.clone() + T::int(2) * al.clone();
    let q = T::int(4) * d + T::int(2) * al.clone();
    let c0 = -(T::int(3) * sg * s.clone() * s);
    let c1 = -(T::int(3) * b2.clone() * (T::one() + al / q));
    let c2 = gl_a(p) * b2;
    Poly::new(vec![c0, c1, c2])
}

pub fn gl_cubic_coefficient<T: Scalar>(p: &SystemParams<T>, gamma: T) -> T {
    gl_cubic_polynomial(p).eval(gamma)
}

/// Positive root of `P`.
pub fn gamma_gl<T: Real>(p: &SystemParams<T>) -> Result<T> {
    p.validate()?;
    let (d, al) = (p.d, p.alpha);
    let two = T::int(2);
    let three = T::int(3);
    let a = gl_a(p);
    let q = T::int(4) * d + two * al;
    let s = d + two * al;
    let h = three * (T::int(4) * d + three * al) / (two * a * q);
    let disc = h * h + three * p.sigma * s * s / (a * p.beta * p.beta);
    Ok(h + disc.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport<T> {
    pub c_star: T,
    pub gamma_rem: T,
    pub gamma_gl: T,
    pub admissible: bool,
    pub gamma_interval: Option<(T, T)>,
    pub p_of_gamma: T,
}

pub fn check_hypotheses<T: Real>(p: &SystemParams<T>) -> Result<GateReport<T>> {
    p.validate()?;
    let c_star = critical_speed(p)?;
    let g_rem = gamma_rem(p)?;
    let g_gl = gamma_gl(p)?;
    let interval = (g_rem < g_gl).then_some((g_rem, g_gl));
    let admissible = interval.is_some() && p.gamma > g_rem && p.gamma < g_gl;
    Ok(GateReport {
        c_star,
        gamma_rem: g_rem,
        gamma_gl: g_gl,
        admissible,
        gamma_interval: interval,
        p_of_gamma: gl_cubic_coefficient(p, p.gamma),
    })
}

/// Refuses parameters that fail the gate or violate `0 ≤ μ < μ₀`.
pub fn require_gated<T: Real>(p: &SystemParams<T>) -> Result<GateReport<T>> {
    let r = check_hypotheses(p)?;
    if !r.admissible {
        return Err(Error::Gate(format!(
            "gamma = {:?} outside ({:?}, {:?})",
            p.gamma, r.gamma_rem, r.gamma_gl
        )));
    }
    if p.mu < T::zero() || p.mu >= p.mu0 {
        return Err(Error::Gate(format!("mu = {:?} outside [0, mu0 = {:?})", p.mu, p.mu0)));
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet<T> {
    pub points: Vec<(T, T)>,
    pub sigma0: T,
}

/// Right-hand sides of the kinetics with all derivatives dropped.
pub fn kinetics<T: Real>(p: &SystemParams<T>, u: T, v: T) -> (T, T) {
    let one = T::one();
    let f = p.alpha * u * (one - u * u) + p.beta * v;
    let g = -v + p.mu * v - p.sigma * v * v * v - p.gamma * v * (one - u);
    (f, g)
}

pub fn equilibria<T: Real>(p: &SystemParams<T>) -> Result<EquilibriumSet<T>> {
    p.validate()?;
    let one = T::one();
    if p.mu >= one {
        return Err(Error::Domain("equilibria need mu < 1".into()));
    }
    let two = T::int(2);
    let t = p.gamma * p.beta / (two * p.alpha);
    let sigma0 = t * t / (T::int(4) * (one - p.mu));
    let mut points = vec![(T::zero(), T::zero()), (one, T::zero()), (-one, T::zero())];
    if p.sigma <= sigma0 {
        for v in nontrivial_roots(p) {
            let u = one + (one - p.mu + p.sigma * v * v) / p.gamma;
            points.push((u, v));
        }
    }
    Ok(EquilibriumSet { points, sigma0 })
}

/// Signed gap between the two nullclines, parametrised by v.
pub fn nullcline_gap<T: Real>(p: &SystemParams<T>, v: T) -> T {
    let one = T::one();
    let u = one + (one - p.mu + p.sigma * v * v) / p.gamma;
    p.alpha / p.beta * u * (u * u - one) - v
}

fn nontrivial_roots<T: Real>(p: &SystemParams<T>) -> Vec<T> {
    let samples = 20_000;
    let vmax = (p.gamma * p.beta / (p.alpha * p.sigma)).abs();
    let sign = if p.beta > T::zero() { T::one() } else { -T::one() };
    let at = |i: usize| sign * vmax * T::from_usize(i).unwrap() / T::from_usize(samples).unwrap();
    let mut roots = Vec::new();
    let mut prev_v = at(1);
    let mut prev_g = nullcline_gap(p, prev_v);
    for i in 2..=samples {
        let v = at(i);
        let g = nullcline_gap(p, v);
        if g == T::zero() {
            roots.push(v);
        } else if (prev_g < T::zero()) != (g < T::zero()) && prev_g != T::zero() {
            let (mut lo, mut hi, mut glo) = (prev_v, v, prev_g);
            for _ in 0..200 {
                let mid = (lo + hi) / T::int(2);
                let gm = nullcline_gap(p, mid);
                if (gm < T::zero()) == (glo < T::zero()) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
                if (hi - lo).abs() <= T::lit(1e-12) * vmax {
                    break;
                }
            }
            roots.push((lo + hi) / T::int(2));
        }
        prev_v = v;
        prev_g = g;
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;
    use proptest::prelude::*;

    #[test]
    fn critical_speed_values() {
        let p = SystemParams::gate_preset();
        assert_eq!(critical_speed(&p).unwrap(), 2.0);
        assert_eq!(critical_speed(&SystemParams { d: 4.0, ..p.clone() }).unwrap(), 4.0);
        assert!(critical_speed(&SystemParams { alpha: 0.0, ..p }).is_err());
    }

    #[test]
    fn gamma_rem_values() {
        let p = SystemParams::gate_preset();
        assert!((gamma_rem(&p).unwrap() - 10.01).abs() < 1e-13);
        let q = SystemParams { d: 2.0, mu0: 0.0, ..p };
        assert_eq!(gamma_rem(&q).unwrap(), 2.0);
    }

    #[test]
    fn gamma_rem_first_terms_depend_on_ratio_only() {
        let p = SystemParams::gate_preset();
        let q = SystemParams { d: 3.0, alpha: 3.0, ..p.clone() };
        let strip = |s: &SystemParams<f64>| gamma_rem(s).unwrap() + 2.0 * s.alpha - s.mu0;
        assert!((strip(&p) - strip(&q)).abs() < 1e-12);
    }

    #[test]
    fn cubic_at_zero_and_root() {
        let p = SystemParams::gate_preset();
        let c0 = gl_cubic_coefficient(&p, 0.0);
        assert!((c0 + 3.0 * 10.0 * 9.0).abs() < 1e-12);
        let g = gamma_gl(&p).unwrap();
        let scale = 3.0 * 10.0 * 9.0;
        assert!(gl_cubic_coefficient(&p, g).abs() < 1e-12 * scale);
    }

    #[test]
    fn exact_root_of_printed_threshold() {
        // With β² chosen so that the discriminant is a perfect square, γ_GL is rational.
        let r = |n, d| Rational64::new(n, d);
        let p = SystemParams { d: r(1, 1), alpha: r(1, 1), beta: r(1, 1), gamma: r(1, 1), sigma: r(1, 1), mu: r(0, 1), mu0: r(1, 100) };
        let poly = gl_cubic_polynomial(&p);
        let a = gl_a(&p);
        assert_eq!(a, r(19, 9) + r(3, 1) * (r(1, 1) + r(1, 54)));
        // Exact cross-check of the closed form on the quadratic: the product of roots equals c0/c2.
        let h = r(3, 1) * r(7, 1) / (r(2, 1) * a * r(6, 1));
        let disc = h * h + r(3, 1) * r(9, 1) / a;
        assert_eq!(poly.coeff(1) / poly.coeff(2), -(h + h));
        assert_eq!(poly.coeff(0) / poly.coeff(2), h * h - disc);
    }

    #[test]
    fn preset_is_admissible() {
        let r = check_hypotheses(&SystemParams::gate_preset()).unwrap();
        assert!(r.admissible);
        assert!((r.gamma_gl - 72.6).abs() < 0.1, "{}", r.gamma_gl);
        assert!(r.p_of_gamma < 0.0);
    }

    #[test]
    fn strong_coupling_not_admissible() {
        let p = SystemParams { alpha: 1.0, beta: 10.0, d: 1.0, sigma: 0.01, gamma: 11.0, mu: 0.0, mu0: 0.01 };
        let r = check_hypotheses(&p).unwrap();
        assert!(r.gamma_gl < r.gamma_rem);
        assert!(!r.admissible && r.gamma_interval.is_none());
    }

    #[test]
    fn boundary_gamma_rejected() {
        let p = SystemParams::gate_preset();
        let g = gamma_rem(&p).unwrap();
        assert!(!check_hypotheses(&p.with_gamma(g)).unwrap().admissible);
    }

    #[test]
    fn gamma_gl_grows_as_beta_shrinks_or_sigma_grows() {
        let p = SystemParams::gate_preset();
        let mut last = 0.0;
        for k in 1..=4 {
            let g = gamma_gl(&SystemParams { beta: 10f64.powi(-k), ..p.clone() }).unwrap();
            assert!(g > last);
            last = g;
        }
        let g1 = gamma_gl(&p).unwrap();
        let g2 = gamma_gl(&SystemParams { sigma: 20.0, ..p }).unwrap();
        assert!(g2 > g1);
    }

    #[test]
    fn trivial_equilibria_exact() {
        let p = SystemParams::gate_preset();
        let e = equilibria(&p).unwrap();
        assert!(p.sigma > e.sigma0);
        assert_eq!(e.points.len(), 3);
        for (u, v) in e.points {
            let (f, g) = kinetics(&p, u, v);
            assert!(f.abs() < 1e-14 && g.abs() < 1e-14);
        }
        assert!(equilibria(&p.with_mu(1.0)).is_err());
    }

    #[test]
    fn nontrivial_equilibria_below_threshold() {
        // Tight regime: μ close to 1 keeps u − 1 small, so the tangent bound is nearly sharp.
        let base = SystemParams { d: 1.0, alpha: 1.0, beta: 1.0, gamma: 100.0, sigma: 1.0, mu: 0.99, mu0: 0.995 };
        let s0 = equilibria(&base).unwrap().sigma0;
        let p = SystemParams { sigma: 0.95 * s0, ..base };
        let e = equilibria(&p).unwrap();
        let extra = &e.points[3..];
        // Dense-sampling oracle on a finer grid.
        let vmax = p.gamma * p.beta / (p.alpha * p.sigma);
        let n = 400_000;
        let mut changes = 0;
        let mut prev = nullcline_gap(&p, vmax / n as f64);
        for i in 2..=n {
            let g = nullcline_gap(&p, vmax * i as f64 / n as f64);
            if (g < 0.0) != (prev < 0.0) {
                changes += 1;
            }
            prev = g;
        }
        assert!(changes >= 1);
        assert_eq!(extra.len(), changes);
        for &(u, v) in extra {
            assert!(v > 0.0);
            let (f, g) = kinetics(&p, u, v);
            let scale = p.alpha * u.abs().powi(3) + p.beta * v.abs();
            assert!(f.abs() < 1e-12 * scale.max(1.0) && g.abs() < 1e-12 * (p.gamma * v.abs()).max(1.0));
        }
    }

    proptest! {
        #[test]
        fn admissible_draws_have_negative_cubic(
            beta in 0.01f64..0.3, sigma in 1.0f64..50.0, t in 0.01f64..0.99,
            alpha in 0.5f64..1.5, d in 0.5f64..2.0,
        ) {
            let p = SystemParams { d, alpha, beta, gamma: 1.0, sigma, mu: 0.0, mu0: 0.01 };
            let r = check_hypotheses(&p).unwrap();
            if let Some((lo, hi)) = r.gamma_interval {
                let q = p.with_gamma(lo + t * (hi - lo));
                let rq = check_hypotheses(&q).unwrap();
                prop_assert!(rq.admissible);
                prop_assert!(rq.p_of_gamma < 0.0);
            }
        }

        #[test]
        fn cubic_has_one_positive_root(
            beta in -1.0f64..1.0, sigma in 0.1f64..20.0, alpha in 0.1f64..3.0, d in 0.1f64..3.0,
        ) {
            prop_assume!(beta.abs() > 1e-3);
            let p = SystemParams { d, alpha, beta, gamma: 1.0, sigma, mu: 0.0, mu0: 0.01 };
            let poly = gl_cubic_polynomial(&p);
            prop_assert!(poly.coeff(2) > 0.0 && poly.coeff(0) < 0.0);
            let g = gamma_gl(&p).unwrap();
            prop_assert!(g > 0.0);
            prop_assert!(gl_cubic_coefficient(&p, 0.5 * g) < 0.0);
            prop_assert!(gl_cubic_coefficient(&p, 2.0 * g) > 0.0);
        }
    }
}
