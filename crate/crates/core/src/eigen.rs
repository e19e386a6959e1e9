//! Eigenvalue ODEs of the linearisation at the front: decaying solutions, Wronskians and the
//! Evans function of the weighted KPP operator.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::front::FrontProfile;
use crate::modefilter::smooth_step;
use crate::ode::{Control, Rk45};
use crate::params::SystemParams;
use crate::roots::poly_roots;
use crate::spectral::Side;
use crate::weights::WeightSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenOp {
    Kpp,
    Sh,
}

/// Front state the operator is linearised about.
#[derive(Clone, Copy, Debug)]
pub enum Background<'a> {
    Front(&'a FrontProfile),
    /// Spatially constant `q*`; the operator then has constant coefficients when unweighted.
    Frozen(f64),
}

/// Scalar eigen-ODE `Σ b_j(x) φ^{(j)} = λφ` for one component of the linearisation.
#[derive(Clone, Debug)]
pub struct EigenOperator<'a> {
    pub op: EigenOp,
    pub params: SystemParams<f64>,
    pub background: Background<'a>,
    pub weight: Option<WeightSpec<f64>>,
    /// Negative control: adds a well `2α` to the KPP potential on `|x| ≤ 2` (blended out by `|x| = 3`),
    /// which creates an unstable eigenvalue.
    pub corrupt_core: bool,
}

fn binom(n: usize, k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64)
}

impl<'a> EigenOperator<'a> {
    pub fn new(op: EigenOp, params: SystemParams<f64>, background: Background<'a>) -> Self {
        EigenOperator { op, params, background, weight: None, corrupt_core: false }
    }

    pub fn weighted(self, w: WeightSpec<f64>) -> Self {
        EigenOperator { weight: Some(w), ..self }
    }

    pub fn order(&self) -> usize {
        match self.op {
            EigenOp::Kpp => 2,
            EigenOp::Sh => 4,
        }
    }

    fn q_at(&self, x: f64) -> f64 {
        match self.background {
            Background::Front(f) => f.eval(x).0,
            Background::Frozen(q) => q,
        }
    }

    fn q_limit(&self, side: Side) -> f64 {
        match (self.background, side) {
            (Background::Frozen(q), _) => q,
            (Background::Front(_), Side::Minus) => 1.0,
            (Background::Front(_), Side::Plus) => 0.0,
        }
    }

    /// Unweighted coefficients `a_0..a_n` (without λ) for a given local state.
    fn base(&self, q: f64, x: Option<f64>) -> Vec<f64> {
        let p = &self.params;
        match self.op {
            EigenOp::Kpp => {
                let mut pot = p.alpha * (1.0 - 3.0 * q * q);
                if let (true, Some(x)) = (self.corrupt_core, x) {
                    pot += 2.0 * p.alpha * (1.0 - smooth_step(x.abs() - 2.0));
                }
                vec![pot, p.c_star(), p.d]
            }
            EigenOp::Sh => vec![-1.0 + p.mu - p.gamma * (1.0 - q), p.c_star(), -2.0, 0.0, -1.0],
        }
    }

    /// Conjugates `Σ a_k ∂^k` by the weight: `b_j = Σ_{k≥j} C(k,j) a_k w^{(k−j)}/w`.
    fn conjugate(&self, a: Vec<f64>, ratios: Option<[f64; 5]>, lambda: Complex64) -> Vec<Complex64> {
        let n = a.len() - 1;
        let mut b: Vec<Complex64> = (0..=n)
            .map(|j| {
                let s = match ratios {
                    None => a[j],
                    Some(r) => (j..=n).map(|k| binom(k, j) * a[k] * r[k - j]).sum(),
                };
                Complex64::new(s, 0.0)
            })
            .collect();
        b[0] -= lambda;
        b
    }

    /// Coefficients `b_0..b_n` of `(𝓛 − λ)φ = 0` at `x`.
    pub fn coefficients(&self, x: f64, lambda: Complex64) -> Vec<Complex64> {
        let a = self.base(self.q_at(x), Some(x));
        self.conjugate(a, self.weight.map(|w| w.log_derivative_ratios(x)), lambda)
    }

    /// Limits of the coefficients as `x → ±∞`.
    pub fn asymptotic_coefficients(&self, side: Side, lambda: Complex64) -> Vec<Complex64> {
        let a = self.base(self.q_limit(side), None);
        // Every weight is exactly exponential for |x| ≥ 1.
        let x = match side {
            Side::Minus => -2.0,
            Side::Plus => 2.0,
        };
        self.conjugate(a, self.weight.map(|w| w.log_derivative_ratios(x)), lambda)
    }

    /// Spatial eigenvalues ν on one side, sorted by real part; errors on near-collisions.
    pub fn spatial_roots(&self, side: Side, lambda: Complex64) -> Result<Vec<Complex64>> {
        let roots = poly_roots(&self.asymptotic_coefficients(side, lambda))?;
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                if (roots[i] - roots[j]).norm() < 1e-6 {
                    return Err(Error::Collision(format!("spatial eigenvalues meet near {} at λ = {lambda}", roots[i])));
                }
            }
        }
        Ok(roots)
    }

    /// Roots decaying towards the given side, slowest first.
    pub fn decaying_roots(&self, side: Side, lambda: Complex64) -> Result<Vec<Complex64>> {
        let mut r: Vec<Complex64> = self
            .spatial_roots(side, lambda)?
            .into_iter()
            .filter(|z| match side {
                Side::Plus => z.re < 0.0,
                Side::Minus => z.re > 0.0,
            })
            .collect();
        r.sort_by(|a, b| a.re.abs().total_cmp(&b.re.abs()));
        Ok(r)
    }

    fn rhs(&self, x: f64, lambda: Complex64, y: &[Complex64], dy: &mut [Complex64], cols: usize) {
        let n = self.order();
        let b = self.coefficients(x, lambda);
        for c in 0..cols {
            let v = &y[c * n..(c + 1) * n];
            let out = &mut dy[c * n..(c + 1) * n];
            out[..n - 1].copy_from_slice(&v[1..n]);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += b[j] * v[j];
            }
            out[n - 1] = -acc / b[n];
        }
    }
}

/// Companion eigenvector `(1, ν, …, ν^{n−1})/‖·‖`.
fn companion_vector(nu: Complex64, n: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..n).map(|k| nu.powu(k as u32)).collect();
    let s = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= s);
    v
}

/// Modified Gram-Schmidt on `cols` column vectors stored back to back; returns `Σ ln R_ii`.
fn orthonormalise(y: &mut [Complex64], n: usize, cols: usize) -> f64 {
    let mut log_r = 0.0;
    for c in 0..cols {
        for prev in 0..c {
            let dot: Complex64 = (0..n).map(|i| y[c * n + i] * y[prev * n + i].conj()).sum();
            for i in 0..n {
                let t = y[prev * n + i];
                y[c * n + i] -= dot * t;
            }
        }
        let norm = (0..n).map(|i| y[c * n + i].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            y[c * n + i] /= norm;
        }
        log_r += norm.ln();
    }
    log_r
}

/// A decaying solution (or frame of solutions) transported from the far end to `x_stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSolution {
    pub lambda: Complex64,
    pub side: Side,
    /// Index of the first decaying root used (slowest first).
    pub index: usize,
    pub nu: Vec<Complex64>,
    /// Recorded positions, from the far end inwards.
    pub xs: Vec<f64>,
    /// Orthonormalised frame at each recorded position, columns back to back.
    pub values: Vec<Vec<Complex64>>,
    /// Cumulative `Σ ln R_ii` removed up to each recorded position.
    pub log_scale: Vec<f64>,
}

impl EigenSolution {
    pub fn last(&self) -> &[Complex64] {
        self.values.last().expect("at least the initial value is recorded")
    }
}

pub const X_FAR: f64 = 40.0;

fn rk() -> Rk45 {
    Rk45 { rtol: 1e-11, atol: 1e-14, h_init: 1e-3, h_max: 0.25, max_steps: 400_000 }
}

/// Transports the decaying solutions with indices `index..index+cols` from `±x_far` to `x_stop`.
pub fn decaying_frame(
    opr: &EigenOperator,
    lambda: Complex64,
    side: Side,
    index: usize,
    cols: usize,
    x_far: f64,
    x_stop: f64,
) -> Result<EigenSolution> {
    frame_with(&rk(), opr, lambda, side, index, cols, x_far, x_stop)
}

#[allow(clippy::too_many_arguments)]
fn frame_with(
    solver: &Rk45,
    opr: &EigenOperator,
    lambda: Complex64,
    side: Side,
    index: usize,
    cols: usize,
    x_far: f64,
    x_stop: f64,
) -> Result<EigenSolution> {
    let n = opr.order();
    let roots = opr.decaying_roots(side, lambda)?;
    if index + cols > roots.len() {
        return Err(Error::Domain(format!(
            "only {} decaying roots on the {:?} side at λ = {lambda}",
            roots.len(),
            side
        )));
    }
    let nu: Vec<Complex64> = roots[index..index + cols].to_vec();
    let x0 = match side {
        Side::Plus => x_far,
        Side::Minus => -x_far,
    };
    let mut y: Vec<Complex64> = nu.iter().flat_map(|&v| companion_vector(v, n)).collect();
    let mut ledger = orthonormalise(&mut y, n, cols);
    let mut sol = EigenSolution {
        lambda,
        side,
        index,
        nu,
        xs: vec![x0],
        values: vec![y.clone()],
        log_scale: vec![ledger],
    };
    solver.integrate(
        |x, y, dy| opr.rhs(x, lambda, y, dy, cols),
        x0,
        x_stop,
        &mut y,
        |x, y| {
            ledger += orthonormalise(y, n, cols);
            if !ledger.is_finite() {
                return Control::Stop;
            }
            sol.xs.push(x);
            sol.values.push(y.to_vec());
            sol.log_scale.push(ledger);
            Control::Continue
        },
    )?;
    if !ledger.is_finite() || y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Overflow(format!("eigen-ODE at λ = {lambda}, last x = {}", sol.xs.last().unwrap())));
    }
    Ok(sol)
}

/// Single decaying solution with the given root index.
pub fn asymptotic_solution(
    opr: &EigenOperator,
    lambda: Complex64,
    side: Side,
    index: usize,
    x_far: f64,
) -> Result<EigenSolution> {
    decaying_frame(opr, lambda, side, index, 1, x_far, 0.0)
}

fn det(m: &[Vec<Complex64>]) -> Complex64 {
    let n = m.len();
    let mut a: Vec<Vec<Complex64>> = m.to_vec();
    let mut d = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm())).unwrap();
        if a[piv][k].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != k {
            a.swap(piv, k);
            d = -d;
        }
        d *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
        }
    }
    d
}

/// Determinant of the unit-column frame `[decaying from +∞ | decaying from −∞]` at `x = 0`,
/// with the phase of the analytic normalisation restored.
pub fn basis_determinant(opr: &EigenOperator, lambda: Complex64, x_far: f64) -> Result<Complex64> {
    determinant_with(&rk(), opr, lambda, x_far)
}

fn determinant_with(solver: &Rk45, opr: &EigenOperator, lambda: Complex64, x_far: f64) -> Result<Complex64> {
    let n = opr.order();
    let kp = opr.decaying_roots(Side::Plus, lambda)?.len();
    let km = opr.decaying_roots(Side::Minus, lambda)?.len();
    if kp + km != n {
        return Err(Error::Domain(format!("Morse indices {kp} + {km} ≠ {n} at λ = {lambda}: λ lies in the essential spectrum")));
    }
    let plus = frame_with(solver, opr, lambda, Side::Plus, 0, kp, x_far, 0.0)?;
    let minus = frame_with(solver, opr, lambda, Side::Minus, 0, km, x_far, 0.0)?;
    // Rows of the matrix are solution components, columns the solutions.
    let cols: Vec<&[Complex64]> =
        plus.last().chunks(n).chain(minus.last().chunks(n)).collect();
    let m: Vec<Vec<Complex64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    // Restores the phase of the analytic start data `e^{ν(±x_far)}·v`; the modulus stays unit.
    let phase: f64 = x_far * (plus.nu.iter().map(|z| z.im).sum::<f64>() - minus.nu.iter().map(|z| z.im).sum::<f64>());
    Ok(det(&m) * Complex64::from_polar(1.0, phase))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvansSample {
    pub lambda: Complex64,
    pub value: Complex64,
}

/// Evans function at `x = 0`, normalised by the column norms (so `|W| ≤ 1`).
pub fn evans_function(opr: &EigenOperator, lambda: Complex64, x_far: f64) -> Result<EvansSample> {
    Ok(EvansSample { lambda, value: basis_determinant(opr, lambda, x_far)? })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WronskianReport {
    pub lambda: Complex64,
    pub max_rel_deviation: f64,
    /// Measured `−d/dx ln|W|` over the interval.
    pub decay_rate: f64,
}

/// Compares `det Φ(x)` of a fundamental matrix with `det Φ(0)·exp(−∫₀ˣ b_{n−1}/b_n)`.
pub fn wronskian_identity_check(opr: &EigenOperator, lambda: Complex64, x_max: f64) -> Result<WronskianReport> {
    let n = opr.order();
    let mut y = vec![Complex64::new(0.0, 0.0); n * n + 1];
    for c in 0..n {
        y[c * n + c] = Complex64::new(1.0, 0.0);
    }
    let frame = |y: &[Complex64]| -> Vec<Vec<Complex64>> { (0..n).map(|i| (0..n).map(|c| y[c * n + i]).collect()).collect() };
    let w0 = det(&frame(&y));
    let mut worst: f64 = 0.0;
    let tight = Rk45 { rtol: 1e-12, atol: 1e-14, h_init: 1e-4, h_max: 0.05, max_steps: 1_000_000 };
    let mut last = (0.0, w0);
    tight.integrate(
        |x, y, dy| {
            opr.rhs(x, lambda, y, dy, n);
            let b = opr.coefficients(x, lambda);
            dy[n * n] = -b[n - 1] / b[n];
        },
        0.0,
        x_max,
        &mut y,
        |x, y| {
            let w = det(&frame(y));
            let want = w0 * y[n * n].exp();
            worst = worst.max((w - want).norm() / want.norm());
            last = (x, w);
            Control::Continue
        },
    )?;
    let decay_rate = -(last.1.norm() / w0.norm()).ln() / last.0;
    Ok(WronskianReport { lambda, max_rel_deviation: worst, decay_rate })
}

/// Keyhole rectangle `[−2η, re_max] × [−im_max, im_max]` that detours around the slit `(−∞, 0]`.
pub fn keyhole_contour(eta: f64, re_max: f64, im_max: f64, margin: f64) -> Vec<Complex64> {
    let c = Complex64::new;
    let left = -2.0 * eta;
    vec![
        c(left, -im_max),
        c(re_max, -im_max),
        c(re_max, im_max),
        c(left, im_max),
        c(left, margin),
        c(margin, margin),
        c(margin, -margin),
        c(left, -margin),
    ]
}

fn contour_points(vertices: &[Complex64], per_edge: usize) -> Vec<Complex64> {
    let m = vertices.len();
    (0..m)
        .flat_map(|e| {
            let (a, b) = (vertices[e], vertices[(e + 1) % m]);
            (0..per_edge).map(move |k| a + (b - a) * (k as f64 / per_edge as f64))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingReport {
    pub winding: i64,
    pub per_edge: usize,
    pub min_abs: f64,
    /// `min |W|` over samples with `Re λ` equal to the largest real part of the contour.
    pub far_right_min_abs: f64,
    pub samples: Vec<EvansSample>,
}

fn winding_of(samples: &[EvansSample]) -> (i64, f64) {
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..samples.len() {
        let a = samples[k].value;
        let b = samples[(k + 1) % samples.len()].value;
        let step = (b / a).arg();
        worst = worst.max(step.abs());
        total += step;
    }
    ((total / std::f64::consts::TAU).round() as i64, worst)
}

/// Winding number of the Evans function along the closed polygon `vertices` (counter-clockwise).
///
/// Edges start with `per_edge` samples and are refined by doubling until the count is stable and
/// no argument increment exceeds π/4.
pub fn evans_winding(
    opr: &EigenOperator,
    vertices: &[Complex64],
    per_edge: usize,
    x_far: f64,
    eta: f64,
) -> Result<WindingReport> {
    let slit_margin = 0.05 - 1e-12;
    let probe = contour_points(vertices, 16);
    for z in &probe {
        let dist = if z.re <= 0.0 { z.im.abs() } else { z.norm() };
        if dist < slit_margin {
            return Err(Error::Domain(format!("contour point {z} within 0.05 of the slit")));
        }
        if z.re <= -3.0 * eta {
            return Err(Error::Domain(format!("contour point {z} leaves Re λ > −3η")));
        }
    }
    let sample = |n: usize| -> Result<Vec<EvansSample>> {
        // Only the argument matters here, so a looser tolerance suffices.
        let solver = Rk45 { rtol: 1e-8, atol: 1e-12, ..rk() };
        contour_points(vertices, n)
            .into_par_iter()
            .map(|l| Ok(EvansSample { lambda: l, value: determinant_with(&solver, opr, l, x_far)? }))
            .collect()
    };
    let mut n = per_edge.max(4);
    let mut samples = sample(n)?;
    let (mut w, _) = winding_of(&samples);
    loop {
        let scale = samples.iter().map(|s| s.value.norm()).fold(0.0, f64::max);
        if samples.iter().any(|s| s.value.norm() < 1e-10 * scale.max(1e-300)) {
            return Err(Error::Domain("Evans function vanishes on the contour".into()));
        }
        let next = sample(2 * n)?;
        let (w2, worst2) = winding_of(&next);
        n *= 2;
        samples = next;
        if w2 == w && worst2 < std::f64::consts::FRAC_PI_4 {
            break;
        }
        w = w2;
        if n > 4096 {
            return Err(Error::NonConvergence { what: "Evans winding refinement".into(), iterations: n, residual: worst2 });
        }
    }
    let re_max = vertices.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let min_abs = samples.iter().map(|s| s.value.norm()).fold(f64::INFINITY, f64::min);
    let far_right_min_abs = samples
        .iter()
        .filter(|s| (s.lambda.re - re_max).abs() < 1e-12)
        .map(|s| s.value.norm())
        .fold(f64::INFINITY, f64::min);
    Ok(WindingReport { winding: w, per_edge: n, min_abs, far_right_min_abs, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::solve_front_default;
    use crate::spectral::{dispersion_roots, select_theta, weighted_symbol, BorderTag};
    use crate::weights::WeightKind;
    use std::sync::OnceLock;

    fn params() -> SystemParams<f64> {
        SystemParams::gate_preset()
    }

    fn front() -> &'static FrontProfile {
        static F: OnceLock<FrontProfile> = OnceLock::new();
        F.get_or_init(|| solve_front_default(&params()).unwrap())
    }

    fn weight() -> WeightSpec<f64> {
        let p = params();
        WeightSpec::new(WeightKind::OmegaStar, &p, select_theta(&p).unwrap().theta)
    }

    #[test]
    fn frozen_problem_is_exponential() {
        // The weight is exactly exponential on x ≥ 1, so the weighted problem has constant coefficients there.
        let opr = EigenOperator::new(EigenOp::Kpp, params(), Background::Frozen(0.0)).weighted(weight());
        let lambda = Complex64::new(0.7, 0.4);
        let sol = decaying_frame(&opr, lambda, Side::Plus, 0, 1, 10.0, 1.0).unwrap();
        let nu = sol.nu[0];
        let v0 = &sol.values[0];
        for (k, &x) in sol.xs.iter().enumerate() {
            let scale = Complex64::new(sol.log_scale[k] - sol.log_scale[0], 0.0).exp();
            let want = (nu * (x - 10.0)).exp();
            for i in 0..2 {
                let got = sol.values[k][i] * scale;
                // The frame is renormalised by positive reals only.
                assert!((got - want * v0[i]).norm() <= 1e-10 * want.norm(), "x = {x}: {:e}", (got - want * v0[i]).norm() / want.norm());
            }
        }
    }

    #[test]
    fn tail_exponent_matches_dispersion_root() {
        let p = params();
        let opr = EigenOperator::new(EigenOp::Kpp, p.clone(), Background::Front(front())).weighted(weight());
        let lambda = Complex64::new(1.0, 0.0);
        let sol = asymptotic_solution(&opr, lambda, Side::Plus, 0, X_FAR).unwrap();
        let theta = select_theta(&p).unwrap().theta;
        let roots = dispersion_roots(&weighted_symbol(&p, theta, BorderTag::KppPlus), lambda, None).unwrap();
        let want = roots.roots.iter().filter(|r| r.re < 0.0).map(|r| r.re).fold(f64::NEG_INFINITY, f64::max);
        // Fit ln|φ| + ledger on the outer 20 % of the half-line.
        let pts: Vec<(f64, f64)> = sol
            .xs
            .iter()
            .zip(&sol.values)
            .zip(&sol.log_scale)
            .filter(|((x, _), _)| **x >= 0.8 * X_FAR)
            .map(|((x, v), l)| (*x, v[0].norm().ln() + l - sol.log_scale[0]))
            .collect();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / n, sy / n);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope - want).abs() < 1e-6, "{slope} vs {want}");
        assert!((want + (1.0 / p.d).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn wronskian_identities() {
        let p = params();
        for l in [Complex64::new(0.5, 0.0), Complex64::new(2.0, 1.0)] {
            let kpp = EigenOperator::new(EigenOp::Kpp, p.clone(), Background::Front(front()));
            let r = wronskian_identity_check(&kpp, l, 5.0).unwrap();
            assert!(r.max_rel_deviation < 1e-6, "{r:?}");
            assert!((r.decay_rate - p.c_star() / p.d).abs() < 1e-6);
            let sh = EigenOperator::new(EigenOp::Sh, p.clone(), Background::Front(front()));
            let r = wronskian_identity_check(&sh, l, 5.0).unwrap();
            assert!(r.max_rel_deviation < 1e-6 && r.decay_rate.abs() < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn sh_basis_complete_and_localized() {
        let p = params();
        let choice = select_theta(&p).unwrap();
        let opr = EigenOperator::new(EigenOp::Sh, p.clone(), Background::Front(front())).weighted(weight());
        for l in [Complex64::new(0.3, 0.0), Complex64::new(-choice.eta, 2.0), Complex64::new(5.0, -5.0)] {
            let d = basis_determinant(&opr, l, X_FAR).unwrap();
            assert!(d.norm() >= 1e-8, "λ = {l}: {d}");
            for side in [Side::Plus, Side::Minus] {
                let roots = opr.decaying_roots(side, l).unwrap();
                assert_eq!(roots.len(), 2);
            }
        }
    }

    #[test]
    fn collision_detected() {
        // Unweighted KPP ahead of the front at λ = −c*²/(4d) + α has a double root.
        let p = params();
        let opr = EigenOperator::new(EigenOp::Kpp, p.clone(), Background::Frozen(0.0));
        let l = Complex64::new(p.alpha - p.c_star().powi(2) / (4.0 * p.d), 0.0);
        assert!(matches!(opr.spatial_roots(Side::Plus, l), Err(Error::Collision(_))));
    }

    #[test]
    fn evans_is_conjugate_symmetric() {
        let opr = EigenOperator::new(EigenOp::Kpp, params(), Background::Front(front())).weighted(weight());
        let l = Complex64::new(0.8, 1.7);
        let a = evans_function(&opr, l, X_FAR).unwrap().value;
        let b = evans_function(&opr, l.conj(), X_FAR).unwrap().value;
        assert!((a.conj() - b).norm() < 1e-8 * a.norm());
    }
}
