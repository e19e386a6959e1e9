//! Operator symbols, exponential-weight conjugation, Fredholm borders and spatial roots.

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{gamma_rem, SystemParams};
use crate::poly::Poly;
use crate::roots::{poly_roots, relative_residual};
use crate::scalar::{Real, Scalar};

/// Asymptotic side of the front: `Plus` is the unstable state ahead, `Minus` the invaded state behind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BorderTag {
    #[serde(rename = "kpp+")]
    KppPlus,
    #[serde(rename = "kpp-")]
    KppMinus,
    #[serde(rename = "sh+")]
    ShPlus,
    #[serde(rename = "sh-")]
    ShMinus,
}

impl BorderTag {
    pub const ALL: [BorderTag; 4] = [BorderTag::KppPlus, BorderTag::KppMinus, BorderTag::ShPlus, BorderTag::ShMinus];

    pub fn side(self) -> Side {
        match self {
            BorderTag::KppPlus | BorderTag::ShPlus => Side::Plus,
            BorderTag::KppMinus | BorderTag::ShMinus => Side::Minus,
        }
    }

    pub fn is_kpp(self) -> bool {
        matches!(self, BorderTag::KppPlus | BorderTag::KppMinus)
    }

    pub fn label(self) -> &'static str {
        match self {
            BorderTag::KppPlus => "kpp+",
            BorderTag::KppMinus => "kpp-",
            BorderTag::ShPlus => "sh+",
            BorderTag::ShMinus => "sh-",
        }
    }
}

/// Square matrix of polynomials in `X`, where `X` stands for `∂_x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSymbol<T> {
    pub entries: Vec<Vec<Poly<T>>>,
}

impl<T: Scalar> OperatorSymbol<T> {
    pub fn scalar(p: Poly<T>) -> Self {
        OperatorSymbol { entries: vec![vec![p]] }
    }

    pub fn from_rows(entries: Vec<Vec<Poly<T>>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("operator symbol must be a non-empty square matrix".into()));
        }
        Ok(OperatorSymbol { entries })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn degree(&self) -> usize {
        self.entries.iter().flatten().map(|p| if p.is_zero() { 0 } else { p.degree() }).max().unwrap_or(0)
    }

    pub fn entry(&self, i: usize, j: usize) -> &Poly<T> {
        &self.entries[i][j]
    }

    pub fn diagonal(&self) -> Vec<Poly<T>> {
        (0..self.size()).map(|i| self.entries[i][i].clone()).collect()
    }

    pub fn is_upper_triangular(&self) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..i).all(|j| self.entries[i][j].is_zero()))
    }

    pub fn is_lower_triangular(&self) -> bool {
        let n = self.size();
        (0..n).all(|i| (i + 1..n).all(|j| self.entries[i][j].is_zero()))
    }

    /// Conjugation by `e^{ϑx}`: every entry `P(X) ↦ P(ϑ + X)`.
    pub fn shift(&self, theta: T) -> Self {
        OperatorSymbol {
            entries: self
                .entries
                .iter()
                .map(|row| row.iter().map(|p| p.taylor_shift(theta.clone())).collect())
                .collect(),
        }
    }

    /// Entry-wise derivative in `X`.
    pub fn derivative(&self) -> Self {
        OperatorSymbol {
            entries: self.entries.iter().map(|row| row.iter().map(|p| p.derivative()).collect()).collect(),
        }
    }

    /// Evaluates at a complex point, row-major.
    pub fn eval(&self, x: Complex<T>) -> Vec<Vec<Complex<T>>> {
        self.entries.iter().map(|row| row.iter().map(|p| p.eval(x.clone())).collect()).collect()
    }
}

/// KPP component of the asymptotic operator: `dX² + c*X + α` ahead, `… − 2α` behind.
pub fn kpp_symbol<T: Real>(p: &SystemParams<T>, side: Side) -> Poly<T> {
    let pot = match side {
        Side::Plus => p.alpha,
        Side::Minus => -(T::int(2) * p.alpha),
    };
    Poly::new(vec![pot, p.c_star(), p.d])
}

/// Swift-Hohenberg component: `−(1+X²)² + c*X + μ`, minus γ ahead of the front.
pub fn sh_symbol<T: Real>(p: &SystemParams<T>, side: Side) -> Poly<T> {
    let shift = match side {
        Side::Plus => p.gamma,
        Side::Minus => T::zero(),
    };
    let one = T::one();
    Poly::new(vec![-one + p.mu - shift, p.c_star(), -T::int(2), T::zero(), -one])
}

pub fn unweighted_symbol<T: Real>(p: &SystemParams<T>, tag: BorderTag) -> Poly<T> {
    if tag.is_kpp() {
        kpp_symbol(p, tag.side())
    } else {
        sh_symbol(p, tag.side())
    }
}

/// Weight exponent of the conjugation on each side: `−c*/(2d)` for KPP ahead, `θ` for SH behind, 0 otherwise.
pub fn weight_exponent<T: Real>(p: &SystemParams<T>, theta: T, tag: BorderTag) -> T {
    match tag {
        BorderTag::KppPlus | BorderTag::ShPlus => -p.front_rate(),
        BorderTag::KppMinus | BorderTag::ShMinus => theta,
    }
}

/// Symbol of the weighted asymptotic operator `e^{-ϑx} A e^{ϑx}` for the given border.
pub fn weighted_symbol<T: Real>(p: &SystemParams<T>, theta: T, tag: BorderTag) -> Poly<T> {
    unweighted_symbol(p, tag).taylor_shift(weight_exponent(p, theta, tag))
}

/// Full 2×2 asymptotic operator on one side.
pub fn asymptotic_operator<T: Real>(p: &SystemParams<T>, side: Side) -> OperatorSymbol<T> {
    OperatorSymbol {
        entries: vec![
            vec![kpp_symbol(p, side), Poly::constant(p.beta)],
            vec![Poly::zero(), sh_symbol(p, side)],
        ],
    }
}

/// `M(X)`: the μ-free constant-coefficient operator behind the front, without advection.
pub fn t0_symbol<T: Scalar>(d: T, alpha: T, beta: T) -> OperatorSymbol<T> {
    let one = T::one();
    let two = T::int(2);
    OperatorSymbol {
        entries: vec![
            vec![Poly::new(vec![-(two.clone() * alpha), T::zero(), d]), Poly::constant(beta)],
            vec![Poly::zero(), Poly::new(vec![-one, T::zero(), -two, T::zero(), -T::one()])],
        ],
    }
}

pub fn t_mu_symbol<T: Scalar>(mu: T) -> OperatorSymbol<T> {
    OperatorSymbol {
        entries: vec![vec![Poly::zero(), Poly::zero()], vec![Poly::zero(), Poly::constant(mu)]],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve<T> {
    pub samples: Vec<(T, Complex<T>)>,
    pub which_border: Option<BorderTag>,
}

impl<T: Real> SpectralCurve<T> {
    pub fn max_real(&self) -> T {
        self.samples.iter().map(|(_, l)| l.re).fold(T::neg_infinity(), |a, b| a.max(b))
    }

    /// Wavenumber attaining the largest real part.
    pub fn argmax_real(&self) -> T {
        self.samples
            .iter()
            .fold((T::nan(), T::neg_infinity()), |(x, m), (xi, l)| if l.re > m { (*xi, l.re) } else { (x, m) })
            .0
    }
}

pub fn xi_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let step = (hi - lo) / T::from_usize(n - 1).unwrap();
    (0..n).map(|i| lo + step * T::from_usize(i).unwrap()).collect()
}

/// Curves `λ(ξ) = s_ii(iξ)` for each diagonal entry; `tags[i]` labels entry `i`.
pub fn fredholm_border<T: Real>(
    s: &OperatorSymbol<T>,
    xi: &[T],
    tags: &[Option<BorderTag>],
) -> Result<Vec<SpectralCurve<T>>> {
    if !(s.is_upper_triangular() || s.is_lower_triangular()) {
        return Err(Error::Unsupported("Fredholm border of a non-triangular symbol".into()));
    }
    Ok(s
        .diagonal()
        .iter()
        .enumerate()
        .map(|(i, poly)| SpectralCurve {
            samples: xi.iter().map(|&x| (x, poly.eval(Complex::new(T::zero(), x)))).collect(),
            which_border: tags.get(i).copied().flatten(),
        })
        .collect())
}

/// Border of the weighted scalar operator for one tag.
pub fn weighted_border<T: Real>(p: &SystemParams<T>, theta: T, tag: BorderTag, xi: &[T]) -> SpectralCurve<T> {
    let s = OperatorSymbol::scalar(weighted_symbol(p, theta, tag));
    fredholm_border(&s, xi, &[Some(tag)]).expect("scalar symbols are triangular").remove(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaChoice<T> {
    pub theta: T,
    pub eta: T,
}

/// Largest real part of the weighted SH border behind the front at μ = μ₀.
pub fn sh_minus_bound<T: Real>(mu0: T, c_star: T, theta: T) -> T {
    let t2 = theta * theta;
    mu0 + c_star * theta + T::int(4) * t2 + T::int(8) * t2 * t2
}

fn golden_min<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T) -> T {
    let g = (T::int(5).sqrt() - T::one()) / T::int(2);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= T::lit(1e-14) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / T::int(2)
}

/// Picks the SH weight exponent θ < 0 and the spectral gap η > 0.
///
/// θ is the root of the SH bound closest to 0 at level `−min(μ₀, −b_min/2)`, so θ → 0 with μ₀.
pub fn select_theta<T: Real>(p: &SystemParams<T>) -> Result<ThetaChoice<T>> {
    p.validate()?;
    let g_rem = gamma_rem(p)?;
    if !(p.gamma > g_rem) {
        return Err(Error::Gate(format!("gamma = {:?} must exceed gamma_rem = {:?}", p.gamma, g_rem)));
    }
    let two = T::int(2);
    let c = p.c_star();
    let theta_min = (-c - (c * c + T::int(4) * p.d * p.alpha).sqrt()) / (two * p.d);
    let bound = |t: T| sh_minus_bound(p.mu0, c, t);
    let t_opt = golden_min(bound, theta_min, T::zero());
    let b_min = bound(t_opt);
    if !(b_min < T::zero()) {
        return Err(Error::Gate(format!("no weight exponent stabilises the SH border (best bound {b_min:?})")));
    }
    let level = -(p.mu0.min(-b_min / two));
    // bound(lo) ≤ level < bound(hi); keep the side that satisfies the bound.
    let (mut lo, mut hi) = (t_opt, T::zero());
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if bound(mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::lit(1e-15) {
            break;
        }
    }
    let theta = lo;
    let kpp_gap = two * p.alpha - p.d * theta * theta - c * theta;
    let sh_minus_gap = -bound(theta);
    let sh_plus_gap = p.gamma - g_rem;
    let gap = kpp_gap.min(sh_minus_gap).min(sh_plus_gap);
    let eta = gap / T::int(3) * (T::one() - T::lit(1e-9));
    Ok(ThetaChoice { theta, eta })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionRoots {
    pub lambda: Complex64,
    pub roots: Vec<Complex64>,
    pub which_operator: Option<BorderTag>,
}

impl DispersionRoots {
    /// (number with Re ν < 0, number with Re ν > 0).
    pub fn sign_split(&self) -> (usize, usize) {
        let neg = self.roots.iter().filter(|r| r.re < 0.0).count();
        let pos = self.roots.iter().filter(|r| r.re > 0.0).count();
        (neg, pos)
    }

    pub fn min_abs_real(&self) -> f64 {
        self.roots.iter().map(|r| r.re.abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Roots ν of `λ − s(ν) = 0`, sorted by real part.
pub fn dispersion_roots(s: &Poly<f64>, lambda: Complex64, tag: Option<BorderTag>) -> Result<DispersionRoots> {
    if s.degree() == 0 {
        return Err(Error::Domain("dispersion relation needs a non-constant symbol".into()));
    }
    let mut c: Vec<Complex64> = s.coeffs().iter().map(|&a| Complex64::new(-a, 0.0)).collect();
    c[0] += lambda;
    let roots = poly_roots(&c)?;
    for r in &roots {
        let res = relative_residual(&c, *r);
        if res > 1e-10 {
            return Err(Error::NonConvergence { what: "dispersion root".into(), iterations: 1, residual: res });
        }
    }
    Ok(DispersionRoots { lambda, roots, which_operator: tag })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    /// Smallest |Re ν| over gapped root families for samples with Re λ ≥ −2η.
    pub kappa2: f64,
    /// Smallest `|Re ν| / |λ|^{1/2}` over KPP roots with |λ| ≥ R.
    pub c_kpp: f64,
    /// Smallest `|Re ν| / |λ|^{1/4}` over SH roots with |λ| ≥ R.
    pub c_sh: f64,
    pub r: f64,
    pub samples_near: usize,
    pub samples_far: usize,
}

/// Measures the root-localization constants over `lambdas` (which must avoid `(−∞, 0]`).
pub fn verify_root_localization(
    p: &SystemParams<f64>,
    choice: &ThetaChoice<f64>,
    lambdas: &[Complex64],
    r: f64,
) -> Result<LocalizationReport> {
    let mut rep = LocalizationReport {
        kappa2: f64::INFINITY,
        c_kpp: f64::INFINITY,
        c_sh: f64::INFINITY,
        r,
        samples_near: 0,
        samples_far: 0,
    };
    let syms: Vec<(BorderTag, Poly<f64>)> =
        BorderTag::ALL.iter().map(|&t| (t, weighted_symbol(p, choice.theta, t))).collect();
    for &lam in lambdas {
        if lam.im == 0.0 && lam.re <= 0.0 {
            return Err(Error::Domain(format!("sample {lam} lies on the slit")));
        }
        let near = lam.re >= -2.0 * choice.eta;
        let far = lam.norm() >= r;
        rep.samples_near += near as usize;
        rep.samples_far += far as usize;
        for (tag, s) in &syms {
            let roots = dispersion_roots(s, lam, Some(*tag))?;
            let m = roots.min_abs_real();
            if near && *tag != BorderTag::KppPlus {
                rep.kappa2 = rep.kappa2.min(m);
            }
            if far {
                if tag.is_kpp() {
                    rep.c_kpp = rep.c_kpp.min(m / lam.norm().sqrt());
                } else {
                    rep.c_sh = rep.c_sh.min(m / lam.norm().powf(0.25));
                }
            }
        }
    }
    Ok(rep)
}

/// Log-log slope of `min |Re ν|` against `λ` along positive real samples.
pub fn root_growth_exponent(s: &Poly<f64>, lambdas: &[f64]) -> Result<f64> {
    let mut pts = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let r = dispersion_roots(s, Complex64::new(l, 0.0), None)?;
        pts.push((l.ln(), r.min_abs_real().ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
