//! Ginzburg-Landau reduction near the onset of the pattern at the rear of the front.
//!
//! The amplitude ansatz is
//! `V = ε(e^{ix}A ρ_c + c.c.) + ε²(|A|²ρ₀ + (e^{ix}∂_X A ρ₁ + e^{2ix}A²ρ₂ + c.c.))`
//! with `A(T, X)`, `T = ε²t`, `X = εx` obeying `∂_T A = 4∂_XX A + A + b A|A|²`.

use nalgebra::SMatrix;
use num_complex::{Complex, Complex64};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Frame, Grid1D};
use crate::modefilter::ModeFilterSpec;
use crate::params::SystemParams;
use crate::scalar::Scalar;
use crate::spectrum::Fourier;
use crate::weights::{ul_sobolev_norm_components, UlNorm};

type C<T> = Complex<T>;
type Mat<T> = [[C<T>; 2]; 2];

/// Ansatz vectors and the three GL coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlData<T> {
    pub gamma: T,
    pub rho_c: [T; 2],
    pub rho_c_star: [T; 2],
    pub rho_0: [T; 2],
    pub rho_1: [C<T>; 2],
    pub rho_2: [T; 2],
    pub diffusion: T,
    pub linear: T,
    pub cubic: T,
}

fn re<T: Scalar>(x: T) -> C<T> {
    C::new(x, T::zero())
}

/// `M(X) = [[dX² − 2α, β], [0, −(1 + X²)²]]`.
pub fn symbol_m<T: Scalar>(p: &SystemParams<T>, x: C<T>) -> Mat<T> {
    let x2 = x.clone() * x;
    let one_x2 = C::<T>::one_plus(x2.clone());
    [
        [x2 * re(p.d.clone()) - re(T::int(2) * p.alpha.clone()), re(p.beta.clone())],
        [C::zero(), -(one_x2.clone() * one_x2)],
    ]
}

pub fn symbol_m_prime<T: Scalar>(p: &SystemParams<T>, x: C<T>) -> Mat<T> {
    let one_x2 = C::<T>::one_plus(x.clone() * x.clone());
    [
        [x.clone() * re(T::int(2) * p.d.clone()), C::zero()],
        [C::zero(), -(x * one_x2 * re(T::int(4)))],
    ]
}

pub fn symbol_m_second<T: Scalar>(p: &SystemParams<T>, x: C<T>) -> Mat<T> {
    let x2 = x.clone() * x;
    [
        [re(T::int(2) * p.d.clone()), C::zero()],
        [C::zero(), -(re(T::int(4)) + x2 * re(T::int(12)))],
    ]
}

trait OnePlus<T> {
    fn one_plus(z: C<T>) -> C<T>;
}

impl<T: Scalar> OnePlus<T> for C<T> {
    fn one_plus(z: C<T>) -> C<T> {
        z + re(T::one())
    }
}

fn apply<T: Scalar>(m: &Mat<T>, v: &[C<T>; 2]) -> [C<T>; 2] {
    std::array::from_fn(|i| m[i][0].clone() * v[0].clone() + m[i][1].clone() * v[1].clone())
}

/// Hermitian pairing `⟨u, v⟩ = Σ u_k conj(v_k)`.
fn pair<T: Scalar>(u: &[C<T>; 2], v: &[C<T>; 2]) -> C<T> {
    u[0].clone() * v[0].conj() + u[1].clone() * v[1].conj()
}

fn cplx<T: Scalar>(v: &[T; 2]) -> [C<T>; 2] {
    [re(v[0].clone()), re(v[1].clone())]
}

/// Cramer solve of a 2×2 system; `None` when the determinant vanishes.
fn solve2<T: Scalar>(m: &Mat<T>, rhs: &[C<T>; 2]) -> Option<[C<T>; 2]> {
    let det = m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone();
    if det.is_zero() {
        return None;
    }
    Some([
        (rhs[0].clone() * m[1][1].clone() - m[0][1].clone() * rhs[1].clone()) / det.clone(),
        (m[0][0].clone() * rhs[1].clone() - rhs[0].clone() * m[1][0].clone()) / det,
    ])
}

fn real_part<T: Scalar + ToPrimitive>(v: [C<T>; 2], what: &str) -> Result<[T; 2]> {
    for z in &v {
        let (a, b) = (z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN));
        if b.abs() > 1e-12 * a.abs().max(1.0) {
            return Err(Error::Domain(format!("{what} has an imaginary part {b:e}")));
        }
    }
    let [a, b] = v;
    Ok([a.re, b.re])
}

fn close<T: Scalar + ToPrimitive>(a: &T, b: &T) -> bool {
    let (x, y) = (a.to_f64().unwrap_or(f64::NAN), b.to_f64().unwrap_or(f64::NAN));
    (x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1e-300) || a == b
}

/// `B(V, W) = (−3α v₁w₁, (γ/2)(v₁w₂ + v₂w₁))`.
pub fn bilinear<T: Scalar>(p: &SystemParams<T>, v: &[T; 2], w: &[T; 2]) -> [T; 2] {
    [
        -(T::int(3) * p.alpha.clone() * v[0].clone() * w[0].clone()),
        p.gamma.clone() / T::int(2) * (v[0].clone() * w[1].clone() + v[1].clone() * w[0].clone()),
    ]
}

/// `N₃(V) = −(α v₁³, σ v₂³)`.
pub fn cubic_term<T: Scalar>(p: &SystemParams<T>, v: &[T; 2]) -> [T; 2] {
    let cube = |x: &T| x.clone() * x.clone() * x.clone();
    [-(p.alpha.clone() * cube(&v[0])), -(p.sigma.clone() * cube(&v[1]))]
}

/// Closed forms of `ρ₀` and `ρ₂`, used as an independent cross-check of the linear solves.
pub fn closed_form_rho<T: Scalar>(p: &SystemParams<T>) -> ([T; 2], [T; 2]) {
    let (d, al, b, g) = (p.d.clone(), p.alpha.clone(), p.beta.clone(), p.gamma.clone());
    let s = d.clone() + T::int(2) * al.clone();
    let q = T::int(4) * d + T::int(2) * al.clone();
    let b2 = b.clone() * b.clone();
    let rho_0 = [
        b2.clone() * (g.clone() * s.clone() / al.clone() - T::int(3)),
        T::int(2) * g.clone() * b.clone() * s.clone(),
    ];
    let k = T::one() / (T::int(9) * q.clone());
    let rho_2 = [
        k.clone() * b2 * (g.clone() * s.clone() - T::int(27) * al),
        k * g * b * s * q,
    ];
    (rho_0, rho_2)
}

/// Diffusion coefficient `⟨½M''(i)ρ_c + M'(i)ρ₁, ρ_c*⟩` for an arbitrary representative `ρ₁`.
pub fn diffusion_coefficient<T: Scalar>(p: &SystemParams<T>, data: &GlData<T>, rho_1: &[C<T>; 2]) -> C<T> {
    let i = C::new(T::zero(), T::one());
    let half = re(T::one() / T::int(2));
    let rc = cplx(&data.rho_c);
    let a = apply(&symbol_m_second(p, i.clone()), &rc);
    let b = apply(&symbol_m_prime(p, i), rho_1);
    let v = [a[0].clone() * half.clone() + b[0].clone(), a[1].clone() * half + b[1].clone()];
    pair(&v, &cplx(&data.rho_c_star))
}

/// `⟨2B(ρ_c, ρ₀) + 2B(ρ_c, ρ₂) + 3N₃(ρ_c), ρ_c*⟩`.
pub fn assemble_cubic<T: Scalar>(p: &SystemParams<T>, data: &GlData<T>) -> T {
    let b0 = bilinear(p, &data.rho_c, &data.rho_0);
    let b2 = bilinear(p, &data.rho_c, &data.rho_2);
    let n3 = cubic_term(p, &data.rho_c);
    let two = T::int(2);
    let three = T::int(3);
    (0..2)
        .map(|k| {
            (two.clone() * b0[k].clone() + two.clone() * b2[k].clone() + three.clone() * n3[k].clone())
                * data.rho_c_star[k].clone()
        })
        .fold(T::zero(), |acc, x| acc + x)
}

/// Solves the linear systems of the ansatz and cross-checks them against the closed forms.
pub fn derive_ansatz_vectors<T: Scalar + ToPrimitive>(p: &SystemParams<T>) -> Result<GlData<T>> {
    if !(p.alpha > T::zero() && p.d > T::zero()) {
        return Err(Error::Domain("ansatz needs α > 0 and d > 0".into()));
    }
    let zero = T::zero();
    let i = C::new(zero.clone(), T::one());
    let m_i = symbol_m(p, i.clone());
    let rho_c = [p.beta.clone(), p.d.clone() + T::int(2) * p.alpha.clone()];
    let rc = cplx(&rho_c);

    // Left kernel of M(i): orthogonal to the first column, normalised against ρ_c.
    let y = [-m_i[1][0].clone(), m_i[0][0].clone()];
    let norm = pair(&rc, &y);
    if norm.is_zero() {
        return Err(Error::Singular("left kernel of M(i) orthogonal to ρ_c".into()));
    }
    let star = [y[0].clone() / norm.clone(), y[1].clone() / norm];
    let rho_c_star = real_part(star, "ρ_c*")?;

    let n2 = bilinear(p, &rho_c, &rho_c);
    let m0 = symbol_m(p, C::zero());
    let m2 = symbol_m(p, i.clone() * re(T::int(2)));
    let minus = |v: &[T; 2], k: i64| [re(-(T::int(k) * v[0].clone())), re(-(T::int(k) * v[1].clone()))];
    let rho_0 = solve2(&m0, &minus(&n2, 2)).ok_or_else(|| Error::Singular("M(0)".into()))?;
    let rho_2 = solve2(&m2, &minus(&n2, 1)).ok_or_else(|| Error::Singular("M(2i)".into()))?;
    let rho_0 = real_part(rho_0, "ρ₀")?;
    let rho_2 = real_part(rho_2, "ρ₂")?;
    let (cf0, cf2) = closed_form_rho(p);
    for (a, b) in rho_0.iter().zip(&cf0).chain(rho_2.iter().zip(&cf2)) {
        if !close(a, b) {
            return Err(Error::Domain(format!("ansatz vector {a:?} disagrees with closed form {b:?}")));
        }
    }

    // ρ₁: first row of M(i)ρ₁ = −M'(i)ρ_c, plus Hermitian orthogonality to ρ_c.
    let rhs_full = apply(&symbol_m_prime(p, i.clone()), &rc);
    let sys = [[m_i[0][0].clone(), m_i[0][1].clone()], [rc[0].conj(), rc[1].conj()]];
    let rho_1 = solve2(&sys, &[-rhs_full[0].clone(), C::zero()])
        .ok_or_else(|| Error::Singular("ρ₁ system".into()))?;
    let check = apply(&m_i, &rho_1);
    for k in 0..2 {
        let r = check[k].clone() + rhs_full[k].clone();
        if r.re.to_f64().unwrap_or(f64::NAN).abs() > 1e-12 || r.im.to_f64().unwrap_or(f64::NAN).abs() > 1e-12 {
            return Err(Error::Domain("M'(i)ρ_c is not in the range of M(i)".into()));
        }
    }

    let mut data = GlData {
        gamma: p.gamma.clone(),
        rho_c,
        rho_c_star,
        rho_0,
        rho_1,
        rho_2,
        diffusion: zero.clone(),
        linear: zero.clone(),
        cubic: zero,
    };
    let diff = diffusion_coefficient(p, &data, &data.rho_1);
    data.diffusion = real_part([diff, C::zero()], "diffusion")?[0].clone();
    data.linear = data.rho_c[1].clone() * data.rho_c_star[1].clone();
    data.cubic = assemble_cubic(p, &data);
    Ok(data)
}

/// Complex amplitude on a periodic slow grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlField {
    pub grid: Grid1D,
    pub a: Vec<Complex64>,
    pub t: f64,
}

impl GlField {
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        GlField { a: grid.xs().into_iter().map(f).collect(), grid, t: 0.0 }
    }

    pub fn sup_norm(&self) -> f64 {
        self.a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Default slow grid: length 40π with 1024 modes.
pub fn default_gl_grid() -> Grid1D {
    Grid1D::with_points(0.0, 40.0 * std::f64::consts::PI, 1024, Frame::Lab, true).expect("static grid")
}

/// `[e^{hL}, hφ₁(hL), hφ₂(hL)]` for a square matrix via one exponential of an augmented block matrix.
fn etd_block<const N: usize>(l: &SMatrix<f64, N, N>, h: f64) -> [SMatrix<f64, N, N>; 3] {
    // Works for N ≤ 2; the augmented size is 3N.
    let mut w = nalgebra::DMatrix::<f64>::zeros(3 * N, 3 * N);
    for i in 0..N {
        for j in 0..N {
            w[(i, j)] = h * l[(i, j)];
        }
        w[(i, N + i)] = 1.0;
        w[(N + i, 2 * N + i)] = 1.0;
    }
    let e = w.exp();
    std::array::from_fn(|k| {
        SMatrix::<f64, N, N>::from_fn(|i, j| if k == 0 { e[(i, j)] } else { h * e[(i, k * N + j)] })
    })
}

/// Single-step exponential Runge-Kutta (ETDRK2) integrator for the GL equation.
///
/// The cubic term is explicit; when `|b|·‖A‖²∞·dt` is large the step is split into `2^k` equal
/// sub-steps whose coefficient tables are cached.
pub struct GlStepper {
    fourier: Fourier,
    b: f64,
    pub dt: f64,
    levels: std::sync::Mutex<Vec<std::sync::Arc<Vec<[f64; 3]>>>>,
}

/// Largest explicit stiffness `|b|·‖A‖²∞·h` accepted in one sub-step.
const GL_STIFFNESS: f64 = 0.25;

impl GlStepper {
    pub fn new(grid: &Grid1D, b: f64, dt: f64) -> Result<Self> {
        if !(b < 0.0) {
            return Err(Error::Unsupported(format!("cubic coefficient {b} is not negative")));
        }
        if !(dt > 0.0) {
            return Err(Error::Domain("time step must be positive".into()));
        }
        let fourier = Fourier::new(grid)?;
        Ok(GlStepper { fourier, b, dt, levels: std::sync::Mutex::new(Vec::new()) })
    }

    fn table(&self, level: usize) -> std::sync::Arc<Vec<[f64; 3]>> {
        let mut levels = self.levels.lock().expect("coefficient cache poisoned");
        while levels.len() <= level {
            let h = self.dt / (1u64 << levels.len()) as f64;
            let t: Vec<[f64; 3]> = self
                .fourier
                .xi
                .iter()
                .map(|k| {
                    let l = SMatrix::<f64, 1, 1>::new(1.0 - 4.0 * k * k);
                    let [e, p1, p2] = etd_block(&l, h);
                    [e[(0, 0)], p1[(0, 0)], p2[(0, 0)]]
                })
                .collect();
            levels.push(std::sync::Arc::new(t));
        }
        levels[level].clone()
    }

    fn nonlinear(&self, a: &[Complex64]) -> Vec<Complex64> {
        self.fourier.forward(&a.iter().map(|z| z * (self.b * z.norm_sqr())).collect::<Vec<_>>())
    }

    fn substep(&self, a: &mut Vec<Complex64>, coeffs: &[[f64; 3]]) {
        let ah = self.fourier.forward(a);
        let na = self.nonlinear(a);
        let mid_h: Vec<Complex64> = (0..ah.len()).map(|j| ah[j] * coeffs[j][0] + na[j] * coeffs[j][1]).collect();
        let mid = self.fourier.inverse(&mid_h);
        let nm = self.nonlinear(&mid);
        let out: Vec<Complex64> = (0..ah.len()).map(|j| mid_h[j] + (nm[j] - na[j]) * coeffs[j][2]).collect();
        *a = self.fourier.inverse(&out);
    }

    pub fn step(&self, field: &mut GlField) {
        let sup2 = field.a.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        let stiff = -self.b * sup2 * self.dt / GL_STIFFNESS;
        let level = if stiff > 1.0 { (stiff.log2().ceil() as usize).min(20) } else { 0 };
        let coeffs = self.table(level);
        for _ in 0..(1usize << level) {
            self.substep(&mut field.a, &coeffs);
        }
        field.t += self.dt;
    }

    /// Steps up to `t_end`, calling `observe` after every step.
    pub fn run(&self, field: &mut GlField, t_end: f64, mut observe: impl FnMut(&GlField)) -> Result<()> {
        let steps = ((t_end - field.t) / self.dt).round().max(0.0) as usize;
        for _ in 0..steps {
            self.step(field);
            if field.a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite { t: field.t, last_good: Box::default() });
            }
            observe(field);
        }
        Ok(())
    }
}

/// One ETDRK2 step of `∂_T A = 4∂_XX A + A + b A|A|²`.
pub fn step_gl(field: &GlField, b: f64, dt: f64) -> Result<GlField> {
    let s = GlStepper::new(&field.grid, b, dt)?;
    let mut out = field.clone();
    s.step(&mut out);
    Ok(out)
}

/// ETDRK2 integrator for the periodic constant-coefficient system `∂_t V = T⁻V + N₂(V) + N₃(V)`.
pub struct TMinusStepper {
    fourier: Fourier,
    params: SystemParams<f64>,
    pub dt: f64,
    coeffs: Vec<[SMatrix<f64, 2, 2>; 3]>,
}

impl TMinusStepper {
    pub fn new(p: &SystemParams<f64>, grid: &Grid1D, dt: f64) -> Result<Self> {
        let fourier = Fourier::new(grid)?;
        let coeffs = fourier
            .xi
            .iter()
            .map(|&k| {
                let l = SMatrix::<f64, 2, 2>::new(
                    -p.d * k * k - 2.0 * p.alpha,
                    p.beta,
                    0.0,
                    -(1.0 - k * k).powi(2) + p.mu,
                );
                etd_block(&l, dt)
            })
            .collect();
        Ok(TMinusStepper { fourier, params: p.clone(), dt, coeffs })
    }

    fn nonlinear(&self, v: &[Vec<f64>; 2]) -> [Vec<Complex64>; 2] {
        let p = &self.params;
        let n1: Vec<f64> = v[0].iter().map(|&a| -3.0 * p.alpha * a * a - p.alpha * a * a * a).collect();
        let n2: Vec<f64> = v[0].iter().zip(&v[1]).map(|(&a, &b)| p.gamma * a * b - p.sigma * b * b * b).collect();
        [self.fourier.forward_real(&n1), self.fourier.forward_real(&n2)]
    }

    fn combine(&self, m: usize, a: &[[Complex64; 2]], b: &[Vec<Complex64>; 2]) -> Vec<[Complex64; 2]> {
        (0..a.len())
            .map(|j| {
                let c = &self.coeffs[j][m];
                [c[(0, 0)] * b[0][j] + c[(0, 1)] * b[1][j], c[(1, 0)] * b[0][j] + c[(1, 1)] * b[1][j]]
            })
            .collect()
    }

    fn to_real(&self, h: &[[Complex64; 2]]) -> [Vec<f64>; 2] {
        std::array::from_fn(|k| {
            let c: Vec<Complex64> = h.iter().map(|z| z[k]).collect();
            self.fourier.inverse(&c).into_iter().map(|z| z.re).collect()
        })
    }

    pub fn step(&self, v: &mut [Vec<f64>; 2]) {
        let vh = [self.fourier.forward_real(&v[0]), self.fourier.forward_real(&v[1])];
        let n0 = self.nonlinear(v);
        let pairs: Vec<[Complex64; 2]> = (0..vh[0].len()).map(|j| [vh[0][j], vh[1][j]]).collect();
        let ev = self.combine(0, &pairs, &vh);
        let pn = self.combine(1, &pairs, &n0);
        let mid_h: Vec<[Complex64; 2]> = ev.iter().zip(&pn).map(|(a, b)| [a[0] + b[0], a[1] + b[1]]).collect();
        let mid = self.to_real(&mid_h);
        let n1 = self.nonlinear(&mid);
        let diff = [
            n1[0].iter().zip(&n0[0]).map(|(a, b)| a - b).collect(),
            n1[1].iter().zip(&n0[1]).map(|(a, b)| a - b).collect(),
        ];
        let corr = self.combine(2, &pairs, &diff);
        let out: Vec<[Complex64; 2]> = mid_h.iter().zip(&corr).map(|(a, b)| [a[0] + b[0], a[1] + b[1]]).collect();
        *v = self.to_real(&out);
    }
}

/// Checks that `xg` is the `ε`-dilation of the slow grid `sg`.
fn check_scaling(eps: f64, xg: &Grid1D, sg: &Grid1D) -> Result<()> {
    if !xg.periodic || !sg.periodic {
        return Err(Error::Unsupported("ansatz construction needs periodic grids".into()));
    }
    let tol = 1e-9 * sg.length();
    if (eps * xg.length() - sg.length()).abs() > tol || (eps * xg.x_min - sg.x_min).abs() > tol {
        return Err(Error::GridMismatch(format!(
            "slow grid [{}, {}) is not ε = {eps} times [{}, {})",
            sg.x_min, sg.x_max, xg.x_min, xg.x_max
        )));
    }
    Ok(())
}

/// Trigonometric interpolation of a slow-grid field (and its X-derivative) onto the fast grid.
fn upsample(sf: &Fourier, values: &[Complex64], n_fast: usize, derivative: bool) -> Result<Vec<Complex64>> {
    let n = sf.n;
    if n_fast < n {
        return Err(Error::Underresolved("fast grid coarser than the slow grid".into()));
    }
    let h = sf.forward(values);
    let mut big = vec![Complex64::zero(); n_fast];
    let scale = n_fast as f64 / n as f64;
    for j in 0..n {
        let mut c = h[j] * scale;
        if derivative {
            c *= Complex64::new(0.0, sf.xi[j]);
        }
        if n % 2 == 0 && j == n / 2 {
            // Split the Nyquist bin so that real data stay real.
            big[j] += 0.5 * c;
            big[n_fast - j] += 0.5 * c;
        } else if j < n / 2 || (n % 2 == 1 && j <= n / 2) {
            big[j] = c;
        } else {
            big[n_fast - (n - j)] = c;
        }
    }
    let mut planner = rustfft::FftPlanner::new();
    let inv = planner.plan_fft_inverse(n_fast);
    inv.process(&mut big);
    let s = 1.0 / n_fast as f64;
    Ok(big.into_iter().map(|z| z * s).collect())
}

/// `ψ(ε, A)` on the fast grid `xg`, whose ε-dilation must equal the grid of `a`.
pub fn build_psi(eps: f64, a: &GlField, data: &GlData<f64>, xg: &Grid1D) -> Result<[Vec<f64>; 2]> {
    check_scaling(eps, xg, &a.grid)?;
    let sf = Fourier::new(&a.grid)?;
    let av = upsample(&sf, &a.a, xg.n, false)?;
    let ax = upsample(&sf, &a.a, xg.n, true)?;
    let e2 = eps * eps;
    let mut out = [vec![0.0; xg.n], vec![0.0; xg.n]];
    for i in 0..xg.n {
        let x = xg.x(i);
        let e1 = Complex64::new(0.0, x).exp();
        let lead = 2.0 * eps * (e1 * av[i]).re;
        let zero = e2 * av[i].norm_sqr();
        let one = e1 * ax[i];
        let two = e1 * e1 * av[i] * av[i];
        for k in 0..2 {
            out[k][i] = lead * data.rho_c[k]
                + zero * data.rho_0[k]
                + 2.0 * e2 * (one * data.rho_1[k]).re
                + 2.0 * e2 * (two * data.rho_2[k]).re;
        }
    }
    Ok(out)
}

/// `A₀(X) = ε⁻¹ e^{−iX/ε} (π₁ʰ V_c)(X/ε)`, resampled onto `slow`.
pub fn extract_a0(
    filters: &ModeFilterSpec,
    xg: &Grid1D,
    v_c: [&[f64]; 2],
    eps: f64,
    slow: &Grid1D,
) -> Result<GlField> {
    check_scaling(eps, xg, slow)?;
    // π₁ʰV e^{−ix} has wavenumbers in [−1/2, 1/2], i.e. up to 1/(2ε) on the slow grid.
    let nyquist = std::f64::consts::PI / slow.dx;
    if 0.5 / eps >= nyquist {
        return Err(Error::Underresolved(format!("ε = {eps} needs a slow Nyquist above {}", 0.5 / eps)));
    }
    let z = filters.pi1h(xg, v_c)?;
    let w: Vec<Complex64> = z.iter().enumerate().map(|(i, z)| z * Complex64::new(0.0, -xg.x(i)).exp() / eps).collect();
    let ff = Fourier::new(xg)?;
    let wh = ff.forward(&w);
    let n = slow.n;
    let mut small = vec![Complex64::zero(); n];
    let scale = n as f64 / xg.n as f64;
    for k in 0..n.div_ceil(2) {
        small[k] = wh[k] * scale;
        if k > 0 {
            small[n - k] = wh[xg.n - k] * scale;
        }
    }
    let sf = Fourier::new(slow)?;
    Ok(GlField { grid: *slow, a: sf.inverse(&small), t: 0.0 })
}

/// `‖V − ψ‖` in the uniformly local `H¹` norm.
pub fn approximation_residual(grid: &Grid1D, v: [&[f64]; 2], psi: [&[f64]; 2]) -> Result<UlNorm> {
    let d: [Vec<f64>; 2] = std::array::from_fn(|k| v[k].iter().zip(psi[k]).map(|(a, b)| a - b).collect());
    ul_sobolev_norm_components(grid, &[&d[0], &d[1]], 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub eps: f64,
    pub t_slow: f64,
    pub residual: f64,
    pub sup_a: f64,
}

/// Slow-grid length used by the approximation experiment.
pub const APPROX_SLOW_LENGTH: f64 = 16.0 * std::f64::consts::PI;

/// Runs the periodic constant-coefficient system from `ψ(ε, A₀)` up to `t = T/ε²` and compares with
/// `ψ(ε, A(T))`, where `μ = ε²`.
pub fn approximation_experiment(
    p: &SystemParams<f64>,
    eps: f64,
    a0: impl Fn(f64) -> Complex64,
    t_slow: f64,
    dt: f64,
) -> Result<ApproxReport> {
    let p = p.with_mu(eps * eps);
    let data = derive_ansatz_vectors(&p)?;
    let slow = Grid1D::with_points(0.0, APPROX_SLOW_LENGTH, 256, Frame::Lab, true)?;
    let fast_len = APPROX_SLOW_LENGTH / eps;
    let n_fast = (fast_len / (std::f64::consts::PI / 16.0)).round() as usize;
    let xg = Grid1D::with_points(0.0, fast_len, n_fast, Frame::Lab, true)?;

    let mut a = GlField::from_fn(slow, a0);
    let mut v = build_psi(eps, &a, &data, &xg)?;
    let steps = (t_slow / (eps * eps) / dt).round() as usize;
    let dt_fast = t_slow / (eps * eps) / steps as f64;
    let gl = GlStepper::new(&slow, data.cubic, dt_fast * eps * eps)?;
    let sys = TMinusStepper::new(&p, &xg, dt_fast)?;
    for _ in 0..steps {
        sys.step(&mut v);
        gl.step(&mut a);
    }
    if v.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { t: t_slow / (eps * eps), last_good: Box::default() });
    }
    let psi = build_psi(eps, &a, &data, &xg)?;
    let r = approximation_residual(&xg, [&v[0], &v[1]], [&psi[0], &psi[1]])?;
    Ok(ApproxReport { eps, t_slow, residual: r.value, sup_a: a.sup_norm() })
}
