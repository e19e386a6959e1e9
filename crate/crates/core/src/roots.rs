//! Roots of complex polynomials via companion-matrix eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

fn horner(c: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// Relative residual `|p(x)| / Σ|c_k||x|^k`.
pub fn relative_residual(c: &[Complex64], x: Complex64) -> f64 {
    let (p, _) = horner(c, x);
    let r = x.norm();
    let scale: f64 = c.iter().enumerate().map(|(k, a)| a.norm() * r.powi(k as i32)).sum();
    if scale == 0.0 {
        0.0
    } else {
        p.norm() / scale
    }
}

/// All roots of `Σ c_k x^k` (ascending coefficients), sorted by real part then imaginary part.
pub fn poly_roots(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c = c.to_vec();
    while c.len() > 1 && c.last().is_some_and(|v| v.norm() == 0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Err(Error::Domain("constant polynomial has no roots".into()));
    }
    let lead = c[n];
    if !lead.is_finite() {
        return Err(Error::Domain("non-finite leading coefficient".into()));
    }
    let mut roots = if n == 1 {
        vec![-c[0] / lead]
    } else {
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..n {
            m[(i, n - 1)] = -c[i] / lead;
        }
        let schur = m.schur();
        schur
            .eigenvalues()
            .ok_or_else(|| Error::NonConvergence { what: "companion Schur".into(), iterations: 0, residual: f64::NAN })?
            .iter()
            .copied()
            .collect()
    };
    for r in roots.iter_mut() {
        let (p, dp) = horner(&c, *r);
        if dp.norm() > 0.0 {
            let cand = *r - p / dp;
            if cand.is_finite() && relative_residual(&c, cand) < relative_residual(&c, *r) {
                *r = cand;
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}
