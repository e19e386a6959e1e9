//! Truncated Taylor jets used for exact derivatives of the weight functions.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Real;

/// Number of Taylor coefficients carried (derivatives of order 0..=4).
pub const ORDER: usize = 5;

/// `c[k] = f^{(k)}(x₀)/k!` truncated after order 4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T> {
    pub c: [T; ORDER],
}

impl<T: Real> Jet<T> {
    pub fn constant(v: T) -> Self {
        let mut c = [T::zero(); ORDER];
        c[0] = v;
        Jet { c }
    }

    /// The identity function expanded at `x`.
    pub fn variable(x: T) -> Self {
        let mut c = [T::zero(); ORDER];
        c[0] = x;
        c[1] = T::one();
        Jet { c }
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    /// k-th derivative.
    pub fn derivative(&self, k: usize) -> T {
        let mut f = T::one();
        for i in 2..=k {
            f = f * T::int(i as i64);
        }
        self.c[k] * f
    }

    /// All derivatives of order 0..=4.
    pub fn derivatives(&self) -> [T; ORDER] {
        std::array::from_fn(|k| self.derivative(k))
    }

    pub fn scale(&self, s: T) -> Self {
        Jet { c: self.c.map(|v| v * s) }
    }

    pub fn add_const(&self, s: T) -> Self {
        let mut out = *self;
        out.c[0] = out.c[0] + s;
        out
    }

    /// Composition `g ∘ self` for a scalar function with known derivatives `g^{(k)}(self₀)`.
    fn compose(&self, g: [T; ORDER]) -> Self {
        // Powers of the non-constant part h = self − self₀.
        let mut h = *self;
        h.c[0] = T::zero();
        let mut out = Jet::constant(g[0]);
        let mut hp = Jet::constant(T::one());
        let mut fact = T::one();
        for (k, gk) in g.iter().enumerate().skip(1) {
            hp = hp * h;
            fact = fact * T::int(k as i64);
            out = out + hp.scale(*gk / fact);
        }
        out
    }

    pub fn exp(&self) -> Self {
        let e = self.c[0].exp();
        self.compose([e; ORDER])
    }

    pub fn ln(&self) -> Self {
        let x = self.c[0];
        let one = T::one();
        let g = [
            x.ln(),
            one / x,
            -one / (x * x),
            T::int(2) / (x * x * x),
            -T::int(6) / (x * x * x * x),
        ];
        self.compose(g)
    }

    pub fn sqrt(&self) -> Self {
        let x = self.c[0];
        let s = x.sqrt();
        let h = T::lit(0.5);
        let g = [
            s,
            h / s,
            -h * h / (s * x),
            T::lit(0.375) / (s * x * x),
            T::lit(-0.9375) / (s * x * x * x),
        ];
        self.compose(g)
    }

    pub fn recip(&self) -> Self {
        let x = self.c[0];
        let one = T::one();
        let g = [
            one / x,
            -one / (x * x),
            T::int(2) / (x * x * x),
            -T::int(6) / (x * x * x * x),
            T::int(24) / (x * x * x * x * x),
        ];
        self.compose(g)
    }

    /// Horner evaluation of a polynomial with ascending coefficients.
    pub fn poly(&self, coeffs: &[T]) -> Self {
        let mut acc = Jet::constant(T::zero());
        for &c in coeffs.iter().rev() {
            acc = (acc * *self).add_const(c);
        }
        acc
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: Jet<T>) -> Jet<T> {
        Jet { c: std::array::from_fn(|k| self.c[k] + rhs.c[k]) }
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: Jet<T>) -> Jet<T> {
        Jet { c: std::array::from_fn(|k| self.c[k] - rhs.c[k]) }
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        Jet { c: self.c.map(|v| -v) }
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: Jet<T>) -> Jet<T> {
        let mut c = [T::zero(); ORDER];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in rhs.c.iter().enumerate().take(ORDER - i) {
                c[i + j] = c[i + j] + *a * *b;
            }
        }
        Jet { c }
    }
}
