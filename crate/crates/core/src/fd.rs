//! Finite-difference stencils on uniform grids.
//!
//! Five-point stencils give fourth-order first and second derivatives, with second-order
//! three-point fallbacks next to a boundary. The time stepper uses the seven-point family from
//! [`wide_4th`], fourth order for every derivative up to the fourth.

/// Offsets `-2..=2` for five-point stencils, `-1..=1` (padded with zeros) for three-point ones.
pub type Stencil = [f64; 5];

pub fn d1_4th(h: f64) -> Stencil {
    let s = 1.0 / (12.0 * h);
    [s, -8.0 * s, 0.0, 8.0 * s, -s]
}

pub fn d2_4th(h: f64) -> Stencil {
    let s = 1.0 / (12.0 * h * h);
    [-s, 16.0 * s, -30.0 * s, 16.0 * s, -s]
}

pub fn d1_2nd(h: f64) -> Stencil {
    let s = 0.5 / h;
    [0.0, -s, 0.0, s, 0.0]
}

pub fn d2_2nd(h: f64) -> Stencil {
    let s = 1.0 / (h * h);
    [0.0, s, -2.0 * s, s, 0.0]
}

pub fn d3_2nd(h: f64) -> Stencil {
    let s = 0.5 / (h * h * h);
    [-s, 2.0 * s, 0.0, -2.0 * s, s]
}

pub fn d4_2nd(h: f64) -> Stencil {
    let s = 1.0 / (h * h * h * h);
    [s, -4.0 * s, 6.0 * s, -4.0 * s, s]
}

/// `(D1, D2)` stencils used at node `i` of an `n`-node non-periodic grid (`1 ≤ i ≤ n−2`).
pub fn first_second(i: usize, n: usize, h: f64) -> (Stencil, Stencil) {
    if i >= 2 && i + 2 < n {
        (d1_4th(h), d2_4th(h))
    } else {
        (d1_2nd(h), d2_2nd(h))
    }
}

pub fn apply(st: &Stencil, f: &[f64], i: usize) -> f64 {
    let mut s = 0.0;
    for (k, c) in st.iter().enumerate() {
        if *c != 0.0 {
            s += c * f[i + k - 2];
        }
    }
    s
}

pub fn apply_periodic(st: &Stencil, f: &[f64], i: usize) -> f64 {
    let n = f.len();
    let mut s = 0.0;
    for (k, c) in st.iter().enumerate() {
        if *c != 0.0 {
            s += c * f[(i + n + k - 2) % n];
        }
    }
    s
}

pub fn combine(a: &Stencil, ca: f64, b: &Stencil, cb: f64) -> Stencil {
    std::array::from_fn(|k| ca * a[k] + cb * b[k])
}

/// Seven-point stencils (offsets `-3..=3`) of fourth order for derivatives 0..=4.
pub type Stencil7 = [f64; 7];

pub fn wide_4th(h: f64) -> [Stencil7; 5] {
    let pad = |s: Stencil| [0.0, s[0], s[1], s[2], s[3], s[4], 0.0];
    let s3 = 1.0 / (8.0 * h * h * h);
    let s4 = 1.0 / (6.0 * h * h * h * h);
    [
        [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        pad(d1_4th(h)),
        pad(d2_4th(h)),
        [s3, -8.0 * s3, 13.0 * s3, 0.0, -13.0 * s3, 8.0 * s3, -s3],
        [-s4, 12.0 * s4, -39.0 * s4, 56.0 * s4, -39.0 * s4, 12.0 * s4, -s4],
    ]
}

pub fn apply7(st: &Stencil7, f: &[f64], i: usize) -> f64 {
    st.iter().enumerate().map(|(k, c)| c * f[i + k - 3]).sum()
}

/// Derivatives of order 1..=3 on a non-periodic grid; zero on nodes lacking a full stencil.
pub fn derivatives_1_to_3(f: &[f64], h: f64) -> [Vec<f64>; 3] {
    let n = f.len();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 1..n - 1 {
        let (a, b) = first_second(i, n, h);
        out[0][i] = apply(&a, f, i);
        out[1][i] = apply(&b, f, i);
        if i >= 2 && i + 2 < n {
            out[2][i] = apply(&d3_2nd(h), f, i);
        }
    }
    out
}
