use frontlab::gl::approximation_experiment;
use frontlab::Params;
use num_complex::Complex64;

fn params() -> Params {
    Params { d: 1.0, alpha: 1.0, beta: 0.5, gamma: 1.0, sigma: 0.1, mu: 0.0, mu0: 0.5 }
}

fn a0(x: f64) -> Complex64 {
    Complex64::new(0.5 + 0.25 * (x / 8.0).cos(), 0.2 * (x / 4.0).sin())
}

#[test]
fn residual_order_at_least_three_halves() {
    let r2 = approximation_experiment(&params(), 0.2, a0, 1.0, 0.02).unwrap();
    let r1 = approximation_experiment(&params(), 0.1, a0, 1.0, 0.02).unwrap();
    eprintln!("{r2:?}\n{r1:?}");
    assert!(r2.residual <= 2.0 * 0.2f64.powf(1.5), "{}", r2.residual);
    assert!(r1.residual / r2.residual <= 0.5f64.powf(1.5) * 1.3);
}

#[test]
fn extracted_amplitude_bound_is_uniform_in_eps() {
    use frontlab::gl::{extract_a0, APPROX_SLOW_LENGTH};
    use frontlab::grid::{Frame, Grid1D};
    use frontlab::modefilter::ModeFilterSpec;
    use frontlab::weights::ul_sobolev_norm_components;

    let mut constants = Vec::new();
    for eps in [0.2, 0.1] {
        let p = params().with_mu(eps * eps);
        let slow = Grid1D::with_points(0.0, APPROX_SLOW_LENGTH, 256, Frame::Lab, true).unwrap();
        let n = (APPROX_SLOW_LENGTH / eps * 16.0 / std::f64::consts::PI).round() as usize;
        let xg = Grid1D::with_points(0.0, APPROX_SLOW_LENGTH / eps, n, Frame::Lab, true).unwrap();
        let rc = [p.beta, p.d + 2.0 * p.alpha];
        let v: [Vec<f64>; 2] = std::array::from_fn(|k| {
            xg.xs().iter().map(|&x| 2.0 * eps * rc[k] * (Complex64::new(0.0, x).exp() * a0(eps * x)).re).collect()
        });
        let a = extract_a0(&ModeFilterSpec::new(p), &xg, [&v[0], &v[1]], eps, &slow).unwrap();
        let re: Vec<f64> = a.a.iter().map(|z| z.re).collect();
        let im: Vec<f64> = a.a.iter().map(|z| z.im).collect();
        let h1 = ul_sobolev_norm_components(&slow, &[&re, &im], 1).unwrap().value;
        let l2 = ul_sobolev_norm_components(&xg, &[&v[0], &v[1]], 0).unwrap().value;
        constants.push(h1 * eps / l2);
    }
    let ratio = constants[0] / constants[1];
    assert!((0.5..2.0).contains(&ratio), "{constants:?}");
}
