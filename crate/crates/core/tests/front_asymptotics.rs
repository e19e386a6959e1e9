use frontlab::front::{check_front_asymptotics, solve_front, solve_front_default};
use frontlab::Params;

#[test]
fn weighted_derivative_is_linear_on_the_right() {
    let f = solve_front_default(&Params::gate_preset()).unwrap();
    let fit = check_front_asymptotics(&f, Some((10.0, 30.0))).unwrap();
    assert!(fit.r_squared >= 0.999, "{fit:?}");
    assert!(fit.a < 0.0);
    let full = check_front_asymptotics(&f, None).unwrap();
    assert!(full.r_squared >= 0.999, "{full:?}");
}

#[test]
fn fit_stable_under_domain_doubling() {
    let p = Params::gate_preset();
    let a = solve_front(&p, (-40.0, 60.0), 4001).unwrap();
    let b = solve_front(&p, (-80.0, 120.0), 8002).unwrap();
    let fa = check_front_asymptotics(&a, Some((10.0, 30.0))).unwrap();
    let fb = check_front_asymptotics(&b, Some((10.0, 30.0))).unwrap();
    assert!(((fa.a - fb.a) / fa.a).abs() < 0.01, "{fa:?} {fb:?}");
    assert!(((fa.b - fb.b) / fa.b).abs() < 0.01, "{fa:?} {fb:?}");
}

#[test]
fn other_parameters_converge() {
    for (d, alpha) in [(2.0, 1.0), (1.0, 0.5), (0.5, 2.0)] {
        let p = Params { d, alpha, ..Params::gate_preset() };
        let f = solve_front_default(&p).unwrap();
        assert!(f.residual <= 1e-8, "d={d} alpha={alpha}: {}", f.residual);
        assert!(f.is_monotone());
    }
}
