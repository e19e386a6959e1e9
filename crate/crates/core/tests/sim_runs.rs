//! Run-level checks outside the admissible parameter set, driven through the stepper directly
//! because `run_simulation` refuses parameters that fail the gate.

use frontlab::diagnostics::exponential_rate;
use frontlab::sim::{initial_field, Context, InitialCondition, SimConfig, Stepper};
use frontlab::spectral::select_theta;
use frontlab::Params;

/// Integer times `1..=t_end` with `‖u₂‖∞` and `‖U/ρ*‖∞` of the weighted field.
fn drive(cfg: &SimConfig, params: &Params, t_end: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let ctx = Context::build(cfg).unwrap();
    let mut stepper = Stepper::new(params, cfg.grid, cfg.dt, cfg.frame, &ctx.bg, &ctx.weights, &ctx.sponge).unwrap();
    let inv_rho: Vec<f64> = ctx.weights.ln_rho.iter().map(|l| (-l).exp()).collect();
    let mut f = initial_field(cfg, &ctx.weights).unwrap();
    let (mut t, mut u2, mut weighted) = (vec![], vec![], vec![]);
    let per_unit = (1.0 / cfg.dt).round() as usize;
    for k in 1..=t_end * per_unit {
        stepper.step(&mut f);
        if k % per_unit == 0 {
            t.push(k as f64 * cfg.dt);
            u2.push(f[1].iter().fold(0.0f64, |m, v| m.max(v.abs())));
            let w = (0..cfg.grid.n).map(|i| f[0][i].abs().max(f[1][i].abs()) * inv_rho[i]).fold(0.0, f64::max);
            weighted.push(w);
        }
    }
    (t, u2, weighted)
}

#[test]
fn uncoupled_pattern_component_decays_at_the_weighted_rate() {
    let mut cfg = SimConfig::preset(Params::sim_preset().with_mu(0.0));
    cfg.ic = InitialCondition::SmallBump { center: [0.0, -15.0], width: [2.0, 1.5], delta: Some(1e-3), ratio: 1.0 };
    let uncoupled = Params { beta: 0.0, ..cfg.params.clone() };
    let (t, u2, _) = drive(&cfg, &uncoupled, 120);
    let eta = select_theta(&cfg.params).unwrap().eta;
    let (rate, r2) = exponential_rate(&t, &u2, (20.0, 120.0)).unwrap();
    assert!(r2 > 0.99, "{r2}");
    assert!(rate >= eta, "{rate} < {eta}");
}

#[test]
fn stable_pattern_regime_decays_monotonically() {
    let mut cfg = SimConfig::preset(Params::sim_preset());
    cfg.ic = InitialCondition::SmallBump { center: [0.0, -15.0], width: [2.0, 1.5], delta: Some(3e-3), ratio: 0.1 };
    let (t, _, y) = drive(&cfg, &cfg.params.with_mu(-0.05), 150);
    let start = t.iter().position(|t| *t >= 20.0).unwrap();
    for k in start + 1..y.len() {
        assert!(y[k] <= y[k - 1] * (1.0 + 1e-9), "t = {}: {} > {}", t[k], y[k], y[k - 1]);
    }
    assert!(y[y.len() - 1] < 0.5 * y[start], "{} vs {}", y[y.len() - 1], y[start]);
}

#[test]
fn saturated_amplitude_matches_the_amplitude_equation() {
    use frontlab::diagnostics::{gl_amplitude_prediction, saturated_amplitude, window_sensitivity};
    use frontlab::grid::{Frame, Grid1D};
    use frontlab::sim::{run_simulation, SeriesKey};

    let mut cfg = SimConfig::preset(Params::sim_preset());
    cfg.grid = Grid1D::with_spacing(-1000.0, 200.0, 0.15, Frame::Comoving, false).unwrap();
    cfg.t_end = 200.0;
    let ts = run_simulation(&cfg).unwrap();
    let amp = saturated_amplitude(cfg.params.mu, &ts, -960.0).unwrap();
    let want = gl_amplitude_prediction(&cfg.params).unwrap();
    assert!(amp.saturated, "{amp:?}");
    assert!((amp.amplitude / want - 1.0).abs() <= 0.3, "{} vs {want}", amp.amplitude);
    let ws = window_sensitivity(&ts, SeriesKey::UOverRho).unwrap();
    assert!(ws.converged, "{} vs {}", ws.early.slope, ws.late.slope);
}
