use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use frontlab::diagnostics::{
    decay_fit, exponential_rate, gl_amplitude_prediction, pattern_wavenumber, pattern_window, saturated_amplitude,
    trend_per_hundred, window_sensitivity, AmplitudeRatio, DecayFit, PatternAmplitude, WavenumberEstimate,
    WindowSensitivity,
};
use frontlab::eigen::{
    evans_winding, keyhole_contour, wronskian_identity_check, Background, EigenOp, EigenOperator,
};
use frontlab::front::{check_front_asymptotics, solve_front_default, FrontFit};
use frontlab::gl::{
    approximation_experiment, default_gl_grid, derive_ansatz_vectors, ApproxReport, GlField, GlStepper,
};
use frontlab::grid::{Frame, Grid1D};
use frontlab::modefilter::{eigendata, Cutoff, FilterKind, ModeFilterSpec, CHI_C, CHI_C_H, CHI_S_H};
use frontlab::params::{check_hypotheses, gamma_gl, gl_cubic_coefficient, GateReport};
use frontlab::sim::{run_simulation, SeriesKey, TimeSeries};
use frontlab::spectral::{select_theta, unweighted_symbol, weighted_border, xi_grid, BorderTag};
use frontlab::weights::{WeightKind, WeightSpec};
use frontlab::Params;

use crate::config::{Config, Cubic};
use crate::io::{write_csv, write_json, write_snapshots};

pub const TAGS: [BorderTag; 4] = [BorderTag::KppMinus, BorderTag::KppPlus, BorderTag::ShMinus, BorderTag::ShPlus];

/// Worker count for scans: `FRONTLAB_WORKERS`, else the available parallelism.
pub const WORKERS_ENV: &str = "FRONTLAB_WORKERS";

pub fn workers() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => {
            let n: usize = s.trim().parse().with_context(|| format!("{WORKERS_ENV}={s:?} is not a count"))?;
            if n == 0 {
                bail!("{WORKERS_ENV} must be at least 1");
            }
            Ok(n)
        }
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateSummary {
    pub report: GateReport<f64>,
    /// `γ_GL` along `β = 10^{-k}`, `k = 1..4`.
    pub beta_sweep: Vec<(f64, f64)>,
    pub beta_sweep_increasing: bool,
    pub cross_validation_draws: usize,
    /// Largest relative gap between the closed-form and the assembled cubic coefficient.
    pub cross_validation_max_gap: f64,
}

pub fn gate(cfg: &Config, dir: &Path) -> Result<(GateSummary, Vec<PathBuf>)> {
    let p = &cfg.params;
    let report = check_hypotheses(p)?;
    let mut beta_sweep = vec![];
    for k in 1..=4 {
        let beta = 10f64.powi(-k);
        beta_sweep.push((beta, gamma_gl(&Params { beta, ..p.clone() })?));
    }
    let beta_sweep_increasing = beta_sweep.windows(2).all(|w| w[1].1 > w[0].1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws = 100;
    let mut gap: f64 = 0.0;
    for _ in 0..draws {
        let mut beta = 0.0;
        while beta == 0.0 {
            beta = rng.random_range(-1.0..=1.0);
        }
        let base = Params {
            d: rng.random_range(0.1..5.0),
            alpha: rng.random_range(0.1..5.0),
            beta,
            gamma: 1.0,
            sigma: rng.random_range(0.1..20.0),
            mu: 0.0,
            mu0: 0.01,
        };
        let q = base.with_gamma(rng.random_range(0.0..1.0) * gamma_gl(&base)?);
        let closed = gl_cubic_coefficient(&q, q.gamma);
        gap = gap.max((closed - derive_ansatz_vectors(&q)?.cubic).abs() / closed.abs());
    }
    let summary = GateSummary {
        report,
        beta_sweep,
        beta_sweep_increasing,
        cross_validation_draws: draws,
        cross_validation_max_gap: gap,
    };
    let path = dir.join("gate.json");
    write_json(&path, &summary)?;
    Ok((summary, vec![path]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BorderMargin {
    pub tag: BorderTag,
    pub mu: f64,
    pub max_re: f64,
    pub argmax_xi: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub theta: f64,
    pub eta: f64,
    pub margins: Vec<BorderMargin>,
    /// kpp−, sh− and sh+ stay at or below `−3η` at μ and μ₀.
    pub margins_hold: bool,
    /// kpp+ reaches zero at `ξ = 0` only.
    pub kpp_plus_touches_only_at_zero: bool,
}

pub fn spectrum(cfg: &Config, dir: &Path) -> Result<(SpectrumSummary, Vec<PathBuf>)> {
    let p = &cfg.params;
    let ch = select_theta(p)?;
    let s = &cfg.spectrum;
    let xi = xi_grid(s.xi_min, s.xi_max, s.points);
    let mut margins = vec![];
    let mut margins_hold = true;
    let mut touches = true;
    for q in [p.clone(), p.with_mu(p.mu0)] {
        for tag in TAGS {
            let c = weighted_border(&q, ch.theta, tag, &xi);
            if tag == BorderTag::KppPlus {
                touches &= c.max_real().abs() < 1e-12
                    && c.samples.iter().all(|(x, l)| if x.abs() < 1e-12 { l.re.abs() < 1e-12 } else { l.re < 0.0 });
            } else {
                margins_hold &= c.max_real() <= -3.0 * ch.eta;
            }
            margins.push(BorderMargin { tag, mu: q.mu, max_re: c.max_real(), argmax_xi: c.argmax_real() });
        }
    }
    let weighted: Vec<_> = TAGS.iter().map(|&t| weighted_border(p, ch.theta, t, &xi)).collect();
    let raw: Vec<Vec<Complex64>> = TAGS
        .iter()
        .map(|&t| {
            let poly = unweighted_symbol(p, t);
            xi.iter().map(|&x| poly.eval(Complex64::new(0.0, x))).collect()
        })
        .collect();
    let mut header = vec!["xi".to_string()];
    for kind in ["weighted", "unweighted"] {
        for t in TAGS {
            header.push(format!("{kind}_{}_re", t.label()));
            header.push(format!("{kind}_{}_im", t.label()));
        }
    }
    let rows = (0..xi.len()).map(|i| {
        let mut r = vec![xi[i]];
        for c in &weighted {
            r.extend([c.samples[i].1.re, c.samples[i].1.im]);
        }
        for c in &raw {
            r.extend([c[i].re, c[i].im]);
        }
        r
    });
    let csv = dir.join("spectrum.csv");
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&csv, &hdr, rows)?;
    let summary = SpectrumSummary {
        theta: ch.theta,
        eta: ch.eta,
        margins,
        margins_hold,
        kpp_plus_touches_only_at_zero: touches,
    };
    let json = dir.join("spectrum.json");
    write_json(&json, &summary)?;
    Ok((summary, vec![csv, json]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrontSummary {
    pub c: f64,
    pub kappa: f64,
    pub right_rate: f64,
    pub residual: f64,
    pub monotone: bool,
    /// Largest relative error of `ln(1 − q)/x` against κ over the leftmost five units.
    pub left_tail_rate_error: f64,
    pub fit: FrontFit,
}

pub fn front(cfg: &Config, dir: &Path) -> Result<(FrontSummary, Vec<PathBuf>)> {
    let p = &cfg.params;
    let f = solve_front_default(p)?;
    let kappa = (3f64.sqrt() - 1.0) * (p.alpha / p.d).sqrt();
    let left_tail_rate_error = (0..=f.grid.index_of(f.grid.x_min + 5.0))
        .map(|i| ((f.one_minus_q[i].ln() / f.grid.x(i) - kappa) / kappa).abs())
        .fold(0.0, f64::max);
    let fit = check_front_asymptotics(&f, Some(cfg.front.fit_window))?;
    let csv = dir.join("front.csv");
    write_csv(
        &csv,
        &["x", "q", "one_minus_q", "q_prime"],
        (0..f.grid.n).map(|i| vec![f.grid.x(i), f.q[i], f.one_minus_q[i], f.qprime[i]]),
    )?;
    let summary = FrontSummary {
        c: f.c,
        kappa: f.kappa,
        right_rate: f.rate,
        residual: f.residual,
        monotone: f.is_monotone(),
        left_tail_rate_error,
        fit,
    };
    let json = dir.join("front.json");
    write_json(&json, &summary)?;
    Ok((summary, vec![csv, json]))
}

/// Diagnostics of one simulation. Each entry is `None` when the run is too short for it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimSummary {
    pub mu: f64,
    pub eta: f64,
    pub t_end: f64,
    pub steps: usize,
    pub truncated: bool,
    pub decay: Option<DecayFit>,
    pub window_sensitivity: Option<WindowSensitivity>,
    /// Semilog rate of `‖u₂‖∞` on `[20, 200]` and its `r²`.
    pub u2_rate: Option<(f64, f64)>,
    pub v_sup_max: f64,
    pub saturation_time: Option<f64>,
    /// Relative drift of `‖V‖∞` per 100 time units after saturation.
    pub v_trend_per_hundred: Option<f64>,
    pub amplitude: Option<PatternAmplitude>,
    pub gl_amplitude_prediction: Option<f64>,
    pub wavenumber: Option<WavenumberEstimate>,
    pub notes: Vec<String>,
}

fn noted<T>(notes: &mut Vec<String>, what: &str, r: frontlab::Result<T>) -> Option<T> {
    r.map_err(|e| notes.push(format!("{what}: {e}"))).ok()
}

pub fn summarize(mu: f64, ts: &TimeSeries, eta: f64, left: f64) -> SimSummary {
    let mut notes = vec![];
    let t_end = ts.t.last().copied().unwrap_or(0.0);
    let decay = noted(&mut notes, "decay fit", decay_fit(ts, SeriesKey::UOverRho, (10.0, 200.0)));
    let ws = noted(&mut notes, "window sensitivity", window_sensitivity(ts, SeriesKey::UOverRho));
    let u2_rate = noted(&mut notes, "u2 rate", exponential_rate(&ts.t, ts.get(SeriesKey::U2Sup), (20.0, 200.0)));
    let v = ts.get(SeriesKey::VSup);
    let v_sup_max = v.iter().copied().fold(0.0, f64::max);
    let saturation_time = ts.t.iter().zip(v).find(|(_, v)| **v >= 0.98 * v_sup_max).map(|(t, _)| *t);
    let v_trend = saturation_time
        .and_then(|ts0| noted(&mut notes, "trend", trend_per_hundred(&ts.t, v, (ts0.max(50.0), t_end))));
    let amplitude = noted(&mut notes, "amplitude", saturated_amplitude(mu, ts, left));
    let wavenumber = ts.snapshots.last().and_then(|s| {
        let w = noted(&mut notes, "pattern window", pattern_window(&ts.grid, s, left))?;
        noted(&mut notes, "wavenumber", pattern_wavenumber(&ts.grid, &s.v, w))
    });
    SimSummary {
        mu,
        eta,
        t_end,
        steps: ts.steps,
        truncated: ts.truncated,
        decay,
        window_sensitivity: ws,
        u2_rate,
        v_sup_max,
        saturation_time,
        v_trend_per_hundred: v_trend,
        amplitude,
        gl_amplitude_prediction: None,
        wavenumber,
        notes,
    }
}

/// Runs one simulation into `dir`; refuses parameters that fail the gate.
pub fn simulate(cfg: &Config, params: &Params, dir: &Path) -> Result<(SimSummary, TimeSeries, Vec<PathBuf>)> {
    let gate = check_hypotheses(params)?;
    if !gate.admissible {
        bail!(
            "gate failed for mu = {}: gamma = {} must lie in (gamma_rem, gamma_GL) = ({}, {}); simulation refused",
            params.mu,
            params.gamma,
            gate.gamma_rem,
            gate.gamma_gl
        );
    }
    let sim = cfg.sim.to_sim_config(params)?;
    let ts = run_simulation(&sim).map_err(|e| anyhow!("simulation at mu = {}: {e}", params.mu))?;
    let eta = select_theta(params)?.eta;
    let mut summary = summarize(params.mu, &ts, eta, cfg.sim.diagnostics_left);
    summary.gl_amplitude_prediction = gl_amplitude_prediction(params).ok();
    std::fs::create_dir_all(dir)?;
    let series = dir.join("timeseries.csv");
    let keys = SeriesKey::ALL;
    let mut header = vec!["t"];
    header.extend(keys.iter().map(|k| k.name()));
    write_csv(
        &series,
        &header,
        (0..ts.t.len()).map(|i| {
            let mut r = vec![ts.t[i]];
            r.extend(keys.iter().map(|k| ts.get(*k)[i]));
            r
        }),
    )?;
    let snaps = dir.join("snapshots.bin");
    write_snapshots(&snaps, &ts.grid, &ts.snapshots)?;
    let mut files = vec![series, snaps];
    if let Some(last) = ts.snapshots.last() {
        let plot = dir.join("profile.csv");
        write_csv(&plot, &["x", "u", "v"], (0..ts.grid.n).map(|i| vec![ts.grid.x(i), last.u[i], last.v[i]]))?;
        files.push(plot);
    }
    let json = dir.join("simulate.json");
    write_json(&json, &summary)?;
    files.push(json);
    Ok((summary, ts, files))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanSummary {
    pub workers: usize,
    pub runs: Vec<SimSummary>,
    pub ratios: Vec<AmplitudeRatio>,
}

/// Independent runs over `scan.mu` on a bounded pool; outputs in `scan/mu_<μ>/`.
pub fn scan(cfg: &Config, dir: &Path) -> Result<(ScanSummary, Vec<PathBuf>)> {
    let workers = workers()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let results: Vec<Result<(SimSummary, TimeSeries, Vec<PathBuf>)>> = pool.install(|| {
        cfg.scan
            .mu
            .par_iter()
            .map(|&mu| simulate(cfg, &cfg.params.with_mu(mu), &dir.join("scan").join(format!("mu_{mu}"))))
            .collect()
    });
    let mut runs = vec![];
    let mut files = vec![];
    for r in results {
        let (s, _, f) = r?;
        runs.push(s);
        files.extend(f);
    }
    let mut ratios = vec![];
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            if let (Some(a), Some(b)) = (&runs[i].amplitude, &runs[j].amplitude) {
                ratios.push(AmplitudeRatio {
                    mu_i: a.mu,
                    mu_j: b.mu,
                    measured: a.amplitude / b.amplitude,
                    predicted: (a.mu / b.mu).sqrt(),
                });
            }
        }
    }
    let summary = ScanSummary { workers, runs, ratios };
    let json = dir.join("scan.json");
    write_json(&json, &summary)?;
    files.push(json);
    Ok((summary, files))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiltersSummary {
    pub mu: f64,
    pub fields: usize,
    /// `‖Π_c V + Π_s V − V‖∞ / ‖V‖∞`, worst over the fields.
    pub partition_error: f64,
    /// Worst relative `‖Π_c B(Π_c V₁, Π_c V₂)‖∞`.
    pub quadratic_residual: f64,
    /// The same check with a cutoff widened to reach `ξ = 2`, on a critical mode.
    pub corrupted_cutoff_residual: f64,
}

fn random_field(rng: &mut ChaCha8Rng, g: &Grid1D) -> [Vec<f64>; 2] {
    // Wavenumbers m/128 are commensurate with the periodic domain of length 256π.
    let modes: Vec<(f64, f64, [f64; 2])> = (0..40)
        .map(|_| {
            let k = rng.random_range(0..=384) as f64 / 128.0;
            (k, rng.random_range(0.1..1.0), [rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)])
        })
        .collect();
    std::array::from_fn(|c| g.xs().iter().map(|x| modes.iter().map(|(k, a, ph)| a * (k * x + ph[c]).cos()).sum()).collect())
}

pub fn filters(cfg: &Config, dir: &Path) -> Result<(FiltersSummary, Vec<PathBuf>)> {
    let p = &cfg.params;
    let s = ModeFilterSpec::new(p.clone());
    let g = Grid1D::with_points(0.0, 256.0 * PI, 4096, Frame::Lab, true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut partition, mut quad): (f64, f64) = (0.0, 0.0);
    for _ in 0..cfg.filters.fields {
        let a = random_field(&mut rng, &g);
        let b = random_field(&mut rng, &g);
        let c = s.project(&g, [&a[0], &a[1]], FilterKind::C)?;
        let st = s.project(&g, [&a[0], &a[1]], FilterKind::S)?;
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..2 {
            for i in 0..g.n {
                partition = partition.max((c[k][i] + st[k][i] - a[k][i]).abs() / scale);
            }
        }
        quad = quad.max(s.quadratic_vanishing_check(&g, [&a[0], &a[1]], [&b[0], &b[1]])?);
    }
    let rc = [p.beta, p.d + 2.0 * p.alpha];
    let crit: [Vec<f64>; 2] = std::array::from_fn(|k| g.xs().iter().map(|x| 2.0 * rc[k] * x.cos()).collect());
    let mut wide = s.clone();
    wide.chi_c = Cutoff::new(0.5, 0.75, 2.25, 2.5);
    let control = wide.quadratic_vanishing_check(&g, [&crit[0], &crit[1]], [&crit[0], &crit[1]])?;

    let fs = &cfg.filters;
    let xi = xi_grid(fs.xi_min, fs.xi_max, fs.points);
    let csv = dir.join("filters.csv");
    write_csv(
        &csv,
        &["xi", "lambda_c", "lambda_s", "chi_c", "chi_c_h", "chi_s_h"],
        xi.iter().map(|&x| {
            let (lc, ls) = eigendata(p, x).map(|e| (e.lambda_c, e.lambda_s)).unwrap_or((f64::NAN, f64::NAN));
            vec![x, lc, ls, CHI_C.eval(x), CHI_C_H.eval(x), CHI_S_H.eval(x)]
        }),
    )?;
    let summary = FiltersSummary {
        mu: p.mu,
        fields: fs.fields,
        partition_error: partition,
        quadratic_residual: quad,
        corrupted_cutoff_residual: control,
    };
    let json = dir.join("filters.json");
    write_json(&json, &summary)?;
    Ok((summary, vec![csv, json]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlDeriveSummary {
    pub data: frontlab::GLData,
    pub closed_form_cubic: f64,
    pub relative_gap: f64,
    pub gamma_gl: f64,
}

pub fn gl_derive(cfg: &Config, dir: &Path) -> Result<(GlDeriveSummary, Vec<PathBuf>)> {
    let p = &cfg.params;
    let data = derive_ansatz_vectors(p)?;
    let closed = gl_cubic_coefficient(p, p.gamma);
    let summary = GlDeriveSummary {
        relative_gap: (data.cubic - closed).abs() / closed.abs(),
        closed_form_cubic: closed,
        gamma_gl: gamma_gl(p)?,
        data,
    };
    let json = dir.join("gl_derive.json");
    write_json(&json, &summary)?;
    Ok((summary, vec![json]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlSimulateSummary {
    pub b: f64,
    pub a0_sup: f64,
    pub c_gl: f64,
    /// Smallest `C_GL + e^{−T/2}‖A₀‖∞ − ‖A(T)‖∞` over `T ∈ [1, t_end]`.
    pub min_slack: f64,
    pub bound_holds: bool,
    pub final_sup: f64,
}

pub fn gl_simulate(cfg: &Config, dir: &Path) -> Result<(GlSimulateSummary, Vec<PathBuf>)> {
    let b = match cfg.gl.b {
        Cubic::Value(b) => b,
        Cubic::Derived => derive_ansatz_vectors(&cfg.params)?.cubic,
    };
    let g = default_gl_grid();
    let stepper = GlStepper::new(&g, b, cfg.gl.dt)?;
    let amp = cfg.gl.a0_sup;
    let mut f = GlField::from_fn(g, |x| Complex64::from_polar(amp * (0.6 + 0.4 * (x / 20.0).cos()), x / 10.0));
    let a0 = f.sup_norm();
    let c_gl = 1.05 / (-b).sqrt();
    let mut rows = vec![vec![0.0, a0, c_gl + a0]];
    let mut min_slack = f64::INFINITY;
    let every = ((0.1 / cfg.gl.dt).round() as usize).max(1);
    let mut k = 0;
    stepper.run(&mut f, cfg.gl.t_end, |f| {
        k += 1;
        let bound = c_gl + (-f.t / 2.0).exp() * a0;
        if f.t >= 1.0 - 1e-9 {
            min_slack = min_slack.min(bound - f.sup_norm());
        }
        if k % every == 0 {
            rows.push(vec![f.t, f.sup_norm(), bound]);
        }
    })?;
    let csv = dir.join("gl_simulate.csv");
    write_csv(&csv, &["t", "sup_a", "bound"], rows)?;
    let summary = GlSimulateSummary { b, a0_sup: a0, c_gl, min_slack, bound_holds: min_slack >= 0.0, final_sup: f.sup_norm() };
    let json = dir.join("gl_simulate.json");
    write_json(&json, &summary)?;
    Ok((summary, vec![csv, json]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlApproxSummary {
    pub params: Params,
    pub reports: Vec<ApproxReport>,
    /// Residual ratios between consecutive ε levels with the accepted bound `(ε_j/ε_i)^{3/2}·1.3`.
    pub ratios: Vec<(f64, f64)>,
    pub orders: Vec<f64>,
    pub order_ok: bool,
}

pub fn gl_approx(cfg: &Config, dir: &Path) -> Result<(GlApproxSummary, Vec<PathBuf>)> {
    let p = cfg.gl.approx_params.clone();
    let a0 = |x: f64| Complex64::new(0.5 + 0.25 * (x / 8.0).cos(), 0.2 * (x / 4.0).sin());
    let reports = cfg
        .gl
        .approx_eps
        .iter()
        .map(|&e| approximation_experiment(&p, e, a0, cfg.gl.approx_t, cfg.gl.approx_dt))
        .collect::<frontlab::Result<Vec<_>>>()?;
    let mut ratios = vec![];
    let mut orders = vec![];
    for w in reports.windows(2) {
        let ratio = w[1].residual / w[0].residual;
        ratios.push((ratio, (w[1].eps / w[0].eps).powf(1.5) * 1.3));
        orders.push(ratio.ln() / (w[1].eps / w[0].eps).ln());
    }
    let order_ok = ratios.iter().all(|(r, bound)| r <= bound);
    let csv = dir.join("gl_approx.csv");
    write_csv(&csv, &["eps", "t_slow", "residual", "sup_a"], reports.iter().map(|r| vec![r.eps, r.t_slow, r.residual, r.sup_a]))?;
    let summary = GlApproxSummary { params: p, reports, ratios, orders, order_ok };
    let json = dir.join("gl_approx.json");
    write_json(&json, &summary)?;
    Ok((summary, vec![csv, json]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvansSummary {
    pub eta: f64,
    pub winding: i64,
    pub per_edge: usize,
    pub min_abs: f64,
    pub far_right_min_abs: f64,
    pub control_winding: Option<i64>,
    /// Worst Wronskian-identity deviation on `[0, wronskian_x]` for the KPP and SH operators.
    pub wronskian_kpp: f64,
    pub wronskian_sh: f64,
}

pub fn evans(cfg: &Config, dir: &Path) -> Result<(EvansSummary, Vec<PathBuf>)> {
    let p = &cfg.params;
    let e = &cfg.evans;
    let front = solve_front_default(p)?;
    let choice = select_theta(p)?;
    let w = WeightSpec::new(WeightKind::OmegaStar, p, choice.theta);
    let opr = EigenOperator::new(EigenOp::Kpp, p.clone(), Background::Front(&front)).weighted(w);
    let contour = keyhole_contour(choice.eta, e.re_max, e.im_max, e.margin);
    let rep = evans_winding(&opr, &contour, e.per_edge, e.x_far, choice.eta)?;
    let control_winding = if e.control {
        let bad = EigenOperator { corrupt_core: true, ..opr.clone() };
        Some(evans_winding(&bad, &contour, e.per_edge, e.x_far, choice.eta)?.winding)
    } else {
        None
    };
    let mut wr = [0.0f64; 2];
    for (k, op) in [EigenOp::Kpp, EigenOp::Sh].into_iter().enumerate() {
        let o = EigenOperator::new(op, p.clone(), Background::Front(&front));
        for l in [Complex64::new(0.5, 0.0), Complex64::new(2.0, 1.0), Complex64::new(-choice.eta, 5.0)] {
            wr[k] = wr[k].max(wronskian_identity_check(&o, l, e.wronskian_x)?.max_rel_deviation);
        }
    }
    let csv = dir.join("evans.csv");
    write_csv(
        &csv,
        &["lambda_re", "lambda_im", "evans_re", "evans_im"],
        rep.samples.iter().map(|s| vec![s.lambda.re, s.lambda.im, s.value.re, s.value.im]),
    )?;
    let summary = EvansSummary {
        eta: choice.eta,
        winding: rep.winding,
        per_edge: rep.per_edge,
        min_abs: rep.min_abs,
        far_right_min_abs: rep.far_right_min_abs,
        control_winding,
        wronskian_kpp: wr[0],
        wronskian_sh: wr[1],
    };
    let json = dir.join("evans.json");
    write_json(&json, &summary)?;
    Ok((summary, vec![csv, json]))
}
