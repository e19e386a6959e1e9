use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::{Deserialize, Serialize};

use crate::io::{read_json, write_json};
use crate::stages::{
    EvansSummary, FiltersSummary, FrontSummary, GateSummary, GlApproxSummary, GlSimulateSummary, ScanSummary,
    SpectrumSummary,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// The stage producing the metric has not been run in this directory.
    Missing,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Criterion {
    pub id: usize,
    pub name: String,
    pub status: Status,
    pub metrics: Vec<(String, f64)>,
    pub source: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub directory: String,
    pub criteria: Vec<Criterion>,
}

fn load<T: for<'de> Deserialize<'de>>(dir: &Path, file: &str) -> Option<T> {
    read_json(&dir.join(file)).ok()
}

struct Builder {
    out: Vec<Criterion>,
}

impl Builder {
    fn push<T>(&mut self, name: &str, source: &str, data: Option<T>, eval: impl FnOnce(&T) -> (bool, Vec<(String, f64)>)) {
        let id = self.out.len() + 1;
        let (status, metrics) = match &data {
            Some(d) => {
                let (ok, m) = eval(d);
                (if ok { Status::Pass } else { Status::Fail }, m)
            }
            None => (Status::Missing, vec![]),
        };
        self.out.push(Criterion { id, name: name.into(), status, metrics, source: source.into() });
    }
}

fn m(name: &str, v: f64) -> (String, f64) {
    (name.to_string(), v)
}

fn b(x: bool) -> f64 {
    if x {
        1.0
    } else {
        0.0
    }
}

pub fn build(dir: &Path) -> Report {
    let mut r = Builder { out: vec![] };
    let gate: Option<GateSummary> = load(dir, "gate.json");
    r.push("GL coefficient cross-validation", "gate.json", gate.clone(), |g| {
        (
            g.cross_validation_max_gap <= 1e-10,
            vec![m("max_relative_gap", g.cross_validation_max_gap), m("draws", g.cross_validation_draws as f64)],
        )
    });
    r.push("hypothesis gate", "gate.json", gate, |g| {
        let mut v = vec![m("gamma_rem", g.report.gamma_rem), m("gamma_gl", g.report.gamma_gl)];
        v.extend(g.beta_sweep.iter().map(|(beta, gl)| (format!("gamma_gl(beta={beta})"), *gl)));
        (g.report.admissible && g.beta_sweep_increasing, v)
    });
    r.push("spectral margins", "spectrum.json", load::<SpectrumSummary>(dir, "spectrum.json"), |s| {
        let mut v = vec![m("theta", s.theta), m("eta", s.eta)];
        v.extend(s.margins.iter().map(|x| (format!("max_re {} mu={}", x.tag.label(), x.mu), x.max_re)));
        (s.margins_hold && s.kpp_plus_touches_only_at_zero, v)
    });
    r.push("front correctness", "front.json", load::<FrontSummary>(dir, "front.json"), |f| {
        (
            f.residual <= 1e-8 && f.left_tail_rate_error <= 0.01 && f.fit.r_squared >= 0.999,
            vec![m("residual", f.residual), m("left_tail_rate_error", f.left_tail_rate_error), m("fit_r_squared", f.fit.r_squared)],
        )
    });
    let scan: Option<ScanSummary> = load(dir, "scan.json");
    r.push("decay behind the front", "scan.json", scan.clone(), |s| {
        let Some(run) = s.runs.first() else { return (false, vec![]) };
        let mut v = vec![m("mu", run.mu), m("eta", run.eta)];
        let slope = run.decay.as_ref().map(|d| d.slope);
        let rate = run.u2_rate.map(|x| x.0);
        if let Some(d) = &run.decay {
            v.extend([m("slope", d.slope), m("r_squared", d.r_squared)]);
        }
        if let Some(w) = &run.window_sensitivity {
            v.extend([m("slope_10_100", w.early.slope), m("slope_20_200", w.late.slope)]);
        }
        if let Some(x) = rate {
            v.push(m("u2_rate", x));
        }
        let ok = slope.is_some_and(|s| (-1.8..=-1.2).contains(&s)) && rate.is_some_and(|x| x >= 0.5 * run.eta);
        (ok, v)
    });
    r.push("Turing boundedness and scaling", "scan.json", scan, |s| {
        let mut ok = s.runs.len() >= 2 && !s.ratios.is_empty();
        let mut v = vec![];
        for run in &s.runs {
            let trend = run.v_trend_per_hundred.unwrap_or(f64::INFINITY);
            let xi = run.wavenumber.as_ref().map_or(f64::NAN, |w| w.xi);
            ok &= trend <= 0.02 && (xi - 1.0).abs() <= 0.05;
            v.extend([(format!("trend_per_100 mu={}", run.mu), trend), (format!("xi mu={}", run.mu), xi)]);
            if let (Some(a), Some(p)) = (&run.amplitude, run.gl_amplitude_prediction) {
                v.extend([(format!("amplitude mu={}", run.mu), a.amplitude), (format!("gl_prediction mu={}", run.mu), p)]);
            }
        }
        for q in &s.ratios {
            ok &= (q.measured / q.predicted - 1.0).abs() <= 0.2;
            v.push((format!("ratio mu={}/{} (predicted {:.6})", q.mu_i, q.mu_j, q.predicted), q.measured));
        }
        (ok, v)
    });
    r.push("mode-filter algebra", "filters.json", load::<FiltersSummary>(dir, "filters.json"), |f| {
        (
            f.partition_error <= 1e-13 && f.quadratic_residual <= 1e-12 && f.corrupted_cutoff_residual > 0.1,
            vec![
                m("partition_error", f.partition_error),
                m("quadratic_residual", f.quadratic_residual),
                m("corrupted_cutoff_residual", f.corrupted_cutoff_residual),
            ],
        )
    });
    r.push("GL approximation order", "gl_approx.json", load::<GlApproxSummary>(dir, "gl_approx.json"), |g| {
        let mut v: Vec<(String, f64)> = g.reports.iter().map(|x| (format!("residual eps={}", x.eps), x.residual)).collect();
        v.extend(g.ratios.iter().map(|(r, bound)| (format!("ratio (bound {bound:.4})"), *r)));
        v.extend(g.orders.iter().map(|o| m("order", *o)));
        (g.order_ok, v)
    });
    r.push("GL attractor", "gl_simulate.json", load::<GlSimulateSummary>(dir, "gl_simulate.json"), |g| {
        (g.bound_holds, vec![m("b", g.b), m("c_gl", g.c_gl), m("a0_sup", g.a0_sup), m("min_slack", g.min_slack)])
    });
    r.push("Evans winding and Wronskian", "evans.json", load::<EvansSummary>(dir, "evans.json"), |e| {
        let control = e.control_winding.unwrap_or(0);
        (
            e.winding == 0 && control >= 1 && e.wronskian_kpp <= 1e-6 && e.wronskian_sh <= 1e-6,
            vec![
                m("winding", e.winding as f64),
                m("control_winding", control as f64),
                m("control_run", b(e.control_winding.is_some())),
                m("wronskian_kpp", e.wronskian_kpp),
                m("wronskian_sh", e.wronskian_sh),
            ],
        )
    });
    Report { directory: dir.display().to_string(), criteria: r.out }
}

pub fn markdown(rep: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# frontlab report\n\nRun directory: `{}`\n", rep.directory);
    let _ = writeln!(s, "| # | criterion | status | source |\n|---|---|---|---|");
    for c in &rep.criteria {
        let st = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Missing => "missing",
        };
        let _ = writeln!(s, "| {} | {} | {} | `{}` |", c.id, c.name, st, c.source);
    }
    for c in &rep.criteria {
        let _ = writeln!(s, "\n## {}. {}\n", c.id, c.name);
        if c.metrics.is_empty() {
            let _ = writeln!(s, "No metrics recorded.");
            continue;
        }
        let _ = writeln!(s, "| metric | value |\n|---|---|");
        for (k, v) in &c.metrics {
            let _ = writeln!(s, "| {k} | {v:.6e} |");
        }
    }
    s
}

pub fn write(dir: &Path) -> Result<(Report, Vec<PathBuf>)> {
    let rep = build(dir);
    let json = dir.join("report.json");
    write_json(&json, &rep)?;
    let md = dir.join("report.md");
    std::fs::write(&md, markdown(&rep))?;
    Ok((rep, vec![json, md]))
}
