//! Decay fits, pattern amplitude and wavenumber measurements on simulation output.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::front::linear_fit;
use crate::grid::Grid1D;
use crate::params::{gl_cubic_coefficient, SystemParams};
use crate::sim::{SeriesKey, Snapshot, TimeSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayClass {
    Algebraic,
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    /// Slope of `ln y` against `ln t`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Rate `−d ln y/dt` of the semilog fit.
    pub exp_rate: f64,
    pub semilog_r_squared: f64,
    pub class: DecayClass,
    pub points: usize,
}

/// Least squares of `ln y` on `ln t` (and on `t`) over `window`, which must span a decade.
pub fn fit_decay(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo > 0.0) || hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::Domain(format!("decay window [{lo}, {hi}] must be positive and span a decade")));
    }
    let pts: Vec<(f64, f64)> = t.iter().zip(y).filter(|(t, _)| **t >= lo && **t <= hi).map(|(t, y)| (*t, *y)).collect();
    if pts.len() < 3 {
        return Err(Error::Domain(format!("only {} samples in the decay window", pts.len())));
    }
    if let Some((t, y)) = pts.iter().find(|(_, y)| !(*y > 0.0)) {
        return Err(Error::Domain(format!("nonpositive value {y} at t = {t}")));
    }
    let log: Vec<(f64, f64)> = pts.iter().map(|(t, y)| (t.ln(), y.ln())).collect();
    let semi: Vec<(f64, f64)> = pts.iter().map(|(t, y)| (*t, y.ln())).collect();
    let (slope, intercept, r_squared) = linear_fit(&log);
    let (rate, _, semilog_r_squared) = linear_fit(&semi);
    let class = if semilog_r_squared > r_squared { DecayClass::Exponential } else { DecayClass::Algebraic };
    Ok(DecayFit {
        window,
        slope,
        intercept,
        r_squared,
        exp_rate: -rate,
        semilog_r_squared,
        class,
        points: pts.len(),
    })
}

pub fn decay_fit(series: &TimeSeries, key: SeriesKey, window: (f64, f64)) -> Result<DecayFit> {
    fit_decay(&series.t, series.get(key), window)
}

/// Rate `−d ln y/dt` of a semilog least-squares fit on `[lo, hi]`, with its `r²`.
pub fn exponential_rate(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> =
        t.iter().zip(y).filter(|(t, _)| **t >= window.0 && **t <= window.1).map(|(t, y)| (*t, *y)).collect();
    if pts.len() < 3 || pts.iter().any(|(_, y)| !(*y > 0.0)) {
        return Err(Error::Domain("exponential fit needs three positive samples".into()));
    }
    let semi: Vec<(f64, f64)> = pts.iter().map(|(t, y)| (*t, y.ln())).collect();
    let (slope, _, r2) = linear_fit(&semi);
    Ok((-slope, r2))
}

/// Rightmost crossing of `u = 1/2`, linearly interpolated.
pub fn front_interface(grid: &Grid1D, u: &[f64]) -> Option<f64> {
    (0..u.len() - 1).rev().find(|&i| (u[i] - 0.5) * (u[i + 1] - 0.5) <= 0.0 && u[i] != u[i + 1]).map(|i| {
        let s = (u[i] - 0.5) / (u[i] - u[i + 1]);
        grid.x(i) + s * grid.dx
    })
}

/// Twenty wavelengths: the shortest admissible wavenumber window.
pub const PATTERN_WINDOW: f64 = 40.0 * PI;
/// Gap left between the interface and the measurement window.
pub const INTERFACE_GAP: f64 = 30.0;

/// `[interface − 30 − 40π, interface − 30]`.
pub fn behind_window(interface: f64) -> (f64, f64) {
    (interface - INTERFACE_GAP - PATTERN_WINDOW, interface - INTERFACE_GAP)
}

/// Window of length 40π behind the interface and right of `left_limit`, centred on the
/// saturated part of the pattern.
///
/// The pattern is static in the lab frame and lags behind the front, so a fixed offset from
/// the interface eventually sees only the unstable rest state. The window is placed over the
/// nodes where `|v|` exceeds half of its maximum; the fixed window is returned when that
/// region already contains it or when there is no pattern.
pub fn pattern_window(grid: &Grid1D, snap: &Snapshot, left_limit: f64) -> Result<(f64, f64)> {
    let iface = front_interface(grid, &snap.u).ok_or_else(|| Error::Domain("no front interface in snapshot".into()))?;
    let fixed = behind_window(iface);
    let hi_limit = iface - INTERFACE_GAP;
    let idx: Vec<usize> = (0..grid.n).filter(|&i| grid.x(i) >= left_limit && grid.x(i) <= hi_limit).collect();
    let vmax = idx.iter().map(|&i| snap.v[i].abs()).fold(0.0, f64::max);
    if vmax == 0.0 {
        return Ok(fixed);
    }
    let strong: Vec<f64> = idx.iter().filter(|&&i| snap.v[i].abs() >= 0.5 * vmax).map(|&i| grid.x(i)).collect();
    let (a, b) = (strong[0], *strong.last().expect("nonempty"));
    if a <= fixed.0 && b >= fixed.1 {
        return Ok(fixed);
    }
    let mid = 0.5 * (a + b);
    let lo = (mid - 0.5 * PATTERN_WINDOW).max(left_limit).min(hi_limit - PATTERN_WINDOW);
    Ok((lo, lo + PATTERN_WINDOW))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavenumberEstimate {
    pub xi: f64,
    /// Peak magnitude over the median magnitude of the spectrum.
    pub peak_ratio: f64,
    /// No dominant peak (`peak_ratio < 10`).
    pub flagged: bool,
    pub window: (f64, f64),
    /// Spacing of the (zero-padded) frequency grid.
    pub bin: f64,
}

/// Peak of the Hann-windowed spectrum of `v` on `window`, refined by a parabola through the
/// logarithms of the three largest bins.
pub fn pattern_wavenumber(grid: &Grid1D, v: &[f64], window: (f64, f64)) -> Result<WavenumberEstimate> {
    if window.1 - window.0 < PATTERN_WINDOW * (1.0 - 1e-9) {
        return Err(Error::Domain(format!("window shorter than 20 wavelengths: {window:?}")));
    }
    let idx: Vec<usize> = (0..grid.n).filter(|&i| grid.x(i) >= window.0 && grid.x(i) <= window.1).collect();
    let m = idx.len();
    if m < 16 {
        return Err(Error::Underresolved("too few samples in the wavenumber window".into()));
    }
    let mean = idx.iter().map(|&i| v[i]).sum::<f64>() / m as f64;
    let len = (4 * m).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (k, &i) in idx.iter().enumerate() {
        let hann = 0.5 - 0.5 * (2.0 * PI * k as f64 / (m - 1) as f64).cos();
        buf[k] = Complex64::new((v[i] - mean) * hann, 0.0);
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mag: Vec<f64> = buf[..len / 2].iter().map(|z| z.norm()).collect();
    let bin = 2.0 * PI / (len as f64 * grid.dx);
    let (k, peak) = mag.iter().enumerate().skip(1).fold((1, 0.0), |acc, (k, &a)| if a > acc.1 { (k, a) } else { acc });
    let mut sorted = mag[1..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let shift = if k + 1 < mag.len() && mag[k - 1] > 0.0 && mag[k + 1] > 0.0 {
        let (a, b, c) = (mag[k - 1].ln(), peak.ln(), mag[k + 1].ln());
        let den = a - 2.0 * b + c;
        if den != 0.0 {
            0.5 * (a - c) / den
        } else {
            0.0
        }
    } else {
        0.0
    };
    let peak_ratio = if median > 0.0 { peak / median } else { f64::INFINITY };
    Ok(WavenumberEstimate { xi: (k as f64 + shift) * bin, peak_ratio, flagged: peak_ratio < 10.0, window, bin })
}

/// Median of the local maxima of `|v|` on `window`.
pub fn envelope_median(grid: &Grid1D, v: &[f64], window: (f64, f64)) -> Result<f64> {
    let idx: Vec<usize> =
        (1..grid.n - 1).filter(|&i| grid.x(i) >= window.0 && grid.x(i) <= window.1).collect();
    let mut peaks: Vec<f64> = idx
        .iter()
        .filter(|&&i| v[i].abs() >= v[i - 1].abs() && v[i].abs() > v[i + 1].abs())
        .map(|&i| v[i].abs())
        .collect();
    if peaks.is_empty() {
        return Err(Error::Domain("no envelope peaks in the window".into()));
    }
    peaks.sort_by(f64::total_cmp);
    Ok(peaks[peaks.len() / 2])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternAmplitude {
    pub mu: f64,
    pub amplitude: f64,
    /// Relative change per unit time between the last two snapshots.
    pub growth: f64,
    /// Growth below 1% per unit time.
    pub saturated: bool,
    pub window: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRatio {
    pub mu_i: f64,
    pub mu_j: f64,
    pub measured: f64,
    /// `√(μ_i/μ_j)`.
    pub predicted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeScaling {
    pub amplitudes: Vec<PatternAmplitude>,
    pub ratios: Vec<AmplitudeRatio>,
}

/// Saturated amplitude of one run, from its last two snapshots.
pub fn saturated_amplitude(mu: f64, series: &TimeSeries, left_limit: f64) -> Result<PatternAmplitude> {
    let n = series.snapshots.len();
    if n < 2 {
        return Err(Error::Domain("amplitude needs two snapshots".into()));
    }
    let (a, b) = (&series.snapshots[n - 2], &series.snapshots[n - 1]);
    let w = pattern_window(&series.grid, b, left_limit)?;
    let amp_b = envelope_median(&series.grid, &b.v, w)?;
    let wa = pattern_window(&series.grid, a, left_limit)?;
    let amp_a = envelope_median(&series.grid, &a.v, wa)?;
    let growth = (amp_b - amp_a).abs() / (amp_a * (b.t - a.t));
    Ok(PatternAmplitude { mu, amplitude: amp_b, growth, saturated: growth <= 0.01, window: w })
}

/// Amplitudes of each run and all pairwise ratios against `√(μ_i/μ_j)`.
pub fn amplitude_scaling(runs: &[(f64, &TimeSeries)], left_limit: f64) -> Result<AmplitudeScaling> {
    if runs.len() < 2 {
        return Err(Error::Domain("amplitude scaling needs at least two runs".into()));
    }
    let amplitudes = runs
        .iter()
        .map(|(mu, ts)| saturated_amplitude(*mu, ts, left_limit))
        .collect::<Result<Vec<_>>>()?;
    let mut ratios = vec![];
    for i in 0..amplitudes.len() {
        for j in i + 1..amplitudes.len() {
            let (a, b) = (&amplitudes[i], &amplitudes[j]);
            ratios.push(AmplitudeRatio {
                mu_i: a.mu,
                mu_j: b.mu,
                measured: a.amplitude / b.amplitude,
                predicted: (a.mu / b.mu).sqrt(),
            });
        }
    }
    Ok(AmplitudeScaling { amplitudes, ratios })
}

/// Largest relative change of `series` per 100 time units over `[t0, t1]`, from a linear fit.
pub fn trend_per_hundred(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<f64> {
    let pts: Vec<(f64, f64)> =
        t.iter().zip(y).filter(|(t, _)| **t >= window.0 && **t <= window.1).map(|(t, y)| (*t, *y)).collect();
    if pts.len() < 3 {
        return Err(Error::Domain("trend needs three samples".into()));
    }
    let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let (slope, _, _) = linear_fit(&pts);
    Ok((slope * 100.0 / mean).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSensitivity {
    pub early: DecayFit,
    pub late: DecayFit,
    /// Slopes on `[10, 100]` and `[20, 200]` within 0.1 of each other.
    pub converged: bool,
}

pub fn window_sensitivity(series: &TimeSeries, key: SeriesKey) -> Result<WindowSensitivity> {
    let early = decay_fit(series, key, (10.0, 100.0))?;
    let late = decay_fit(series, key, (20.0, 200.0))?;
    let converged = (early.slope - late.slope).abs() <= 0.1;
    Ok(WindowSensitivity { early, late, converged })
}

/// Envelope of `v` predicted by the stationary amplitude equation: `A = 1/√(−b)` carried by the
/// critical mode `2√μ·Re(A e^{ix})(β, d + 2α)`.
pub fn gl_amplitude_prediction(p: &SystemParams<f64>) -> Result<f64> {
    let b = gl_cubic_coefficient(p, p.gamma);
    if !(b < 0.0) || !(p.mu > 0.0) {
        return Err(Error::Domain(format!("no stationary amplitude for b = {b}, mu = {}", p.mu)));
    }
    Ok(2.0 * p.mu.sqrt() * (p.d + 2.0 * p.alpha) / (-b).sqrt())
}
