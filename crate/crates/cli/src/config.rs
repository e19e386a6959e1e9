use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use frontlab::grid::{Frame, Grid1D};
use frontlab::sim::{BackgroundSpec, InitialCondition, SimConfig, SimFrame, Sponge};
use frontlab::Params;

/// Whole-pipeline configuration. Every field has the shipped default, so an empty file is valid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Seed for every random draw (cross-validation parameters, filter test fields, noise).
    pub seed: u64,
    pub params: Params,
    pub spectrum: SpectrumSection,
    pub front: FrontSection,
    pub sim: SimSection,
    pub scan: ScanSection,
    pub filters: FiltersSection,
    pub gl: GlSection,
    pub evans: EvansSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            params: Params::sim_preset(),
            spectrum: SpectrumSection::default(),
            front: FrontSection::default(),
            sim: SimSection::default(),
            scan: ScanSection::default(),
            filters: FiltersSection::default(),
            gl: GlSection::default(),
            evans: EvansSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub xi_min: f64,
    pub xi_max: f64,
    pub points: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection { xi_min: -10.0, xi_max: 10.0, points: 4001 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontSection {
    /// Right-tail window of the weighted-derivative fit.
    pub fit_window: (f64, f64),
}

impl Default for FrontSection {
    fn default() -> Self {
        FrontSection { fit_window: (10.0, 30.0) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record: f64,
    pub snapshot_every: f64,
    pub frame: SimFrame,
    pub sponge: Sponge,
    pub ic: InitialCondition,
    pub theta: Option<f64>,
    pub budget_secs: Option<f64>,
    /// Leftmost abscissa used by pattern diagnostics; keeps them off the sponge.
    pub diagnostics_left: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        let base = SimConfig::preset(Params::sim_preset());
        SimSection {
            x_min: -1000.0,
            x_max: 200.0,
            dx: base.grid.dx,
            dt: base.dt,
            t_end: base.t_end,
            record: base.record,
            snapshot_every: base.snapshot_every,
            frame: base.frame,
            sponge: base.sponge,
            ic: base.ic,
            theta: None,
            budget_secs: None,
            diagnostics_left: -960.0,
        }
    }
}

impl SimSection {
    pub fn to_sim_config(&self, params: &Params) -> Result<SimConfig> {
        let grid = Grid1D::with_spacing(self.x_min, self.x_max, self.dx, Frame::Comoving, false)?;
        Ok(SimConfig {
            params: params.clone(),
            grid,
            dt: self.dt,
            t_end: self.t_end,
            sponge: self.sponge,
            ic: self.ic.clone(),
            record: self.record,
            snapshot_every: self.snapshot_every,
            frame: self.frame,
            background: BackgroundSpec::Front,
            theta: self.theta,
            budget_secs: self.budget_secs,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub mu: Vec<f64>,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection { mu: vec![0.1, 0.05] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiltersSection {
    /// Random band-limited fields per check.
    pub fields: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub points: usize,
}

impl Default for FiltersSection {
    fn default() -> Self {
        FiltersSection { fields: 5, xi_min: -3.0, xi_max: 3.0, points: 1201 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlSection {
    /// Cubic coefficient for `gl simulate`.
    pub b: Cubic,
    /// `‖A₀‖∞` of the attractor run.
    pub a0_sup: f64,
    pub t_end: f64,
    pub dt: f64,
    pub approx_eps: Vec<f64>,
    pub approx_t: f64,
    pub approx_dt: f64,
    /// Parameters of the approximation experiment.
    pub approx_params: Params,
}

/// TOML has no null, so "derive from `params`" is an explicit variant: `b = "derived"` or `b = { value = -1.0 }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cubic {
    Derived,
    Value(f64),
}

impl Default for GlSection {
    fn default() -> Self {
        GlSection {
            b: Cubic::Value(-1.0),
            a0_sup: 10.0,
            t_end: 20.0,
            dt: 0.01,
            approx_eps: vec![0.2, 0.1],
            approx_t: 5.0,
            approx_dt: 0.02,
            approx_params: Params { d: 1.0, alpha: 1.0, beta: 0.5, gamma: 1.0, sigma: 0.1, mu: 0.0, mu0: 0.5 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvansSection {
    pub re_max: f64,
    pub im_max: f64,
    pub margin: f64,
    pub per_edge: usize,
    pub x_far: f64,
    /// Also run the corrupted-potential control.
    pub control: bool,
    pub wronskian_x: f64,
}

impl Default for EvansSection {
    fn default() -> Self {
        EvansSection {
            re_max: 10.0,
            im_max: 20.0,
            margin: 0.05,
            per_edge: 16,
            x_far: frontlab::eigen::X_FAR,
            control: true,
            wronskian_x: 5.0,
        }
    }
}

impl Config {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Config = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.spectrum.points < 2 || self.spectrum.xi_min >= self.spectrum.xi_max {
            bail!("spectrum needs xi_min < xi_max and at least two points");
        }
        if self.scan.mu.is_empty() {
            bail!("scan.mu is empty");
        }
        if self.gl.approx_eps.len() < 2 {
            bail!("gl.approx_eps needs two levels");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_the_preset() {
        let cfg: Config = toml::from_str("").unwrap();
        assert_eq!(cfg, Config::default());
    }

    #[test]
    fn toml_and_json_mirror_round_trip() {
        let mut cfg = Config::default();
        cfg.sim.ic = InitialCondition::Noise { center: -10.0, width: 3.0, amplitude: 1e-4, seed: 9 };
        cfg.gl.b = Cubic::Derived;
        cfg.sim.theta = Some(0.2);
        let t: Config = toml::from_str(&cfg.to_toml().unwrap()).unwrap();
        let j: Config = serde_json::from_str(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(t, cfg);
        assert_eq!(j, cfg);
    }

    #[test]
    fn cubic_choice_spellings() {
        let d: Config = toml::from_str("[gl]\nb = \"derived\"\n").unwrap();
        assert_eq!(d.gl.b, Cubic::Derived);
        let v: Config = toml::from_str("[gl]\nb = { value = -2.5 }\n").unwrap();
        assert_eq!(v.gl.b, Cubic::Value(-2.5));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Config>("[sim]\ndtt = 0.1\n").is_err());
    }

    #[test]
    fn sim_section_builds_a_valid_config() {
        let cfg = Config::default();
        let sim = cfg.sim.to_sim_config(&cfg.params).unwrap();
        sim.validate().unwrap();
        assert_eq!(sim.grid.x_min, -1000.0);
    }
}
