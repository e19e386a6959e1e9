//! Command-line driver: runs the gate, spectral, front, simulation, filter, amplitude-equation and
//! Evans stages into a run directory with a hashed manifest.

mod config;
mod io;
mod report;
mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};

use config::Config;
use io::{unix_now, RunManifest, StageRecord};

#[derive(Parser, Debug)]
#[command(name = "frontlab", version, about = "Pulled KPP fronts coupled to Swift-Hohenberg patterns")]
struct Cli {
    /// TOML configuration (`.json` for the JSON mirror); the shipped preset when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory for outputs and the manifest.
    #[arg(long, global = true, default_value = "runs/default")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the parameter hypotheses; exits nonzero when they fail.
    Gate,
    /// Weight selection and sampled essential-spectrum borders.
    Spectrum,
    /// Critical front profile and its tail checks.
    Front,
    /// One gated simulation.
    Simulate {
        /// Overrides `params.mu`.
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Mode-filter algebra checks and eigendata table.
    Filters,
    /// Amplitude-equation stages.
    Gl {
        #[command(subcommand)]
        action: GlAction,
    },
    /// Evans winding number, control and Wronskian identity.
    Evans,
    /// Simulations over `scan.mu` on a worker pool sized by FRONTLAB_WORKERS.
    Scan,
    /// Markdown and JSON summary of the acceptance metrics found in the run directory.
    Report,
    /// Runs the listed stages in order, then the report.
    Pipeline {
        #[arg(long, value_delimiter = ',', default_values_t = Stage::ALL)]
        stages: Vec<Stage>,
    },
    /// Re-hashes the manifest outputs and re-reads every CSV and snapshot file.
    Verify,
    /// Prints the effective configuration.
    Config {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum GlAction {
    /// Ansatz vectors and coefficients.
    Derive,
    /// Attractor run of the amplitude equation.
    Simulate,
    /// Residual of the amplitude approximation at two ε levels.
    Approx,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Gate,
    Spectrum,
    Front,
    Filters,
    GlDerive,
    GlSimulate,
    GlApprox,
    Evans,
    Scan,
}

impl Stage {
    const ALL: [Stage; 9] = [
        Stage::Gate,
        Stage::Spectrum,
        Stage::Front,
        Stage::Filters,
        Stage::GlDerive,
        Stage::GlSimulate,
        Stage::GlApprox,
        Stage::Evans,
        Stage::Scan,
    ];

    fn needs_gate(self) -> bool {
        matches!(self, Stage::Scan)
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

struct Run {
    cfg: Config,
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn open(cfg: Config, dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let json = cfg.to_json()?;
        std::fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
        std::fs::write(dir.join("config.json"), format!("{json}\n"))?;
        let mut seeds = vec![cfg.seed];
        if let frontlab::sim::InitialCondition::Noise { seed, .. } = cfg.sim.ic {
            seeds.push(seed);
        }
        let manifest = RunManifest::open_or_new(dir, &cfg.params, &json, seeds);
        Ok(Run { cfg, dir: dir.to_path_buf(), manifest })
    }

    /// Runs `f`, records the stage and its outputs, and rewrites the manifest.
    fn stage(&mut self, name: &str, f: impl FnOnce(&Config, &Path) -> Result<(String, Vec<PathBuf>)>) -> Result<()> {
        let started = unix_now();
        let out = f(&self.cfg, &self.dir);
        let (ok, message, files) = match &out {
            Ok((msg, files)) => (true, msg.clone(), files.clone()),
            Err(e) => (false, format!("{e:#}"), vec![]),
        };
        let mut files = files;
        let summary = self.dir.join(format!("{name}.json"));
        if !ok && summary.exists() {
            files.push(summary);
        }
        files.extend([self.dir.join("config.toml"), self.dir.join("config.json")]);
        self.manifest.stages.push(StageRecord {
            stage: name.into(),
            started_unix: started,
            finished_unix: unix_now(),
            ok,
            message: Some(message.clone()),
        });
        self.manifest.record_outputs(&self.dir, &files)?;
        self.manifest.save(&self.dir)?;
        if ok {
            println!("{name}: {message}");
            Ok(())
        } else {
            bail!("{name} failed: {message}")
        }
    }
}

fn run_gate(cfg: &Config, dir: &Path) -> Result<(String, Vec<PathBuf>)> {
    let (s, files) = stages::gate(cfg, dir)?;
    let r = &s.report;
    if !r.admissible {
        bail!(
            "hypotheses fail: gamma = {} is outside (gamma_rem, gamma_GL) = ({}, {}); dependent stages halted (details in gate.json)",
            cfg.params.gamma,
            r.gamma_rem,
            r.gamma_gl
        );
    }
    Ok((format!("admissible, gamma in ({:.6}, {:.6})", r.gamma_rem, r.gamma_gl), files))
}

fn run_stage(run: &mut Run, stage: Stage) -> Result<()> {
    let name = stage.to_string();
    match stage {
        Stage::Gate => run.stage(&name, run_gate),
        Stage::Spectrum => run.stage(&name, |c, d| {
            let (s, f) = stages::spectrum(c, d)?;
            Ok((format!("theta {:.6}, eta {:.6}, margins hold: {}", s.theta, s.eta, s.margins_hold), f))
        }),
        Stage::Front => run.stage(&name, |c, d| {
            let (s, f) = stages::front(c, d)?;
            Ok((format!("residual {:.3e}, fit R^2 {:.6}", s.residual, s.fit.r_squared), f))
        }),
        Stage::Filters => run.stage(&name, |c, d| {
            let (s, f) = stages::filters(c, d)?;
            Ok((format!("partition {:.3e}, quadratic {:.3e}", s.partition_error, s.quadratic_residual), f))
        }),
        Stage::GlDerive => run.stage(&name, |c, d| {
            let (s, f) = stages::gl_derive(c, d)?;
            Ok((format!("cubic {:.10e} (closed form gap {:.2e})", s.data.cubic, s.relative_gap), f))
        }),
        Stage::GlSimulate => run.stage(&name, |c, d| {
            let (s, f) = stages::gl_simulate(c, d)?;
            Ok((format!("b {}, bound holds: {} (slack {:.3e})", s.b, s.bound_holds, s.min_slack), f))
        }),
        Stage::GlApprox => run.stage(&name, |c, d| {
            let (s, f) = stages::gl_approx(c, d)?;
            Ok((format!("orders {:?}, within bound: {}", s.orders, s.order_ok), f))
        }),
        Stage::Evans => run.stage(&name, |c, d| {
            let (s, f) = stages::evans(c, d)?;
            Ok((format!("winding {}, control {:?}", s.winding, s.control_winding), f))
        }),
        Stage::Scan => run.stage(&name, |c, d| {
            let (s, f) = stages::scan(c, d)?;
            Ok((format!("{} runs on {} workers", s.runs.len(), s.workers), f))
        }),
    }
}

fn run_report(run: &mut Run) -> Result<()> {
    run.stage("report", |_, d| {
        let (r, f) = report::write(d)?;
        let pass = r.criteria.iter().filter(|c| c.status == report::Status::Pass).count();
        Ok((format!("{pass}/{} criteria pass", r.criteria.len()), f))
    })
}

fn verify(dir: &Path) -> Result<()> {
    let m: RunManifest = io::read_json(&dir.join(io::MANIFEST))?;
    let bad = m.verify(dir)?;
    if !bad.is_empty() {
        bail!("hash mismatch: {}", bad.join(", "));
    }
    for rel in m.outputs.keys() {
        let path = dir.join(rel);
        if rel.ends_with(".csv") {
            io::read_csv(&path)?;
        } else if rel.ends_with(".bin") {
            io::read_snapshots(&path)?;
        }
    }
    println!("verify: {} outputs match the manifest", m.outputs.len());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = Config::load_or_default(cli.config.as_deref())?;
    if let Command::Config { json } = cli.command {
        print!("{}", if json { cfg.to_json()? + "\n" } else { cfg.to_toml()? });
        return Ok(());
    }
    if let Command::Verify = cli.command {
        return verify(&cli.out);
    }
    if let Command::Simulate { mu: Some(mu) } = cli.command {
        cfg.params.mu = mu;
    }
    let mut run = Run::open(cfg, &cli.out)?;
    match cli.command {
        Command::Gate => run_stage(&mut run, Stage::Gate),
        Command::Spectrum => run_stage(&mut run, Stage::Spectrum),
        Command::Front => run_stage(&mut run, Stage::Front),
        Command::Filters => run_stage(&mut run, Stage::Filters),
        Command::Gl { action: GlAction::Derive } => run_stage(&mut run, Stage::GlDerive),
        Command::Gl { action: GlAction::Simulate } => run_stage(&mut run, Stage::GlSimulate),
        Command::Gl { action: GlAction::Approx } => run_stage(&mut run, Stage::GlApprox),
        Command::Evans => run_stage(&mut run, Stage::Evans),
        Command::Scan => run_stage(&mut run, Stage::Scan),
        Command::Report => run_report(&mut run),
        Command::Simulate { .. } => run.stage("simulate", |c, d| {
            let (s, _, f) = stages::simulate(c, &c.params, d)?;
            let slope = s.decay.as_ref().map(|d| d.slope);
            Ok((format!("mu {}, {} steps, decay slope {slope:?}", s.mu, s.steps), f))
        }),
        Command::Pipeline { stages } => {
            let mut failures = vec![];
            let mut gate_ok = true;
            for st in stages {
                if st.needs_gate() && !gate_ok {
                    eprintln!("{st}: halted because the gate failed");
                    failures.push(st.to_string());
                    continue;
                }
                if let Err(e) = run_stage(&mut run, st) {
                    eprintln!("{e:#}");
                    failures.push(st.to_string());
                    if st == Stage::Gate {
                        gate_ok = false;
                    }
                }
            }
            run_report(&mut run)?;
            if !failures.is_empty() {
                bail!("stages failed: {}", failures.join(", "));
            }
            Ok(())
        }
        Command::Config { .. } | Command::Verify => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
