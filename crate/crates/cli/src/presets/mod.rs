//! The named experiments.

mod dn_verify;
mod evolve;
mod kp_compare;
mod linearized_energy;
mod scaling;
mod soliton;

use crate::checks::Check;
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    DnVerify,
    ResidualScaling,
    CommutatorScaling,
    Evolve,
    KpCompare,
    LinearizedEnergy,
    Soliton,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::DnVerify,
        Preset::ResidualScaling,
        Preset::CommutatorScaling,
        Preset::Evolve,
        Preset::KpCompare,
        Preset::LinearizedEnergy,
        Preset::Soliton,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::DnVerify => "dn-verify",
            Preset::ResidualScaling => "residual-scaling",
            Preset::CommutatorScaling => "commutator-scaling",
            Preset::Evolve => "evolve",
            Preset::KpCompare => "kp-compare",
            Preset::LinearizedEnergy => "linearized-energy",
            Preset::Soliton => "soliton",
        }
    }

    /// Acceptance criteria the preset reports on.
    pub fn criteria(self) -> &'static [u32] {
        match self {
            Preset::DnVerify => &[1, 2, 3],
            Preset::ResidualScaling => &[4],
            Preset::CommutatorScaling => &[5],
            Preset::Evolve => &[6, 7, 11, 12],
            Preset::KpCompare => &[9],
            Preset::LinearizedEnergy => &[10],
            Preset::Soliton => &[8],
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown preset '{s}'")))
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub preset: Preset,
    pub seed: u64,
    pub files: Vec<String>,
}

pub const MANIFEST: &str = "manifest.json";
pub const CHECKS: &str = "checks.csv";

/// Output directory plus the checks collected so far.
pub struct Run<'a> {
    pub cfg: &'a ExperimentConfig,
    pub out: PathBuf,
    pub checks: Vec<Check>,
    files: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        std::fs::create_dir_all(&cfg.out).map_err(|source| HarnessError::Io {
            path: cfg.out.clone(),
            source,
        })?;
        Ok(Run {
            cfg,
            out: cfg.out.clone(),
            checks: Vec::new(),
            files: Vec::new(),
        })
    }

    pub fn log(&self, msg: impl AsRef<str>) {
        if !self.cfg.quiet {
            println!("[{}] {}", self.cfg.experiment, msg.as_ref());
        }
    }

    /// Path for an output file, recorded in the manifest.
    pub fn file(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.out.join(rel);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        if !self.files.iter().any(|f| f == rel) {
            self.files.push(rel.to_string());
        }
        Ok(p)
    }

    pub fn csv<S: Serialize>(&mut self, rel: &str, rows: &[S]) -> Result<()> {
        let path = self.file(rel)?;
        write_csv(&path, rows)
    }

    pub fn check(&mut self, c: Check) {
        self.log(format!(
            "criterion {} {}: {:e} ({}) {}",
            c.criterion,
            c.name,
            c.measured,
            c.threshold,
            if c.pass { "ok" } else { "FAILED" }
        ));
        self.checks.push(c);
    }

    fn finish(mut self) -> Result<RunOutcome> {
        let checks = std::mem::take(&mut self.checks);
        self.csv(CHECKS, &checks)?;
        let manifest = Manifest {
            preset: self.cfg.experiment,
            seed: self.cfg.seed,
            files: self.files.clone(),
        };
        let path = self.out.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| HarnessError::Output {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        std::fs::write(&path, text + "\n").map_err(|source| HarnessError::Io { path, source })?;
        Ok(RunOutcome {
            preset: self.cfg.experiment,
            out: self.out,
            checks,
        })
    }
}

pub(crate) fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let err = |reason: String| HarnessError::Output {
        path: path.to_path_buf(),
        reason,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| err(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| err(e.to_string()))?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub preset: Preset,
    pub out: PathBuf,
    pub checks: Vec<Check>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Run the configured preset and write its reports under `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut run = Run::new(cfg)?;
    match cfg.experiment {
        Preset::DnVerify => dn_verify::run(&mut run)?,
        Preset::ResidualScaling => scaling::residual(&mut run)?,
        Preset::CommutatorScaling => scaling::commutator(&mut run)?,
        Preset::Evolve => evolve::run(&mut run)?,
        Preset::KpCompare => kp_compare::run(&mut run)?,
        Preset::LinearizedEnergy => linearized_energy::run(&mut run)?,
        Preset::Soliton => soliton::run(&mut run)?,
    }
    run.finish()
}

pub(crate) fn grid_of(spec: &stripwaves::GridSpec) -> Result<stripwaves::SpectralGrid> {
    stripwaves::SpectralGrid::from_spec(spec).map_err(|e| HarnessError::Config(e.to_string()))
}
