//! Experiment configuration.
//!
//! A config file is TOML. Keys missing from the file fall back to the
//! defaults of the chosen preset, so a file can be as short as
//! `experiment = "evolve"`.

use crate::error::{HarnessError, Result};
use crate::presets::Preset;
use crate::profiles::InitialProfile;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use stripwaves::{GridSpec, ScaleParams, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub variant: Variant,
    pub epsilon: f64,
    pub alpha: f64,
    #[serde(default)]
    pub theta: f64,
    /// Only read for the general variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl ParamsSection {
    /// Scale parameters with `epsilon` replaced by `eps`.
    pub fn build_at(&self, eps: f64) -> Result<ScaleParams> {
        let p = match self.variant {
            Variant::Standard => ScaleParams::standard(eps, self.alpha),
            Variant::Degenerate => ScaleParams::degenerate(eps, self.theta),
            Variant::General => ScaleParams::general(
                eps,
                self.mu.unwrap_or(eps),
                self.gamma.unwrap_or(eps.sqrt()),
                self.alpha,
            ),
        };
        p.map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<ScaleParams> {
        self.build_at(self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Preset,
    pub seed: u64,
    pub out: PathBuf,
    pub quiet: bool,
    pub params: ParamsSection,
    pub grid: GridSpec,
    pub initial: InitialProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    /// Sweep values of the small parameter.
    #[serde(default)]
    pub eps: Vec<f64>,
    pub monitor_every: usize,
    pub cfl: f64,
    pub h_floor: f64,
    /// Threshold overrides keyed by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

fn grid(lx: f64, ly: f64, nx: usize, ny: usize, nz: usize) -> GridSpec {
    GridSpec { lx, ly, nx, ny, nz }
}

fn standard(epsilon: f64, alpha: f64) -> ParamsSection {
    ParamsSection {
        variant: Variant::Standard,
        epsilon,
        alpha,
        theta: 0.0,
        mu: None,
        gamma: None,
    }
}

impl ExperimentConfig {
    pub fn defaults(preset: Preset) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        let mut c = ExperimentConfig {
            experiment: preset,
            seed: 1,
            out: PathBuf::from("runs").join(preset.name()),
            quiet: false,
            params: standard(0.1, 0.5),
            grid: grid(tau, tau, 32, 16, 12),
            initial: InitialProfile::Rest,
            t_final: None,
            eps: vec![],
            monitor_every: 10,
            cfl: 0.5,
            h_floor: 0.1,
            tolerances: BTreeMap::new(),
        };
        match preset {
            Preset::DnVerify => {
                c.grid = grid(tau, tau, 128, 64, 32);
                c.eps = vec![1.0, 0.1];
            }
            Preset::ResidualScaling | Preset::CommutatorScaling => {
                c.grid = grid(tau, tau, 64, 32, 20);
                c.eps = vec![0.2, 0.1, 0.05];
                c.initial = InitialProfile::Smooth { amplitude: 1.0 };
            }
            Preset::Evolve => {
                c.grid = grid(40.0, 40.0, 128, 64, 12);
                c.initial = InitialProfile::Gaussian {
                    amplitude: 0.5,
                    width: 4.0,
                };
            }
            Preset::KpCompare => {
                c.grid = grid(80.0, 40.0, 128, 32, 10);
                c.eps = vec![0.2, 0.1, 0.05];
                c.initial = InitialProfile::Pulse {
                    amplitude: 1.0,
                    width: 3.0,
                    width_y: 6.0,
                    right_moving: true,
                };
                c.monitor_every = 1000;
            }
            Preset::LinearizedEnergy => {
                c.grid = grid(tau, tau, 32, 16, 12);
                c.eps = vec![0.2, 0.1];
                c.initial = InitialProfile::Smooth { amplitude: 1.0 };
                c.t_final = Some(1.0);
            }
            Preset::Soliton => {
                c.params = standard(0.1, 0.1);
                c.grid = grid(40.0, tau, 256, 8, 4);
                c.initial = InitialProfile::LineSoliton { amplitude: 1.0 };
                c.t_final = Some(1.0);
            }
        }
        c
    }

    /// Defaults for the preset, overlaid with the TOML in `text`.
    pub fn from_toml(text: &str, preset: Option<Preset>) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let named = match table.get("experiment") {
            Some(v) => Some(
                v.clone()
                    .try_into::<Preset>()
                    .map_err(|e| HarnessError::Config(format!("experiment: {e}")))?,
            ),
            None => None,
        };
        let preset = preset
            .or(named)
            .ok_or_else(|| HarnessError::Config("no experiment named in the config or on the command line".into()))?;
        let mut base = toml::Table::try_from(Self::defaults(preset)).map_err(|e| HarnessError::Config(e.to_string()))?;
        merge(&mut base, table);
        base.insert("experiment".into(), toml::Value::String(preset.name().into()));
        let cfg: ExperimentConfig = base.try_into().map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, preset: Option<Preset>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, preset)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.build()?;
        for &e in &self.eps {
            self.params.build_at(e)?;
        }
        stripwaves::SpectralGrid::from_spec(&self.grid).map_err(|e| HarnessError::Config(e.to_string()))?;
        self.initial.validate()?;
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.monitor_every == 0 {
            return bad("monitor_every must be >= 1".into());
        }
        if !(self.cfl > 0.0) {
            return bad(format!("cfl = {} must be > 0", self.cfl));
        }
        if !(self.h_floor > 0.0) {
            return bad(format!("h_floor = {} must be > 0", self.h_floor));
        }
        if let Some(t) = self.t_final {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("t_final = {t} must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Threshold for a check, honoring overrides.
    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// Sweep values, falling back to the single configured epsilon.
    pub fn sweep(&self) -> Vec<f64> {
        if self.eps.is_empty() {
            vec![self.params.epsilon]
        } else {
            self.eps.clone()
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            // a new profile tag replaces the whole initial-data table
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if !(k == "initial" && o.contains_key("profile")) => {
                merge(b, o)
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c = ExperimentConfig::from_toml("experiment = \"evolve\"\n[params]\nalpha = 0.7\n", None).unwrap();
        let d = ExperimentConfig::defaults(Preset::Evolve);
        assert_eq!(c.params.alpha, 0.7);
        assert_eq!(c.params.epsilon, d.params.epsilon);
        assert_eq!(c.grid, d.grid);
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        for p in Preset::ALL {
            let d = ExperimentConfig::defaults(p);
            let text = toml::to_string(&d).unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text, None).unwrap(), d);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("", None).is_err());
        assert!(ExperimentConfig::from_toml("experiment = \"nope\"", None).is_err());
        assert!(ExperimentConfig::from_toml("experiment = \"evolve\"\nfoo = 1", None).is_err());
        assert!(ExperimentConfig::from_toml("experiment = \"evolve\"\n[params]\nepsilon = 2.0", None).is_err());
    }

    #[test]
    fn profile_change_replaces_the_table() {
        let c = ExperimentConfig::from_toml(
            "experiment = \"evolve\"\n[initial]\nprofile = \"mode\"\namplitude = 0.01\nkx = 1\nky = 0\n",
            None,
        )
        .unwrap();
        assert!(matches!(c.initial, InitialProfile::Mode { .. }));
    }
}
