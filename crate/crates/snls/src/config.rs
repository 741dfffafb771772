//! The TOML configuration surface.
//!
//! The key set is the contract (section.key, exact names):
//!
//! ```text
//! grid.n  grid.points  grid.half_length
//! dynamics.lambda  dynamics.sigma
//! initial.kind (+ per-kind fields: amplitude, width, center, mode, eta)
//! noise.coeffs[]  noise.measure          (whole section optional)
//! run.T  run.dt  run.seed  run.save_every  run.truncation_radius
//! ensemble.size  ensemble.observables
//! picard.T0  picard.radius  picard.iterations  picard.dt
//! probe.q  probe.trials  probe.modulation  probe.component  probe.dual_r
//! probe.dt  probe.T
//! ```
//!
//! Unknown keys are rejected so typos surface as line/field diagnostics
//! rather than silently-default behavior.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiment::{ExperimentSpec, InitialCondition, Observable};
use crate::grid::Grid;
use crate::io::fnv1a64_hex;
use crate::noise::{Atom, CoefficientFamily, LevyMeasureSpec, NoiseCoefficients};
use crate::solver::{NoiseModel, SolverConfig};
use crate::strichartz::MarkModulation;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: GridSection,
    pub dynamics: DynamicsSection,
    pub initial: InitialSection,
    pub noise: Option<NoiseSection>,
    pub run: RunSection,
    pub ensemble: Option<EnsembleSection>,
    pub picard: Option<PicardSection>,
    pub probe: Option<ProbeSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub points: usize,
    pub half_length: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub lambda: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: String,
    pub amplitude: Option<f64>,
    pub width: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub mode: Option<Vec<i64>>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub coeffs: Vec<CoeffEntry>,
    pub measure: MeasureSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffEntry {
    pub family: String,
    pub c: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    pub kind: String,
    pub atoms: Option<Vec<AtomEntry>>,
    pub mark_dimension: Option<usize>,
    pub alpha: Option<f64>,
    pub inner_cutoff: Option<f64>,
    pub intensity: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub mark: Vec<f64>,
    pub rate: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    #[serde(default = "default_save_every")]
    pub save_every: usize,
    pub truncation_radius: Option<f64>,
}

fn default_save_every() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub size: usize,
    pub observables: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    #[serde(rename = "T0")]
    pub horizon: f64,
    pub radius: f64,
    pub iterations: usize,
    /// Step size over `[0, T0]`; defaults to `T0 / round(T0 / run.dt)` so
    /// the grid matches the run resolution while dividing `T0` exactly.
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub q: f64,
    pub trials: usize,
    #[serde(default = "default_modulation")]
    pub modulation: String,
    pub component: Option<usize>,
    pub dual_r: Option<f64>,
    pub dt: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
}

fn default_modulation() -> String {
    "linear".to_string()
}

/// A parsed configuration together with the FNV-1a hash of its bytes,
/// which every output records.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub file: ConfigFile,
    pub hash: String,
}

pub fn parse_config(raw: &str) -> Result<LoadedConfig> {
    let file: ConfigFile = toml::from_str(raw)
        .map_err(|e| Error::invalid_config(format!("config parse error: {e}")))?;
    Ok(LoadedConfig {
        file,
        hash: fnv1a64_hex(raw.as_bytes()),
    })
}

pub fn load_config(path: &std::path::Path) -> Result<LoadedConfig> {
    let raw = std::fs::read_to_string(path)?;
    parse_config(&raw)
}

impl ConfigFile {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n, self.grid.points, self.grid.half_length)
    }

    pub fn noise_model(&self) -> Result<Option<NoiseModel>> {
        let Some(noise) = &self.noise else {
            return Ok(None);
        };
        let mut families = Vec::with_capacity(noise.coeffs.len());
        for (i, entry) in noise.coeffs.iter().enumerate() {
            let fam = match entry.family.as_str() {
                "constant" => CoefficientFamily::Constant {
                    c: entry.c.ok_or_else(|| missing(i, "c"))?,
                },
                "rational" => CoefficientFamily::Rational {
                    a: entry.a.ok_or_else(|| missing(i, "a"))?,
                    b: entry.b.ok_or_else(|| missing(i, "b"))?,
                },
                "saturating" => CoefficientFamily::Saturating {
                    a: entry.a.ok_or_else(|| missing(i, "a"))?,
                },
                other => {
                    return Err(Error::invalid_config(format!(
                        "noise.coeffs[{i}].family = '{other}' (expected constant, rational, saturating)"
                    )))
                }
            };
            families.push(fam);
        }
        let coefficients = NoiseCoefficients::new(families)?;

        let measure = match noise.measure.kind.as_str() {
            "finite_atoms" => {
                let atoms = noise
                    .measure
                    .atoms
                    .as_ref()
                    .ok_or_else(|| Error::invalid_config("noise.measure.atoms is required"))?
                    .iter()
                    .map(|a| Atom {
                        mark: a.mark.clone(),
                        rate: a.rate,
                    })
                    .collect();
                LevyMeasureSpec::finite_atoms(atoms)?
            }
            "truncated_radial" => LevyMeasureSpec::truncated_radial(
                noise.measure.mark_dimension.ok_or_else(|| {
                    Error::invalid_config("noise.measure.mark_dimension is required")
                })?,
                noise
                    .measure
                    .alpha
                    .ok_or_else(|| Error::invalid_config("noise.measure.alpha is required"))?,
                noise.measure.inner_cutoff.ok_or_else(|| {
                    Error::invalid_config("noise.measure.inner_cutoff is required")
                })?,
                noise
                    .measure
                    .intensity
                    .ok_or_else(|| Error::invalid_config("noise.measure.intensity is required"))?,
            )?,
            other => {
                return Err(Error::invalid_config(format!(
                    "noise.measure.kind = '{other}' (expected finite_atoms or truncated_radial)"
                )))
            }
        };
        Ok(Some(NoiseModel::new(coefficients, measure)?))
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig::new(
            self.grid()?,
            self.run.horizon,
            self.run.dt,
            self.dynamics.lambda,
            self.dynamics.sigma,
            self.noise_model()?,
            self.run.save_every,
        )?;
        match self.run.truncation_radius {
            Some(radius) => cfg.with_truncation(radius),
            None => Ok(cfg),
        }
    }

    pub fn initial_condition(&self) -> Result<InitialCondition> {
        let sec = &self.initial;
        let dim = self.grid.n;
        let center = sec.center.clone().unwrap_or_else(|| vec![0.0; dim]);
        let mode = sec.mode.clone().unwrap_or_else(|| vec![0; dim]);
        match sec.kind.as_str() {
            "gaussian" => Ok(InitialCondition::Gaussian {
                amplitude: sec.amplitude.unwrap_or(1.0),
                width: sec.width.unwrap_or(1.0),
                center,
                mode,
            }),
            "plane_wave" => Ok(InitialCondition::PlaneWave {
                amplitude: sec.amplitude.unwrap_or(1.0),
                mode,
            }),
            "soliton" => Ok(InitialCondition::Soliton {
                eta: sec.eta.unwrap_or(1.0),
                center: center.first().copied().unwrap_or(0.0),
            }),
            other => Err(Error::invalid_config(format!(
                "initial.kind = '{other}' (expected gaussian, plane_wave, soliton)"
            ))),
        }
    }

    /// Resolves the full experiment; `seed_override` replaces `run.seed`
    /// without changing the recorded config hash.
    pub fn experiment_spec(
        &self,
        hash: &str,
        seed_override: Option<u64>,
    ) -> Result<ExperimentSpec> {
        let observables = match self.ensemble.as_ref().and_then(|e| e.observables.as_ref()) {
            Some(names) => names
                .iter()
                .map(|n| Observable::parse(n))
                .collect::<Result<Vec<_>>>()?,
            None => vec![
                Observable::Mass,
                Observable::LrNorm,
                Observable::YNorm,
                Observable::MixedNorm,
            ],
        };
        Ok(ExperimentSpec {
            solver: self.solver_config()?,
            initial: self.initial_condition()?,
            ensemble_size: self.ensemble.as_ref().map_or(1, |e| e.size),
            master_seed: seed_override.unwrap_or(self.run.seed),
            observables,
            config_hash: hash.to_string(),
        })
    }

    pub fn probe_modulation(&self) -> Result<MarkModulation> {
        let probe = self
            .probe
            .as_ref()
            .ok_or_else(|| Error::invalid_config("config has no [probe] section"))?;
        match probe.modulation.as_str() {
            "linear" => Ok(MarkModulation::Linear {
                component: probe.component.unwrap_or(0),
            }),
            "quadratic" => Ok(MarkModulation::Quadratic),
            other => Err(Error::invalid_config(format!(
                "probe.modulation = '{other}' (expected linear or quadratic)"
            ))),
        }
    }
}

fn missing(index: usize, field: &str) -> Error {
    Error::invalid_config(format!("noise.coeffs[{index}] is missing field '{field}'"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[grid]
n = 1
points = 64
half_length = 25.132741228718345

[dynamics]
lambda = -1.0
sigma = 1.0

[initial]
kind = "gaussian"
amplitude = 1.0
width = 1.0
center = [0.0]
mode = [1]

[noise]
coeffs = [{ family = "saturating", a = 1.0 }]

[noise.measure]
kind = "finite_atoms"
atoms = [{ mark = [0.5], rate = 2.5 }, { mark = [-0.5], rate = 2.5 }]

[run]
T = 0.25
dt = 0.0009765625
seed = 42
save_every = 16

[ensemble]
size = 4

[picard]
T0 = 0.05
radius = 10.0
iterations = 10

[probe]
q = 2.0
trials = 20
modulation = "linear"
component = 0
"#;

    #[test]
    fn good_config_parses_and_resolves() {
        let loaded = parse_config(GOOD).unwrap();
        let cfg = loaded.file.solver_config().unwrap();
        assert_eq!(cfg.n_steps(), 256);
        assert!(cfg.noise().is_some());
        let spec = loaded.file.experiment_spec(&loaded.hash, None).unwrap();
        assert_eq!(spec.ensemble_size, 4);
        assert_eq!(spec.master_seed, 42);
        let spec = loaded.file.experiment_spec(&loaded.hash, Some(7)).unwrap();
        assert_eq!(spec.master_seed, 7);
        assert!(matches!(
            loaded.file.probe_modulation().unwrap(),
            MarkModulation::Linear { component: 0 }
        ));
    }

    #[test]
    fn unknown_keys_are_rejected_with_diagnostics() {
        let bad = GOOD.replace("save_every = 16", "save_evry = 16");
        let err = parse_config(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("save_evry"), "diagnostic was: {msg}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = parse_config(GOOD).unwrap();
        let b = parse_config(&GOOD.replace("seed = 42", "seed = 43")).unwrap();
        assert_ne!(a.hash, b.hash);
        let c = parse_config(GOOD).unwrap();
        assert_eq!(a.hash, c.hash);
    }

    #[test]
    fn noiseless_config_is_valid() {
        let minimal = r#"
[grid]
n = 1
points = 64
half_length = 10.0

[dynamics]
lambda = 1.0
sigma = 1.0

[initial]
kind = "plane_wave"
amplitude = 0.8
mode = [3]

[run]
T = 0.5
dt = 0.001953125
seed = 1
"#;
        let loaded = parse_config(minimal).unwrap();
        let cfg = loaded.file.solver_config().unwrap();
        assert!(cfg.noise().is_none());
        assert_eq!(cfg.save_every(), 1);
    }
}
