//! Reproducible single runs and ensembles over independent jump paths.
//!
//! Paths are keyed by `(master seed, path index)` through counter-based RNG
//! streams, so ensemble members can be generated and evolved in any order
//! (rayon decides) while the collected results -- and the bytes of every
//! output file -- depend only on the configuration and the seed.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::noise::SamplePath;
use crate::norms::mixed_norm;
use crate::solver::{evolve, evolve_truncated, SolverConfig, SolverOutput};

/// Closed catalog of initial profiles; everything the verification runs
/// need, each with a documented closed form or decay property.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Gaussian {
        amplitude: f64,
        width: f64,
        center: Vec<f64>,
        mode: Vec<i64>,
    },
    PlaneWave {
        amplitude: f64,
        mode: Vec<i64>,
    },
    Soliton {
        eta: f64,
        center: f64,
    },
}

impl InitialCondition {
    pub fn build(&self, grid: Grid) -> Result<ComplexField> {
        match self {
            InitialCondition::Gaussian {
                amplitude,
                width,
                center,
                mode,
            } => ComplexField::gaussian_packet(grid, *amplitude, *width, center, mode),
            InitialCondition::PlaneWave { amplitude, mode } => {
                ComplexField::plane_wave(grid, num_complex::Complex64::new(*amplitude, 0.0), mode)
            }
            InitialCondition::Soliton { eta, center } => {
                ComplexField::sech_soliton(grid, *eta, *center)
            }
        }
    }
}

/// Observables recorded per path and summarized over the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Terminal `L^2` norm (conserved; its ensemble variance is a test).
    Mass,
    /// Terminal `L^r` norm at `r = 2 sigma + 2`.
    LrNorm,
    /// Final running Y-norm.
    YNorm,
    /// Mixed `L^p L^r` norm over the stored snapshots.
    MixedNorm,
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Observable::Mass => "mass",
            Observable::LrNorm => "lr_norm",
            Observable::YNorm => "y_norm",
            Observable::MixedNorm => "mixed_norm",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "mass" => Ok(Observable::Mass),
            "lr_norm" => Ok(Observable::LrNorm),
            "y_norm" => Ok(Observable::YNorm),
            "mixed_norm" => Ok(Observable::MixedNorm),
            other => Err(Error::invalid_config(format!(
                "unknown observable '{other}' (expected mass, lr_norm, y_norm, mixed_norm)"
            ))),
        }
    }
}

/// A fully resolved experiment: solver setup, data, ensemble size, seeding.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub solver: SolverConfig,
    pub initial: InitialCondition,
    pub ensemble_size: usize,
    pub master_seed: u64,
    pub observables: Vec<Observable>,
    /// Hash of the originating config file, recorded in every output.
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableStats {
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathRecord {
    pub index: usize,
    pub events: usize,
    pub terminal: BTreeMap<String, f64>,
    /// Largest relative deviation of the mass from its initial value.
    pub max_mass_drift: f64,
    /// Time of numerical blow-up, if the path failed.
    pub blow_up: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub config_hash: String,
    pub master_seed: u64,
    pub code_version: String,
    pub paths: usize,
    pub failures: usize,
    pub observables: BTreeMap<String, ObservableStats>,
    pub per_path: Vec<PathRecord>,
}

impl EnsembleSummary {
    pub fn max_mass_drift(&self) -> f64 {
        self.per_path
            .iter()
            .map(|p| p.max_mass_drift)
            .fold(0.0, f64::max)
    }
}

/// Samples the path of ensemble member `index` under `master_seed`.
pub fn member_path(spec: &ExperimentSpec, index: usize) -> Result<SamplePath> {
    match spec.solver.noise() {
        Some(noise) => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.master_seed);
            rng.set_stream(index as u64);
            noise
                .measure
                .sample_path_with(spec.solver.horizon(), spec.master_seed, &mut rng)
        }
        None => Ok(SamplePath::empty(spec.solver.horizon())),
    }
}

/// Runs one ensemble member (splitting solver, truncated if configured).
pub fn run_member(spec: &ExperimentSpec, index: usize) -> Result<(SamplePath, SolverOutput)> {
    let u0 = spec.initial.build(*spec.solver.grid())?;
    let path = member_path(spec, index)?;
    let output = if spec.solver.truncation_radius().is_some() {
        evolve_truncated(&u0, &spec.solver, &path)?
    } else {
        evolve(&u0, &spec.solver, &path)?
    };
    Ok((path, output))
}

fn observe(spec: &ExperimentSpec, output: &SolverOutput) -> Result<BTreeMap<String, f64>> {
    let mut terminal = BTreeMap::new();
    let last = output
        .reports
        .last()
        .ok_or_else(|| Error::invalid_config("run produced no reports"))?;
    for obs in &spec.observables {
        let value = match obs {
            Observable::Mass => last.mass,
            Observable::LrNorm => last.lr_norm,
            Observable::YNorm => last.y_norm,
            Observable::MixedNorm => mixed_norm(&output.trajectory, &spec.solver.pair())?,
        };
        terminal.insert(obs.name().to_string(), value);
    }
    Ok(terminal)
}

/// Evolves `M` independent paths and aggregates the observables.
/// Blow-ups are recorded per path and excluded from the statistics; the
/// ensemble keeps going. Bit-reproducible per `(spec, master seed)`.
pub fn run_ensemble(spec: &ExperimentSpec) -> Result<EnsembleSummary> {
    if spec.ensemble_size == 0 {
        return Err(Error::invalid_config("ensemble size must be at least 1"));
    }
    if spec.observables.is_empty() {
        return Err(Error::invalid_config("need at least one observable"));
    }

    let records: Result<Vec<PathRecord>> = (0..spec.ensemble_size)
        .into_par_iter()
        .map(|index| {
            let path = member_path(spec, index)?;
            let events = path.len();
            match run_member(spec, index) {
                Ok((_, output)) => Ok(PathRecord {
                    index,
                    events,
                    terminal: observe(spec, &output)?,
                    max_mass_drift: output.max_relative_mass_drift(),
                    blow_up: None,
                }),
                Err(Error::BlowUp(t)) => Ok(PathRecord {
                    index,
                    events,
                    terminal: BTreeMap::new(),
                    max_mass_drift: f64::NAN,
                    blow_up: Some(t),
                }),
                Err(other) => Err(other),
            }
        })
        .collect();
    let records = records?;

    let failures = records.iter().filter(|r| r.blow_up.is_some()).count();
    let mut observables = BTreeMap::new();
    for obs in &spec.observables {
        let values: Vec<f64> = records
            .iter()
            .filter(|r| r.blow_up.is_none())
            .map(|r| r.terminal[obs.name()])
            .collect();
        if values.is_empty() {
            continue;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        observables.insert(
            obs.name().to_string(),
            ObservableStats {
                mean,
                variance,
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            },
        );
    }

    Ok(EnsembleSummary {
        config_hash: spec.config_hash.clone(),
        master_seed: spec.master_seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        paths: spec.ensemble_size,
        failures,
        observables,
        per_path: records,
    })
}
