//! Thin command-line front end over the `snls` library.
//!
//! Exit codes: 0 success, 1 verification violations, 2 configuration or
//! output-guard errors, 3 numerical failures (blow-up, non-contraction).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use snls::config::{load_config, LoadedConfig};
use snls::error::Error;
use snls::experiment::{run_ensemble, run_member, InitialCondition};
use snls::io;
use snls::marcus::{marcus_jump, marcus_jump_ode, verify_flow_bounds};
use snls::mild::picard;
use snls::norms::{l2_norm, trajectory_from_fn, AdmissiblePair};
use snls::solver::{cutoff_theta, cutoff_theta_lipschitz, plane_wave_solution};
use snls::strichartz::{det_inhomogeneous_probe, stochastic_strichartz_probe, XiEntry};
use snls::Propagator;

#[derive(Parser)]
#[command(
    name = "snls",
    version,
    about = "Split-step simulator for the jump-noise nonlinear Schrodinger equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override run.seed without changing the recorded config hash.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for ensembles and probes (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overwrite outputs recorded under a different config hash.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one path; emits trajectory.csv and steps.csv.
    Simulate(Common),
    /// Evolve an ensemble; emits summary.json and paths.csv.
    Ensemble(Common),
    /// Deterministic and stochastic estimate probes; emits probe.json.
    #[command(name = "probe-strichartz")]
    ProbeStrichartz(Common),
    /// Fixed-point iteration diagnostics; emits picard.csv.
    Picard(Common),
    /// Randomized certification of the flow, cutoff, and noise bounds;
    /// nonzero exit on any violation.
    #[command(name = "verify-lemmas")]
    VerifyLemmas(Common),
}

type CommandFn = fn(&Common, &LoadedConfig) -> snls::Result<i32>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, CommandFn) =
        match &cli.command {
            Command::Simulate(c) => (c, cmd_simulate),
            Command::Ensemble(c) => (c, cmd_ensemble),
            Command::ProbeStrichartz(c) => (c, cmd_probe),
            Command::Picard(c) => (c, cmd_picard),
            Command::VerifyLemmas(c) => (c, cmd_verify),
        };

    if let Some(threads) = common.threads {
        // Ignore failure: the global pool may already exist in-process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let loaded = match load_config(&common.config) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    match run(common, &loaded) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn cmd_simulate(common: &Common, loaded: &LoadedConfig) -> snls::Result<i32> {
    let spec = loaded.file.experiment_spec(&loaded.hash, common.seed)?;
    let u0 = spec.initial.build(*spec.solver.grid())?;
    let boundary = u0.boundary_mass_fraction(0.1);
    if boundary > 1e-4 {
        eprintln!(
            "warning: {boundary:.2e} of the initial mass sits in the outer 10% of the torus; \
             whole-space comparisons may be contaminated"
        );
    }
    let (path, output) = run_member(&spec, 0)?;

    // A plane-wave run without noise has a closed-form solution; append the
    // per-snapshot error column in that case.
    let exact_error = match (&spec.initial, spec.solver.noise()) {
        (InitialCondition::PlaneWave { amplitude, mode }, None) => {
            let mut errors = Vec::with_capacity(output.reports.len());
            for i in 0..output.trajectory.len() {
                let exact = plane_wave_solution(
                    *spec.solver.grid(),
                    *amplitude,
                    mode,
                    spec.solver.lambda(),
                    spec.solver.sigma(),
                    output.trajectory.times()[i],
                )?;
                errors.push(l2_norm(&output.trajectory.field(i).sub(&exact))?);
            }
            Some(errors)
        }
        _ => None,
    };

    let steps = io::step_reports_csv(
        &output.reports,
        exact_error.as_deref(),
        &spec.config_hash,
        spec.master_seed,
    );
    let traj = io::trajectory_csv(&output.trajectory, &spec.config_hash, spec.master_seed);
    io::write_guarded(
        &common.out_dir.join("steps.csv"),
        &steps,
        &spec.config_hash,
        common.force,
    )?;
    io::write_guarded(
        &common.out_dir.join("trajectory.csv"),
        &traj,
        &spec.config_hash,
        common.force,
    )?;
    println!(
        "simulate: {} snapshots, {} jumps, max mass drift {:.3e} -> {}",
        output.trajectory.len(),
        path.len(),
        output.max_relative_mass_drift(),
        common.out_dir.display()
    );
    Ok(0)
}

fn cmd_ensemble(common: &Common, loaded: &LoadedConfig) -> snls::Result<i32> {
    let spec = loaded.file.experiment_spec(&loaded.hash, common.seed)?;
    let summary = run_ensemble(&spec)?;
    io::write_guarded(
        &common.out_dir.join("summary.json"),
        &io::to_json_pretty(&summary)?,
        &spec.config_hash,
        common.force,
    )?;
    io::write_guarded(
        &common.out_dir.join("paths.csv"),
        &io::ensemble_paths_csv(&summary),
        &spec.config_hash,
        common.force,
    )?;
    println!(
        "ensemble: {} paths ({} failures), max mass drift {:.3e} -> {}",
        summary.paths,
        summary.failures,
        summary.max_mass_drift(),
        common.out_dir.display()
    );
    Ok(0)
}

fn cmd_probe(common: &Common, loaded: &LoadedConfig) -> snls::Result<i32> {
    let file = &loaded.file;
    let probe = file
        .probe
        .clone()
        .ok_or_else(|| Error::invalid_config("probe-strichartz needs a [probe] section"))?;
    let solver = file.solver_config()?;
    let grid = *solver.grid();
    let prop = Propagator::new(&grid);
    let pair = solver.pair();
    let seed = common.seed.unwrap_or(file.run.seed);
    let t_max = probe.horizon.unwrap_or(solver.horizon());
    let dt = probe.dt.unwrap_or(solver.dt());
    let profile = file.initial_condition()?.build(grid)?;

    // Homogeneous free-evolution probe.
    let homogeneous = prop.strichartz_homogeneous_probe(&profile, pair, t_max, dt)?;

    // Inhomogeneous probe with time-constant forcing from the profile.
    let dual = AdmissiblePair::new(grid.dimension(), probe.dual_r.unwrap_or(2.0))?;
    let steps = (t_max / dt).round() as usize;
    let forcing = trajectory_from_fn(grid, pair, t_max, steps, |_| profile.clone())?;
    let det = det_inhomogeneous_probe(&prop, &forcing, &pair, &dual, t_max)?;

    // Stochastic probe (needs a noise measure).
    let noise = solver.noise().ok_or_else(|| {
        Error::invalid_config("probe-strichartz needs a [noise] section for the stochastic probe")
    })?;
    let xi = XiEntry {
        profile: profile.clone(),
        modulation: file.probe_modulation()?,
    };
    let stochastic = stochastic_strichartz_probe(
        &prop,
        &noise.measure,
        &xi,
        &pair,
        probe.q,
        probe.trials,
        t_max,
        dt,
        seed,
    )?;

    #[derive(serde::Serialize)]
    struct ProbeDocument<'a> {
        config_hash: &'a str,
        pair: (f64, f64),
        q: f64,
        trials: usize,
        lhs: f64,
        rhs_quadratic: f64,
        rhs_qth: f64,
        ratio: f64,
        dt: f64,
        grid: (usize, usize, f64),
        homogeneous_ratio: f64,
        deterministic: &'a snls::strichartz::DetProbeReport,
    }
    let doc = ProbeDocument {
        config_hash: &loaded.hash,
        pair: stochastic.pair,
        q: stochastic.q,
        trials: stochastic.trials,
        lhs: stochastic.lhs,
        rhs_quadratic: stochastic.rhs_quadratic,
        rhs_qth: stochastic.rhs_qth,
        ratio: stochastic.ratio,
        dt: stochastic.dt,
        grid: stochastic.grid,
        homogeneous_ratio: homogeneous,
        deterministic: &det,
    };
    io::write_guarded(
        &common.out_dir.join("probe.json"),
        &io::to_json_pretty(&doc)?,
        &loaded.hash,
        common.force,
    )?;
    println!(
        "probe: homogeneous {homogeneous:.4}, stochastic ratio {:.4} -> {}",
        stochastic.ratio,
        common.out_dir.display()
    );
    Ok(0)
}

fn cmd_picard(common: &Common, loaded: &LoadedConfig) -> snls::Result<i32> {
    let file = &loaded.file;
    let section = file
        .picard
        .clone()
        .ok_or_else(|| Error::invalid_config("picard needs a [picard] section"))?;
    let base = file.solver_config()?;
    // Rebuild the solver over the fixed-point horizon T0 with a step that
    // divides it exactly.
    let dt = section.dt.unwrap_or_else(|| {
        let steps = (section.horizon / file.run.dt).round().max(1.0);
        section.horizon / steps
    });
    let solver = snls::solver::SolverConfig::new(
        *base.grid(),
        section.horizon,
        dt,
        base.lambda(),
        base.sigma(),
        base.noise().cloned(),
        1,
    )?;
    let seed = common.seed.unwrap_or(file.run.seed);
    let path = match solver.noise() {
        Some(noise) => noise.measure.sample_path(section.horizon, seed)?,
        None => snls::noise::SamplePath::empty(section.horizon),
    };
    let u0 = file.initial_condition()?.build(*solver.grid())?;
    let prop = Propagator::new(solver.grid());
    let run = picard(&prop, &u0, &path, &solver, section.radius, section.iterations)?;

    io::write_guarded(
        &common.out_dir.join("picard.csv"),
        &io::picard_csv(&run, &loaded.hash, seed),
        &loaded.hash,
        common.force,
    )?;
    let ratios = run.ratios();
    println!(
        "picard: {} iterations, converged = {}, worst ratio {:.4} -> {}",
        run.iterates.len(),
        run.converged,
        ratios.iter().copied().fold(0.0f64, f64::max),
        common.out_dir.display()
    );
    Ok(0)
}

fn cmd_verify(common: &Common, loaded: &LoadedConfig) -> snls::Result<i32> {
    use rand::{RngExt, SeedableRng};
    let file = &loaded.file;
    let solver = file.solver_config()?;
    let noise = solver
        .noise()
        .ok_or_else(|| Error::invalid_config("verify-lemmas needs a [noise] section"))?;
    let coeffs = &noise.coefficients;
    let seed = common.seed.unwrap_or(file.run.seed);
    let mut violations = 0usize;

    // Jump-flow increment bounds, randomized.
    let report = verify_flow_bounds(coeffs, 100_000, 10.0, seed);
    violations += report.violations.iter().sum::<usize>();
    println!(
        "flow bounds: {} trials, violations {:?}, max ratios {:?}",
        report.trials, report.violations, report.max_ratio
    );

    // Closed form vs fourth-order oracle, and modulus conservation.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let random_disk = |rng: &mut rand_chacha::ChaCha8Rng, radius: f64| {
        let r = radius * rng.random::<f64>().sqrt();
        let angle = std::f64::consts::TAU * rng.random::<f64>();
        num_complex::Complex64::from_polar(r, angle)
    };
    let mut worst_gap = 0.0f64;
    let mut worst_drift = 0.0f64;
    for _ in 0..10_000 {
        let y = random_disk(&mut rng, 10.0);
        let z: Vec<f64> = (0..coeffs.count())
            .map(|_| 2.0 * rng.random::<f64>() - 1.0)
            .collect();
        let scale = z.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
        let z: Vec<f64> = z.iter().map(|x| x / scale).collect();
        let closed = marcus_jump(y, &z, coeffs).value;
        let ode = marcus_jump_ode(y, &z, coeffs, 256);
        worst_gap = worst_gap.max((closed - ode).norm());
        worst_drift = worst_drift.max((ode.norm() - y.norm()).abs());
    }
    if worst_gap > 1e-10 || worst_drift > 1e-10 {
        violations += 1;
    }
    println!("jump flow: closed-vs-oracle gap {worst_gap:.3e}, modulus drift {worst_drift:.3e}");

    // Cutoff Lipschitz bound, randomized.
    let mut cutoff_bad = 0usize;
    for _ in 0..100_000 {
        let radius = 1.0 + 9.0 * rng.random::<f64>();
        let x = 4.0 * radius * rng.random::<f64>();
        let y = 4.0 * radius * rng.random::<f64>();
        let gap = (cutoff_theta(x, radius)? - cutoff_theta(y, radius)?).abs();
        if gap > cutoff_theta_lipschitz(radius) * (x - y).abs() * (1.0 + 1e-12) {
            cutoff_bad += 1;
        }
    }
    violations += cutoff_bad;
    println!("cutoff: Lipschitz violations {cutoff_bad}");

    // Noise model: mark support and Lipschitz constants on a large sample.
    let path = noise.measure.sample_path(solver.horizon(), seed)?;
    let mut support_bad = 0usize;
    for e in path.events() {
        let norm = e.mark.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm <= 1.0) {
            support_bad += 1;
        }
    }
    violations += support_bad;
    let (l1, l2) = coeffs.lipschitz_constants();
    let mut lip_bad = 0usize;
    for _ in 0..1_000_000 {
        let scale = 10f64.powf(3.0 * rng.random::<f64>());
        let x = random_disk(&mut rng, scale);
        let y = random_disk(&mut rng, scale);
        let d = (x - y).norm();
        for fam in coeffs.families() {
            let gx = x * fam.g_tilde(x.norm_sqr());
            let gy = y * fam.g_tilde(y.norm_sqr());
            if (gx - gy).norm() > l1 * d * (1.0 + 1e-12) + 1e-300 {
                lip_bad += 1;
            }
        }
        for fj in coeffs.families() {
            for fk in coeffs.families() {
                let mx = x * fj.g_tilde(x.norm_sqr()) * fk.g_tilde(x.norm_sqr());
                let my = y * fj.g_tilde(y.norm_sqr()) * fk.g_tilde(y.norm_sqr());
                if (mx - my).norm() > l2 * d * (1.0 + 1e-12) + 1e-300 {
                    lip_bad += 1;
                }
            }
        }
    }
    violations += lip_bad;
    println!(
        "noise: {support_bad} sampled marks outside the ball, {lip_bad} Lipschitz violations \
         over 1e6 pairs (L1={l1:.4}, L2={l2:.4})"
    );

    #[derive(serde::Serialize)]
    struct VerifyDocument {
        config_hash: String,
        violations: usize,
        flow_violations: [usize; 4],
        flow_max_ratio: [f64; 4],
        closed_vs_oracle: f64,
        modulus_drift: f64,
        l1: f64,
        l2: f64,
    }
    let doc = VerifyDocument {
        config_hash: loaded.hash.clone(),
        violations,
        flow_violations: report.violations,
        flow_max_ratio: report.max_ratio,
        closed_vs_oracle: worst_gap,
        modulus_drift: worst_drift,
        l1,
        l2,
    };
    io::write_guarded(
        &common.out_dir.join("verify.json"),
        &io::to_json_pretty(&doc)?,
        &loaded.hash,
        common.force,
    )?;

    if violations == 0 {
        println!("verify-lemmas: clean");
        Ok(0)
    } else {
        println!("verify-lemmas: {violations} violations");
        Ok(1)
    }
}
