//! Pathwise time stepping by Strang splitting between jumps.
//!
//! One sub-step of length `tau` applies
//!
//! ```text
//! u <- P(tau/2) . F(tau) . P(tau/2) u
//! ```
//!
//! where `F` is the Fourier-exact free group and `P` is the pointwise phase
//! rotation generated by the nonlinearity and the compensator drift
//! together:
//!
//! ```text
//! P(tau): u(x) <- u(x) exp( i tau [ -lambda |u(x)|^{2 sigma}
//!                                   + sum_j mu_j g~_j(|u(x)|^2) ] ).
//! ```
//!
//! Both factors of `P` depend only on `|u(x)|`, which they preserve, so they
//! commute exactly and `P` conserves every pointwise modulus; `F` is unitary
//! on the grid. At each jump time the step schedule is cut so the Marcus
//! rotation applies to `u(t-)` at the exact event time. Mass conservation is
//! therefore structural: the only drift left is FFT rounding.
//!
//! The truncated variant multiplies `lambda` by a smooth cutoff of the
//! *running* Y-norm, switching the nonlinearity off once the norm passes
//! twice the truncation radius; everything else is unchanged, so truncation
//! never touches the modulus and mass conservation survives verbatim.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::marcus::marcus_jump;
use crate::noise::{LevyMeasureSpec, NoiseCoefficients, SamplePath};
use crate::norms::{l2_norm_unchecked, lr_norm_unchecked, AdmissiblePair, SnapshotKind, Trajectory};
use crate::propagator::Propagator;

/// Coefficients and jump measure together; their mark dimensions must agree.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub coefficients: NoiseCoefficients,
    pub measure: LevyMeasureSpec,
}

impl NoiseModel {
    pub fn new(coefficients: NoiseCoefficients, measure: LevyMeasureSpec) -> Result<Self> {
        if coefficients.count() != measure.mark_dimension() {
            return Err(Error::invalid_config(format!(
                "noise has {} coefficient functions but marks live in R^{}",
                coefficients.count(),
                measure.mark_dimension()
            )));
        }
        Ok(NoiseModel {
            coefficients,
            measure,
        })
    }
}

/// Everything a run needs besides the initial state and the realized path.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    grid: Grid,
    horizon: f64,
    dt: f64,
    lambda: f64,
    sigma: f64,
    pair: AdmissiblePair,
    noise: Option<NoiseModel>,
    save_every: usize,
    truncation_radius: Option<f64>,
}

impl SolverConfig {
    /// Validates `0 < sigma < 2/n`, derives the admissible pair from
    /// `r = 2 sigma + 2`, and requires `dt` to divide the horizon.
    pub fn new(
        grid: Grid,
        horizon: f64,
        dt: f64,
        lambda: f64,
        sigma: f64,
        noise: Option<NoiseModel>,
        save_every: usize,
    ) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid_config("horizon must be positive"));
        }
        if !(dt > 0.0 && dt <= horizon) {
            return Err(Error::invalid_config("dt must lie in (0, horizon]"));
        }
        if !lambda.is_finite() {
            return Err(Error::invalid_config("lambda must be finite"));
        }
        let n = grid.dimension() as f64;
        if !(sigma > 0.0 && sigma < 2.0 / n) {
            return Err(Error::invalid_config(format!(
                "sigma = {sigma} outside the subcritical range (0, {})",
                2.0 / n
            )));
        }
        let steps = (horizon / dt).round();
        if steps < 1.0 || (steps * dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::invalid_config(format!(
                "dt = {dt} does not divide the horizon {horizon}"
            )));
        }
        if save_every == 0 {
            return Err(Error::invalid_config("save_every must be at least 1"));
        }
        let pair = AdmissiblePair::new(grid.dimension(), 2.0 * sigma + 2.0)?;
        Ok(SolverConfig {
            grid,
            horizon,
            dt,
            lambda,
            sigma,
            pair,
            noise,
            save_every,
            truncation_radius: None,
        })
    }

    /// Enables the Y-norm truncation with radius `R >= 1`.
    pub fn with_truncation(mut self, radius: f64) -> Result<Self> {
        if !(radius >= 1.0 && radius.is_finite()) {
            return Err(Error::invalid_config("truncation radius must be >= 1"));
        }
        self.truncation_radius = Some(radius);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn pair(&self) -> AdmissiblePair {
        self.pair
    }

    pub fn noise(&self) -> Option<&NoiseModel> {
        self.noise.as_ref()
    }

    pub fn save_every(&self) -> usize {
        self.save_every
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        self.truncation_radius
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Compensator drift coefficients `mu_j = integral z_j nu(dz)`, or
    /// `None` when the run is noiseless or the drift vanishes identically.
    pub fn drift(&self) -> Option<Vec<f64>> {
        let noise = self.noise.as_ref()?;
        let mu = noise.measure.first_moment();
        if mu.iter().all(|&x| x == 0.0) {
            None
        } else {
            Some(mu)
        }
    }
}

/// Per-snapshot diagnostics emitted alongside the trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub time: f64,
    /// Discrete L2 norm; conserved to ~1e-11 relative over any run.
    pub mass: f64,
    /// `L^r` norm at the pair's `r = 2 sigma + 2`.
    pub lr_norm: f64,
    /// Running Y-norm accumulated at full step resolution.
    pub y_norm: f64,
    pub jump_applied: bool,
}

/// Smooth cutoff: 1 on `[0, R]`, 0 on `[2R, inf)`, and the quintic
/// smoothstep `1 - s^3 (6 s^2 - 15 s + 10)`, `s = (x - R)/R`, in between.
/// Its steepest slope is `-15/(8R)`, so the Lipschitz constant is
/// `(15/8) / R` rather than the idealized `1/R` of a unit-slope cutoff;
/// tests use the documented constant.
pub fn cutoff_theta(x: f64, radius: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid_config(format!(
            "cutoff argument must be non-negative, got {x}"
        )));
    }
    if radius < 1.0 || radius.is_nan() {
        return Err(Error::invalid_config("truncation radius must be >= 1"));
    }
    Ok(cutoff_theta_raw(x, radius))
}

#[inline]
fn cutoff_theta_raw(x: f64, radius: f64) -> f64 {
    if x <= radius {
        1.0
    } else if x >= 2.0 * radius {
        0.0
    } else {
        let s = (x - radius) / radius;
        1.0 - s * s * s * (6.0 * s * s - 15.0 * s + 10.0)
    }
}

/// Lipschitz constant of [`cutoff_theta`] at radius `R`.
pub fn cutoff_theta_lipschitz(radius: f64) -> f64 {
    15.0 / (8.0 * radius)
}

/// Pointwise nonlinear phase rotation `u e^{-i lambda |u|^{2 sigma} dt}`;
/// the exact flow of the nonlinear part, modulus-preserving by construction.
pub fn nonlinear_phase_step(f: &ComplexField, dt: f64, lambda: f64, sigma: f64) -> ComplexField {
    let mut out = f.clone();
    rotation_pass(out.values_mut(), dt, lambda, sigma, None);
    out
}

/// Pointwise compensator drift rotation `u e^{+i sum_j mu_j g~_j(|u|^2) dt}`.
pub fn compensator_drift_step(
    f: &ComplexField,
    dt: f64,
    coeffs: &NoiseCoefficients,
    mu: &[f64],
) -> ComplexField {
    let mut out = f.clone();
    rotation_pass(out.values_mut(), dt, 0.0, 1.0, Some((coeffs, mu)));
    out
}

/// Marcus jump applied pointwise over the grid; every `L^r` norm of the
/// field is preserved because the rotation never changes a modulus.
pub fn apply_jump(f: &ComplexField, z: &[f64], coeffs: &NoiseCoefficients) -> ComplexField {
    let mut out = f.clone();
    jump_pass(out.values_mut(), z, coeffs);
    out
}

#[inline]
fn theta_pow_sigma(theta: f64, sigma: f64) -> f64 {
    if sigma == 1.0 {
        theta
    } else {
        theta.powf(sigma)
    }
}

fn rotation_pass(
    values: &mut [Complex64],
    tau: f64,
    lambda_eff: f64,
    sigma: f64,
    drift: Option<(&NoiseCoefficients, &[f64])>,
) {
    match drift {
        None => {
            for v in values.iter_mut() {
                let theta = v.norm_sqr();
                let angle = -lambda_eff * theta_pow_sigma(theta, sigma) * tau;
                *v *= Complex64::from_polar(1.0, angle);
            }
        }
        Some((coeffs, mu)) => {
            for v in values.iter_mut() {
                let theta = v.norm_sqr();
                let angle =
                    (-lambda_eff * theta_pow_sigma(theta, sigma) + coeffs.phase(mu, theta)) * tau;
                *v *= Complex64::from_polar(1.0, angle);
            }
        }
    }
}

fn jump_pass(values: &mut [Complex64], z: &[f64], coeffs: &NoiseCoefficients) {
    for v in values.iter_mut() {
        *v = marcus_jump(*v, z, coeffs).value;
    }
}

/// One scheduled interval: advance by `tau`, then possibly apply an event,
/// then possibly complete a base cell.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SubStep {
    pub tau: f64,
    pub t_end: f64,
    pub event: Option<usize>,
    pub completes_cell: Option<usize>,
}

/// Splits `[0, horizon]` into `n_steps` base cells of length `dt` and cuts
/// each cell at its events. Event positions are decomposed as
/// `cell + fraction` with `fraction = time/dt - floor(time/dt)` computed
/// exactly, so a path shifted by a whole number of cells reproduces the
/// same sub-step lengths bit for bit.
pub(crate) fn build_schedule(
    dt: f64,
    n_steps: usize,
    horizon: f64,
    path: &SamplePath,
) -> Result<Vec<SubStep>> {
    let mut per_cell: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n_steps];
    for (idx, event) in path.events().iter().enumerate() {
        if !(event.time > 0.0 && event.time <= horizon * (1.0 + 1e-12)) {
            return Err(Error::invalid_config(format!(
                "event time {} outside (0, {horizon}]",
                event.time
            )));
        }
        let q = event.time / dt;
        let mut cell = q.floor();
        // q - floor(q) is exact in IEEE arithmetic.
        let mut frac = q - cell;
        if cell as usize >= n_steps {
            cell = (n_steps - 1) as f64;
            frac = 1.0;
        }
        per_cell[cell as usize].push((frac, idx));
    }
    let mut subs = Vec::with_capacity(n_steps + 2 * path.len());
    for (k, cell_events) in per_cell.iter_mut().enumerate() {
        cell_events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut cursor = 0.0;
        for &(frac, idx) in cell_events.iter() {
            subs.push(SubStep {
                tau: (frac - cursor) * dt,
                t_end: path.events()[idx].time,
                event: Some(idx),
                completes_cell: None,
            });
            cursor = frac;
        }
        let t_end = if k + 1 == n_steps {
            horizon
        } else {
            (k + 1) as f64 * dt
        };
        subs.push(SubStep {
            tau: (1.0 - cursor) * dt,
            t_end,
            event: None,
            completes_cell: Some(k),
        });
    }
    Ok(subs)
}

/// Trajectory plus per-snapshot diagnostics.
#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub trajectory: Trajectory,
    pub reports: Vec<StepReport>,
}

impl SolverOutput {
    pub fn final_state(&self) -> &ComplexField {
        self.trajectory.last_field().expect("run produced no snapshots")
    }

    /// Largest relative deviation of any reported mass from the initial one.
    pub fn max_relative_mass_drift(&self) -> f64 {
        let m0 = self.reports[0].mass;
        self.reports
            .iter()
            .map(|r| (r.mass - m0).abs() / m0)
            .fold(0.0, f64::max)
    }
}

struct RunningY {
    p: f64,
    sup_l2: f64,
    integral: f64,
}

impl RunningY {
    fn value(&self) -> f64 {
        let mixed = if self.p.is_finite() {
            self.integral.powf(1.0 / self.p)
        } else {
            self.sup_l2
        };
        self.sup_l2 + mixed
    }
}

/// Splitting run without truncation.
pub fn evolve(u0: &ComplexField, cfg: &SolverConfig, path: &SamplePath) -> Result<SolverOutput> {
    run(u0, cfg, path, None)
}

/// Splitting run with the nonlinearity damped by
/// `theta_R(running Y-norm)`; requires a configured truncation radius. When
/// the Y-norm never leaves `[0, R]` the output is bitwise identical to
/// [`evolve`].
pub fn evolve_truncated(
    u0: &ComplexField,
    cfg: &SolverConfig,
    path: &SamplePath,
) -> Result<SolverOutput> {
    let radius = cfg.truncation_radius.ok_or_else(|| {
        Error::invalid_config("evolve_truncated needs a truncation radius in the config")
    })?;
    run(u0, cfg, path, Some(radius))
}

fn run(
    u0: &ComplexField,
    cfg: &SolverConfig,
    path: &SamplePath,
    truncation: Option<f64>,
) -> Result<SolverOutput> {
    if u0.grid() != &cfg.grid {
        return Err(Error::invalid_config("initial state grid mismatch"));
    }
    if (path.horizon() - cfg.horizon).abs() > 1e-9 * cfg.horizon.max(1.0) {
        return Err(Error::invalid_config(format!(
            "path horizon {} does not match config horizon {}",
            path.horizon(),
            cfg.horizon
        )));
    }
    if cfg.noise.is_none() && !path.is_empty() {
        return Err(Error::invalid_config(
            "a jump path was supplied but the config carries no noise model",
        ));
    }
    if !u0.is_finite() {
        return Err(Error::CorruptField);
    }

    let prop = Propagator::new(&cfg.grid);
    let schedule = build_schedule(cfg.dt, cfg.n_steps(), cfg.horizon, path)?;
    let drift = cfg.drift();
    let coeffs = cfg.noise.as_ref().map(|n| &n.coefficients);
    let r = cfg.pair.r();
    let p = cfg.pair.p();

    let mut state = u0.clone();
    let mut running = RunningY {
        p,
        sup_l2: l2_norm_unchecked(&state),
        integral: 0.0,
    };
    let mut trajectory = Trajectory::new(cfg.grid, cfg.pair);
    let mut reports = Vec::new();

    let snapshot = |state: &ComplexField,
                        t: f64,
                        kind: SnapshotKind,
                        jumped: bool,
                        running: &RunningY,
                        trajectory: &mut Trajectory,
                        reports: &mut Vec<StepReport>|
     -> Result<()> {
        if !state.is_finite() {
            return Err(Error::BlowUp(t));
        }
        trajectory.push(t, kind, state.clone())?;
        reports.push(StepReport {
            time: t,
            mass: l2_norm_unchecked(state),
            lr_norm: lr_norm_unchecked(state, r),
            y_norm: running.value(),
            jump_applied: jumped,
        });
        Ok(())
    };

    snapshot(
        &state,
        0.0,
        SnapshotKind::Interior,
        false,
        &running,
        &mut trajectory,
        &mut reports,
    )?;

    let drift_ref = match (coeffs, drift.as_ref()) {
        (Some(c), Some(mu)) => Some((c, mu.as_slice())),
        _ => None,
    };

    for sub in &schedule {
        if sub.tau > 0.0 {
            let lr_left = lr_norm_unchecked(&state, r);
            let lambda_eff = match truncation {
                None => cfg.lambda,
                Some(radius) => cutoff_theta_raw(running.value(), radius) * cfg.lambda,
            };
            let half = 0.5 * sub.tau;
            rotation_pass(state.values_mut(), half, lambda_eff, cfg.sigma, drift_ref);
            prop.free_step_values(state.values_mut(), sub.tau);
            rotation_pass(state.values_mut(), half, lambda_eff, cfg.sigma, drift_ref);
            if p.is_finite() {
                running.integral += lr_left.powf(p) * sub.tau;
            }
            running.sup_l2 = running.sup_l2.max(l2_norm_unchecked(&state));
        }
        if let Some(idx) = sub.event {
            let coeffs = coeffs.expect("events imply a noise model");
            snapshot(
                &state,
                sub.t_end,
                SnapshotKind::PreJump,
                false,
                &running,
                &mut trajectory,
                &mut reports,
            )?;
            jump_pass(state.values_mut(), &path.events()[idx].mark, coeffs);
            running.sup_l2 = running.sup_l2.max(l2_norm_unchecked(&state));
            snapshot(
                &state,
                sub.t_end,
                SnapshotKind::PostJump,
                true,
                &running,
                &mut trajectory,
                &mut reports,
            )?;
        }
        if let Some(cell) = sub.completes_cell {
            let done = cell + 1;
            if done % cfg.save_every == 0 || done == cfg.n_steps() {
                snapshot(
                    &state,
                    sub.t_end,
                    SnapshotKind::Interior,
                    false,
                    &running,
                    &mut trajectory,
                    &mut reports,
                )?;
            }
        }
    }

    Ok(SolverOutput {
        trajectory,
        reports,
    })
}

/// First snapshot time at which the running Y-norm (recomputed for `pair`
/// over the stored snapshots) exceeds `threshold`, or `None` if it never
/// does. Monotone in the threshold because the Y-norm is non-decreasing.
pub fn y_exit_time(
    traj: &Trajectory,
    pair: &AdmissiblePair,
    threshold: f64,
) -> Result<Option<f64>> {
    if threshold <= 0.0 || threshold.is_nan() {
        return Err(Error::invalid_config("exit threshold must be positive"));
    }
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let p = pair.p();
    let mut sup: f64 = 0.0;
    let mut integral = 0.0;
    for i in 0..traj.len() {
        if i > 0 {
            let dt = traj.times()[i] - traj.times()[i - 1];
            if dt > 0.0 && p.is_finite() {
                integral += lr_norm_unchecked(traj.field(i - 1), pair.r()).powf(p) * dt;
            }
        }
        sup = sup.max(l2_norm_unchecked(traj.field(i)));
        let mixed = if p.is_finite() { integral.powf(1.0 / p) } else { sup };
        if sup + mixed > threshold {
            return Ok(Some(traj.times()[i]));
        }
    }
    Ok(None)
}

/// Closed-form plane-wave solution of the noiseless equation:
/// `A e^{i(kx - (|k|^2 + lambda |A|^{2 sigma}) t)}` for a grid mode `k`.
pub fn plane_wave_solution(
    grid: Grid,
    amplitude: f64,
    mode: &[i64],
    lambda: f64,
    sigma: f64,
    t: f64,
) -> Result<ComplexField> {
    let k_sq: f64 = mode
        .iter()
        .map(|&m| (m as f64 * std::f64::consts::PI / grid.half_length()).powi(2))
        .sum();
    let omega = k_sq + lambda * amplitude.abs().powf(2.0 * sigma);
    let carrier = ComplexField::plane_wave(grid, Complex64::new(amplitude, 0.0), mode)?;
    Ok(carrier.scale(Complex64::from_polar(1.0, -omega * t)))
}

/// Closed-form standing soliton of the focusing cubic case
/// (`lambda = -1`, `sigma = 1`, zero noise): the initial sech profile times
/// `e^{i eta^2 t}`.
pub fn soliton_solution(grid: Grid, eta: f64, center: f64, t: f64) -> Result<ComplexField> {
    let profile = ComplexField::sech_soliton(grid, eta, center)?;
    Ok(profile.scale(Complex64::from_polar(1.0, eta * eta * t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{Atom, CoefficientFamily};
    use crate::norms::{l2_norm, y_distance};

    fn grid() -> Grid {
        Grid::new(1, 128, 8.0 * std::f64::consts::PI).unwrap()
    }

    fn symmetric_noise() -> NoiseModel {
        NoiseModel::new(
            NoiseCoefficients::new(vec![CoefficientFamily::Saturating { a: 1.0 }]).unwrap(),
            LevyMeasureSpec::finite_atoms(vec![
                Atom {
                    mark: vec![0.5],
                    rate: 2.5,
                },
                Atom {
                    mark: vec![-0.5],
                    rate: 2.5,
                },
            ])
            .unwrap(),
        )
        .unwrap()
    }

    fn base_config(noise: Option<NoiseModel>) -> SolverConfig {
        SolverConfig::new(grid(), 0.25, 1.0 / 512.0, 1.0, 1.0, noise, 16).unwrap()
    }

    #[test]
    fn config_validation() {
        let g = grid();
        assert!(SolverConfig::new(g, 1.0, 1e-3, 1.0, 2.5, None, 1).is_err()); // sigma >= 2/n
        assert!(SolverConfig::new(g, 1.0, 3e-4, 1.0, 1.0, None, 1).is_err()); // dt misses horizon
        assert!(SolverConfig::new(g, 1.0, 1e-3, 1.0, 1.0, None, 0).is_err());
        let cfg = SolverConfig::new(g, 1.0, 1e-3, 1.0, 1.0, None, 1).unwrap();
        assert_eq!(cfg.n_steps(), 1000);
        assert!((cfg.pair().r() - 4.0).abs() < 1e-15);
        assert!((cfg.pair().p() - 8.0).abs() < 1e-15);
        assert!(cfg.clone().with_truncation(0.5).is_err());
    }

    #[test]
    fn nonlinear_phase_step_identity_and_global_phase() {
        let g = grid();
        let f = ComplexField::gaussian_packet(g, 1.0, 1.0, &[0.0], &[0]).unwrap();
        let id = nonlinear_phase_step(&f, 0.1, 0.0, 1.0);
        assert_eq!(id.values(), f.values());

        // Constant-modulus field rotates by a single global phase.
        let c = ComplexField::constant(g, Complex64::new(0.0, 2.0));
        let dt = 0.3;
        let lambda = -1.5;
        let out = nonlinear_phase_step(&c, dt, lambda, 1.0);
        let expected = Complex64::new(0.0, 2.0) * Complex64::from_polar(1.0, -lambda * 4.0 * dt);
        for v in out.values() {
            assert!((v - expected).norm() < 1e-14);
        }
        // Pointwise modulus, hence mass, untouched.
        let noisy = nonlinear_phase_step(&f, 0.7, 2.0, 0.5);
        assert!((l2_norm(&noisy).unwrap() - l2_norm(&f).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn compensator_drift_identity_for_zero_mean() {
        let g = grid();
        let noise = symmetric_noise();
        let f = ComplexField::gaussian_packet(g, 1.0, 1.0, &[0.0], &[1]).unwrap();
        let out = compensator_drift_step(&f, 0.5, &noise.coefficients, &[0.0]);
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_coefficient_drift_is_global_phase() {
        let g = grid();
        let coeffs = NoiseCoefficients::new(vec![
            CoefficientFamily::Constant { c: 0.8 },
            CoefficientFamily::Constant { c: -0.2 },
        ])
        .unwrap();
        let mu = [0.3, 1.1];
        let dt = 0.4;
        let f = ComplexField::gaussian_packet(g, 1.0, 1.0, &[0.0], &[2]).unwrap();
        let out = compensator_drift_step(&f, dt, &coeffs, &mu);
        let phase = Complex64::from_polar(1.0, (mu[0] * 0.8 + mu[1] * -0.2) * dt);
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b * phase).norm() < 1e-14);
        }
        assert!((l2_norm(&out).unwrap() - l2_norm(&f).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn apply_jump_zero_mark_identity_and_mass() {
        let g = grid();
        let noise = symmetric_noise();
        let f = ComplexField::gaussian_packet(g, 1.3, 0.8, &[1.0], &[3]).unwrap();
        let id = apply_jump(&f, &[0.0], &noise.coefficients);
        assert_eq!(id.values(), f.values());
        let jumped = apply_jump(&f, &[0.5], &noise.coefficients);
        assert!((l2_norm(&jumped).unwrap() - l2_norm(&f).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn constant_coefficients_jump_is_global_rotation() {
        let g = grid();
        let coeffs = NoiseCoefficients::new(vec![CoefficientFamily::Constant { c: 1.0 }]).unwrap();
        let f = ComplexField::gaussian_packet(g, 1.0, 1.0, &[0.0], &[1]).unwrap();
        let z = [0.4];
        let out = apply_jump(&f, &z, &coeffs);
        let phase = Complex64::from_polar(1.0, -0.4);
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b * phase).norm() < 1e-14);
        }
    }

    #[test]
    fn plane_wave_run_matches_dispersion_relation() {
        let g = grid();
        let cfg = SolverConfig::new(g, 0.5, 1.0 / 1024.0, 1.0, 1.0, None, 64).unwrap();
        let u0 = ComplexField::plane_wave(g, Complex64::new(0.8, 0.0), &[3]).unwrap();
        let out = evolve(&u0, &cfg, &SamplePath::empty(0.5)).unwrap();
        let exact = plane_wave_solution(g, 0.8, &[3], 1.0, 1.0, 0.5).unwrap();
        let err = l2_norm(&out.final_state().sub(&exact)).unwrap();
        // The splitting is exact on plane waves; only rounding remains.
        assert!(err < 1e-10, "plane-wave error {err}");
    }

    #[test]
    fn soliton_run_is_second_order() {
        let g = Grid::new(1, 256, 8.0 * std::f64::consts::PI).unwrap();
        let eta = 1.0;
        let u0 = ComplexField::sech_soliton(g, eta, 0.0).unwrap();
        let t = 0.5;
        let mut errs = Vec::new();
        for steps in [64usize, 128, 256] {
            let cfg =
                SolverConfig::new(g, t, t / steps as f64, -1.0, 1.0, None, steps).unwrap();
            let out = evolve(&u0, &cfg, &SamplePath::empty(t)).unwrap();
            let exact = soliton_solution(g, eta, 0.0, t).unwrap();
            errs.push(l2_norm(&out.final_state().sub(&exact)).unwrap());
        }
        let slope = (errs[0] / errs[2]).log2() / 2.0;
        assert!(
            (1.8..2.2).contains(&slope),
            "splitting order slope {slope}, errors {errs:?}"
        );
    }

    #[test]
    fn mass_is_conserved_with_jumps() {
        let g = grid();
        let cfg = SolverConfig::new(
            g,
            1.0,
            1.0 / 1024.0,
            -1.0,
            1.0,
            Some(symmetric_noise()),
            128,
        )
        .unwrap();
        let path = symmetric_noise().measure.sample_path(1.0, 42).unwrap();
        let u0 = ComplexField::gaussian_packet(g, 1.0, 1.0, &[0.0], &[1]).unwrap();
        let out = evolve(&u0, &cfg, &path).unwrap();
        assert!(out.max_relative_mass_drift() < 1e-11);
        assert!(out.reports.iter().any(|r| r.jump_applied) || path.is_empty());
    }

    #[test]
    fn gauge_equivalence_for_constant_coefficients() {
        // With g_j(y) = c_j y the jumps and the drift act as global phases:
        // u(t) = e^{-i c . ell(t)} v(t) with
        // ell(t) = sum_{s_i <= t} z_i - mu t and v the zero-noise run.
        let g = grid();
        let c = 0.9;
        let noise = NoiseModel::new(
            NoiseCoefficients::new(vec![CoefficientFamily::Constant { c }]).unwrap(),
            LevyMeasureSpec::finite_atoms(vec![
                Atom {
                    mark: vec![0.4],
                    rate: 3.0,
                },
                Atom {
                    mark: vec![-0.7],
                    rate: 2.0,
                },
            ])
            .unwrap(),
        )
        .unwrap();
        let mu = noise.measure.first_moment()[0];
        let horizon = 0.25;
        let dt = 1.0 / 512.0;
        let cfg_noise =
            SolverConfig::new(g, horizon, dt, -1.0, 1.0, Some(noise.clone()), 8).unwrap();
        // Reference run: same measure (hence the same jump-cut schedule) but
        // zero coefficients, so jumps and drift act as the identity. This
        // isolates the gauge phase from the O(dt^3) schedule-subdivision
        // effect, which the coarser acceptance-level comparison absorbs.
        let noise_ref = NoiseModel::new(
            NoiseCoefficients::new(vec![CoefficientFamily::Constant { c: 0.0 }]).unwrap(),
            noise.measure.clone(),
        )
        .unwrap();
        let cfg_ref = SolverConfig::new(g, horizon, dt, -1.0, 1.0, Some(noise_ref), 8).unwrap();
        let path = (0..32)
            .map(|seed| noise.measure.sample_path(horizon, seed).unwrap())
            .find(|p| p.len() >= 2)
            .expect("some seed yields two events");

        let u0 = ComplexField::sech_soliton(g, 1.0, 0.0).unwrap();
        let noisy = evolve(&u0, &cfg_noise, &path).unwrap();
        let free = evolve(&u0, &cfg_ref, &path).unwrap();
        assert_eq!(noisy.trajectory.len(), free.trajectory.len());

        let mut worst: f64 = 0.0;
        let mut cum_marks = 0.0;
        let mut next_event = 0usize;
        for i in 0..free.trajectory.len() {
            let t = free.trajectory.times()[i];
            if noisy.trajectory.kind(i) == SnapshotKind::PostJump {
                cum_marks += path.events()[next_event].mark[0];
                next_event += 1;
            }
            let ell = cum_marks - mu * t;
            let modulated = free
                .trajectory
                .field(i)
                .scale(Complex64::from_polar(1.0, -c * ell));
            let diff = l2_norm(&noisy.trajectory.field(i).sub(&modulated)).unwrap();
            worst = worst.max(diff);
        }
        assert_eq!(next_event, path.len());
        assert!(worst < 1e-11, "gauge discrepancy {worst}");
    }

    #[test]
    fn truncation_is_inert_when_radius_dominates() {
        let g = grid();
        let noise = symmetric_noise();
        let path = noise.measure.sample_path(0.25, 5).unwrap();
        let cfg = base_config(Some(noise));
        let cfg_trunc = cfg.clone().with_truncation(1e6).unwrap();
        let u0 = ComplexField::gaussian_packet(g, 1.0, 1.0, &[0.0], &[1]).unwrap();
        let plain = evolve(&u0, &cfg, &path).unwrap();
        let truncated = evolve_truncated(&u0, &cfg_trunc, &path).unwrap();
        assert_eq!(plain.trajectory.len(), truncated.trajectory.len());
        for i in 0..plain.trajectory.len() {
            assert_eq!(
                plain.trajectory.field(i).values(),
                truncated.trajectory.field(i).values(),
                "snapshot {i} differs"
            );
        }
    }

    #[test]
    fn truncation_switches_nonlinearity_off_for_large_data() {
        // Initial mass far above 2R: theta = 0 from the start, so the run
        // must match a lambda = 0 run exactly.
        let g = grid();
        let noise = symmetric_noise();
        let path = noise.measure.sample_path(0.25, 9).unwrap();
        let cfg0 =
            SolverConfig::new(g, 0.25, 1.0 / 512.0, 0.0, 1.0, Some(noise.clone()), 16).unwrap();
        let cfg_trunc = base_config(Some(noise)).with_truncation(1.0).unwrap();
        let u0 = ComplexField::gaussian_packet(g, 10.0, 1.0, &[0.0], &[1]).unwrap();
        assert!(l2_norm(&u0).unwrap() > 2.0);
        let linear = evolve(&u0, &cfg0, &path).unwrap();
        let truncated = evolve_truncated(&u0, &cfg_trunc, &path).unwrap();
        for i in 0..linear.trajectory.len() {
            assert_eq!(
                linear.trajectory.field(i).values(),
                truncated.trajectory.field(i).values()
            );
        }
        // Mass is conserved by the truncated run as well.
        assert!(truncated.max_relative_mass_drift() < 1e-11);
    }

    #[test]
    fn cutoff_theta_shape_and_lipschitz() {
        assert_eq!(cutoff_theta(0.5, 1.0).unwrap(), 1.0);
        assert_eq!(cutoff_theta(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(cutoff_theta(2.0, 1.0).unwrap(), 0.0);
        assert_eq!(cutoff_theta(5.0, 1.0).unwrap(), 0.0);
        assert!(cutoff_theta(-0.1, 1.0).is_err());
        assert!(cutoff_theta(1.0, 0.5).is_err());

        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100_000 {
            let radius = 1.0 + 9.0 * rng.random::<f64>();
            let x = 4.0 * radius * rng.random::<f64>();
            let y = 4.0 * radius * rng.random::<f64>();
            let dx = (cutoff_theta(x, radius).unwrap() - cutoff_theta(y, radius).unwrap()).abs();
            assert!(dx <= cutoff_theta_lipschitz(radius) * (x - y).abs() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn exit_time_detector() {
        let g = grid();
        let noise = symmetric_noise();
        let path = noise.measure.sample_path(0.25, 5).unwrap();
        let cfg = base_config(Some(noise));
        let u0 = ComplexField::gaussian_packet(g, 1.0, 1.0, &[0.0], &[1]).unwrap();
        let out = evolve(&u0, &cfg, &path).unwrap();
        let pair = cfg.pair();
        let final_y = out.reports.last().unwrap().y_norm;

        // Threshold above the final Y-norm: never exceeded.
        assert_eq!(
            y_exit_time(&out.trajectory, &pair, final_y * 2.0).unwrap(),
            None
        );
        // Threshold below the initial mass: exceeded at time zero.
        let m0 = out.reports[0].mass;
        assert_eq!(
            y_exit_time(&out.trajectory, &pair, m0 * 0.5).unwrap(),
            Some(0.0)
        );
        // Exit time is monotone in the threshold.
        let mut last = Some(0.0);
        for k in [m0 * 0.9, m0 * 1.01, final_y * 0.99, final_y * 2.0] {
            let e = y_exit_time(&out.trajectory, &pair, k).unwrap();
            match (last, e) {
                (Some(a), Some(b)) => assert!(b >= a),
                (None, Some(_)) => panic!("exit time reappeared after None"),
                _ => {}
            }
            last = e;
        }
        assert!(y_exit_time(&out.trajectory, &pair, 0.0).is_err());
    }

    #[test]
    fn restart_reproduces_single_run_bitwise() {
        // Dyadic dt and tick-aligned event times make the restarted
        // schedule identical in floating point, not merely close.
        let g = grid();
        let noise = symmetric_noise();
        let horizon = 1.0;
        let dt = 1.0 / 1024.0;
        let cfg = SolverConfig::new(g, horizon, dt, -1.0, 1.0, Some(noise.clone()), 64).unwrap();
        let path = noise.measure.sample_path(horizon, 21).unwrap();
        assert!(!path.is_empty());
        let u0 = ComplexField::gaussian_packet(g, 1.0, 1.0, &[0.0], &[1]).unwrap();
        let full = evolve(&u0, &cfg, &path).unwrap();

        let t0 = 0.5;
        let idx0 = full.trajectory.index_at(t0).unwrap();
        assert_eq!(full.trajectory.times()[idx0], t0);
        let state0 = full.trajectory.field(idx0).clone();

        let cfg_tail = SolverConfig::new(g, horizon - t0, dt, -1.0, 1.0, Some(noise), 64).unwrap();
        let tail_path = path.remainder_after(t0);
        let tail = evolve(&state0, &cfg_tail, &tail_path).unwrap();

        // Every tail snapshot must coincide bitwise with the corresponding
        // full-run snapshot at t0 + t.
        let offset = full
            .trajectory
            .times()
            .iter()
            .position(|&t| t == t0)
            .unwrap();
        for i in 0..tail.trajectory.len() {
            let t_full = full.trajectory.times()[offset + i];
            let t_tail = tail.trajectory.times()[i];
            assert!(
                (t_full - (t0 + t_tail)).abs() < 1e-12,
                "time misalignment {t_full} vs {}",
                t0 + t_tail
            );
            let a = full.trajectory.field(offset + i).values();
            let b = tail.trajectory.field(i).values();
            for (x, y) in a.iter().zip(b) {
                assert!(
                    x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits(),
                    "restart not bitwise at snapshot {i}"
                );
            }
        }
    }

    #[test]
    fn two_dimensional_run_conserves_mass() {
        let g = Grid::new(2, 32, 2.0 * std::f64::consts::PI).unwrap();
        // n = 2 forces sigma < 1; r = 2 sigma + 2 = 3 gives p = 6.
        let noise = symmetric_noise();
        let cfg = SolverConfig::new(g, 0.25, 1.0 / 256.0, -1.0, 0.5, Some(noise.clone()), 16)
            .unwrap();
        assert!((cfg.pair().r() - 3.0).abs() < 1e-15);
        assert!((cfg.pair().p() - 6.0).abs() < 1e-13);
        let path = noise.measure.sample_path(0.25, 8).unwrap();
        let u0 = ComplexField::gaussian_packet(g, 1.0, 0.8, &[0.0, 0.0], &[1, -1]).unwrap();
        let out = evolve(&u0, &cfg, &path).unwrap();
        assert!(out.max_relative_mass_drift() < 1e-11);
    }

    #[test]
    fn blow_up_is_reported_not_clipped() {
        let g = grid();
        // An absurd lambda overflows the phase argument into NaN within one
        // step; the run must abort with the blow-up error.
        let cfg = SolverConfig::new(g, 0.25, 1.0 / 16.0, 1e308, 1.0, None, 1).unwrap();
        let u0 = ComplexField::gaussian_packet(g, 10.0, 1.0, &[0.0], &[0]).unwrap();
        match evolve(&u0, &cfg, &SamplePath::empty(0.25)) {
            Err(Error::BlowUp(_)) => {}
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn zero_noise_equals_separate_op_composition() {
        // One Strang step assembled from the public single-purpose ops
        // agrees with the solver's fused pass.
        let g = grid();
        let dt = 1.0 / 512.0;
        let cfg = SolverConfig::new(g, dt, dt, -1.0, 1.0, None, 1).unwrap();
        let u0 = ComplexField::gaussian_packet(g, 1.0, 1.0, &[0.0], &[1]).unwrap();
        let out = evolve(&u0, &cfg, &SamplePath::empty(dt)).unwrap();

        let prop = Propagator::new(&g);
        let half = nonlinear_phase_step(&u0, dt / 2.0, -1.0, 1.0);
        let freed = prop.free_step(&half, dt).unwrap();
        let manual = nonlinear_phase_step(&freed, dt / 2.0, -1.0, 1.0);
        let diff = l2_norm(&manual.sub(out.final_state())).unwrap();
        assert!(diff < 1e-13, "manual Strang step differs by {diff}");
    }

    #[test]
    fn trajectory_pair_distance_smoke() {
        let g = grid();
        let cfg = base_config(None);
        let u0 = ComplexField::gaussian_packet(g, 1.0, 1.0, &[0.0], &[1]).unwrap();
        let out1 = evolve(&u0, &cfg, &SamplePath::empty(0.25)).unwrap();
        let out2 = evolve(&u0, &cfg, &SamplePath::empty(0.25)).unwrap();
        let d = y_distance(&out1.trajectory, &out2.trajectory, &cfg.pair()).unwrap();
        assert_eq!(d, 0.0);
    }
}
