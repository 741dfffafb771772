//! The free Schrodinger group `S_t = e^{i t Laplacian}`, exact on Fourier
//! modes of the periodic grid, plus the inhomogeneous Duhamel integral
//! `t -> integral_0^t S_{t-s} f(s) ds`.
//!
//! A mode `e^{ikx}` evolves as `e^{i(kx - k^2 t)}`, so propagation multiplies
//! each Fourier coefficient by the unit-modulus factor `e^{-i |k|^2 t}`: the
//! group is an exact isometry of the discrete `L^2` norm up to FFT rounding.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::norms::{l2_norm, mixed_norm, AdmissiblePair, SnapshotKind, Trajectory};

/// Quadrature rule for the Duhamel integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// First order; matches the cadlag convention used by jump dynamics.
    LeftEndpoint,
    /// Second order for smooth forcing; averages node values at panel
    /// midpoints.
    Midpoint,
}

/// Spectral propagator bound to one grid. Plans are immutable after
/// construction; methods take `&self` and use per-call scratch so one
/// instance can be shared across worker threads.
pub struct Propagator {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    ksq: Vec<f64>,
    inv_len: f64,
}

impl Propagator {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.points_per_axis();
        Propagator {
            grid: *grid,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            ksq: grid.wavenumber_sq_table(),
            inv_len: 1.0 / grid.len() as f64,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn fft_axis_pass(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let mut scratch = vec![Complex64::ZERO; plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
    }

    fn transform(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let n = self.grid.points_per_axis();
        match self.grid.dimension() {
            1 => self.fft_axis_pass(plan, buf),
            _ => {
                // Rows, transpose, rows, transpose back.
                self.fft_axis_pass(plan, buf);
                transpose_square(buf, n);
                self.fft_axis_pass(plan, buf);
                transpose_square(buf, n);
            }
        }
    }

    /// In-place free propagation of raw values by time `t`.
    pub(crate) fn free_step_values(&self, values: &mut [Complex64], t: f64) {
        if t == 0.0 {
            return;
        }
        self.transform(&self.forward, values);
        for (v, &k2) in values.iter_mut().zip(&self.ksq) {
            *v *= Complex64::from_polar(1.0, -k2 * t);
        }
        self.transform(&self.inverse, values);
        for v in values.iter_mut() {
            *v *= self.inv_len;
        }
    }

    /// `S_t f`: forward transform, multiply each mode by `e^{-i|k|^2 t}`,
    /// inverse transform. `t = 0` is the identity, exactly.
    pub fn free_step(&self, f: &ComplexField, t: f64) -> Result<ComplexField> {
        if f.grid() != &self.grid {
            return Err(Error::invalid_config("field grid does not match propagator"));
        }
        if !f.is_finite() {
            return Err(Error::CorruptField);
        }
        let mut out = f.clone();
        self.free_step_values(out.values_mut(), t);
        Ok(out)
    }

    /// Duhamel integral `integral_0^t S_{t-s} f(s) ds` by direct summation
    /// over the forcing grid with the left-endpoint rule.
    pub fn duhamel(&self, forcing: &Trajectory, t: f64) -> Result<ComplexField> {
        self.duhamel_with_rule(forcing, t, QuadratureRule::LeftEndpoint)
    }

    pub fn duhamel_with_rule(
        &self,
        forcing: &Trajectory,
        t: f64,
        rule: QuadratureRule,
    ) -> Result<ComplexField> {
        if forcing.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        let times = forcing.times();
        if t < times[0] || t > *times.last().unwrap() {
            return Err(Error::TimeOutOfRange(t));
        }
        let mut acc = ComplexField::zeros(self.grid);
        for i in 0..forcing.len() {
            let s = times[i];
            if s >= t {
                break;
            }
            let s_next = if i + 1 < forcing.len() { times[i + 1].min(t) } else { t };
            let w = s_next - s;
            if w <= 0.0 {
                continue;
            }
            let term = match rule {
                QuadratureRule::LeftEndpoint => self.free_step(forcing.field(i), t - s)?,
                QuadratureRule::Midpoint => {
                    let mid = 0.5 * (s + s_next);
                    let avg = if i + 1 < forcing.len() && times[i + 1] <= t {
                        forcing.field(i).add(forcing.field(i + 1)).scale(0.5.into())
                    } else {
                        forcing.field(i).clone()
                    };
                    self.free_step(&avg, t - mid)?
                }
            };
            acc.add_assign_scaled(&term, Complex64::new(w, 0.0));
        }
        Ok(acc)
    }

    /// Trajectory of `S_t phi` on a uniform grid of `[0, t_max]`, stepping
    /// incrementally by `dt` (one transform pair per node).
    pub fn free_trajectory(
        &self,
        phi: &ComplexField,
        pair: AdmissiblePair,
        t_max: f64,
        dt: f64,
    ) -> Result<Trajectory> {
        if dt <= 0.0 || t_max <= 0.0 {
            return Err(Error::invalid_config("need positive dt and horizon"));
        }
        let steps = (t_max / dt).round().max(1.0) as usize;
        let mut traj = Trajectory::new(self.grid, pair);
        let mut state = phi.clone();
        traj.push(0.0, SnapshotKind::Interior, state.clone())?;
        for k in 1..=steps {
            self.free_step_values(state.values_mut(), dt);
            let t = if k == steps { t_max } else { k as f64 * dt };
            traj.push(t, SnapshotKind::Interior, state.clone())?;
        }
        Ok(traj)
    }

    /// Homogeneous estimate probe: the ratio
    /// `||S_. phi||_{L^p(0,T;L^r)} / ||phi||_{L^2}`. The constant in the
    /// underlying inequality is not known explicitly, so only the ratio is
    /// reported; it is invariant under scaling of `phi`.
    pub fn strichartz_homogeneous_probe(
        &self,
        phi: &ComplexField,
        pair: AdmissiblePair,
        t_max: f64,
        dt: f64,
    ) -> Result<f64> {
        let denom = l2_norm(phi)?;
        if denom == 0.0 {
            return Err(Error::DegenerateProbe);
        }
        let traj = self.free_trajectory(phi, pair, t_max, dt)?;
        Ok(mixed_norm(&traj, &pair)? / denom)
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}
