//! Lebesgue norms, admissible exponent pairs, and time-indexed trajectories
//! with mixed space-time norm bookkeeping.
//!
//! The contraction metric used throughout is the Y-norm
//!
//! ```text
//! ||u||_Y = sup_t ||u(t)||_{L^2}  +  ( integral ||u(t)||_{L^r}^p dt )^{1/p}
//! ```
//!
//! over an admissible pair `(p, r)` satisfying `2/p = n (1/2 - 1/r)`. Time
//! integrals are left-endpoint quadratures: trajectories of jump dynamics are
//! cadlag, and the value just after the last event is the correct integrand.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};

/// Exponent pair `(p, r)` with `2/p = n (1/2 - 1/r)`; `p = inf` iff `r = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissiblePair {
    p: f64,
    r: f64,
    dimension: usize,
}

impl AdmissiblePair {
    /// Solves `p` from the scaling relation for the given spatial dimension.
    /// The admissible range is `r in [2, inf]` for n = 1 and `r in [2, inf)`
    /// for n = 2.
    pub fn new(dimension: usize, r: f64) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::invalid_config(format!(
                "admissible pairs are defined here for n in {{1, 2}}, got {dimension}"
            )));
        }
        let bad = r < 2.0
            || r.is_nan()
            || (dimension == 2 && r.is_infinite())
            || (dimension == 1 && r.is_infinite() && false);
        if bad {
            return Err(Error::NotAdmissible { n: dimension, r });
        }
        let p = if r == 2.0 {
            f64::INFINITY
        } else if r.is_infinite() {
            // n = 1 endpoint: 2/p = 1/2.
            4.0
        } else {
            2.0 / (dimension as f64 * (0.5 - 1.0 / r))
        };
        Ok(AdmissiblePair { p, r, dimension })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Residual of the scaling relation; zero to machine precision by
    /// construction.
    pub fn scaling_defect(&self) -> f64 {
        let lhs = if self.p.is_infinite() { 0.0 } else { 2.0 / self.p };
        let rhs = self.dimension as f64 * (0.5 - if self.r.is_infinite() { 0.0 } else { 1.0 / self.r });
        (lhs - rhs).abs()
    }

    /// Conjugate exponents `(p', r')`.
    pub fn conjugate(&self) -> (f64, f64) {
        (conjugate_exponent(self.p), conjugate_exponent(self.r))
    }
}

pub fn conjugate_exponent(e: f64) -> f64 {
    if e.is_infinite() {
        1.0
    } else if e == 1.0 {
        f64::INFINITY
    } else {
        e / (e - 1.0)
    }
}

/// Discrete `L^2` norm `sqrt(h^n sum |f|^2)`.
pub fn l2_norm(f: &ComplexField) -> Result<f64> {
    if !f.is_finite() {
        return Err(Error::CorruptField);
    }
    Ok(l2_norm_unchecked(f))
}

pub(crate) fn l2_norm_unchecked(f: &ComplexField) -> f64 {
    let sum: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
    (f.grid().cell_volume() * sum).sqrt()
}

/// Discrete `L^r` norm `(h^n sum |f|^r)^{1/r}`; `r = inf` gives the max
/// modulus.
pub fn lr_norm(f: &ComplexField, r: f64) -> Result<f64> {
    if r < 1.0 || r.is_nan() {
        return Err(Error::InvalidExponent(r));
    }
    if !f.is_finite() {
        return Err(Error::CorruptField);
    }
    Ok(lr_norm_unchecked(f, r))
}

pub(crate) fn lr_norm_unchecked(f: &ComplexField, r: f64) -> f64 {
    if r.is_infinite() {
        return f.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    if r == 2.0 {
        return l2_norm_unchecked(f);
    }
    let half_r = 0.5 * r;
    let sum: f64 = if half_r == 2.0 {
        f.values()
            .iter()
            .map(|v| {
                let t = v.norm_sqr();
                t * t
            })
            .sum()
    } else {
        f.values().iter().map(|v| v.norm_sqr().powf(half_r)).sum()
    };
    (f.grid().cell_volume() * sum).powf(1.0 / r)
}

/// Role of a stored snapshot relative to jump events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SnapshotKind {
    /// Ordinary save point between events.
    Interior,
    /// Left limit `u(s-)` recorded just before a jump at time `s`.
    PreJump,
    /// Value `u(s)` just after the jump was applied.
    PostJump,
}

/// Time-indexed sequence of fields with running Y-norm bookkeeping.
///
/// Entry times are non-decreasing; a `PreJump`/`PostJump` pair shares its
/// time and carries zero quadrature weight between its two entries, which is
/// exactly the cadlag convention for pathwise integrals.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Grid,
    pair: AdmissiblePair,
    times: Vec<f64>,
    kinds: Vec<SnapshotKind>,
    fields: Vec<ComplexField>,
    /// Running sup of the L2 norm up to each entry.
    sup_l2: Vec<f64>,
    /// Running left-endpoint integral of `||u||_r^p ds` up to each entry time.
    lr_integral: Vec<f64>,
}

impl Trajectory {
    pub fn new(grid: Grid, pair: AdmissiblePair) -> Self {
        Trajectory {
            grid,
            pair,
            times: Vec::new(),
            kinds: Vec::new(),
            fields: Vec::new(),
            sup_l2: Vec::new(),
            lr_integral: Vec::new(),
        }
    }

    /// Appends a snapshot, updating the running accumulators for the
    /// trajectory's own pair. Times must be non-decreasing and equal times
    /// are only allowed across jump entries.
    pub fn push(&mut self, time: f64, kind: SnapshotKind, field: ComplexField) -> Result<()> {
        if field.grid() != &self.grid {
            return Err(Error::invalid_config("snapshot grid mismatch"));
        }
        if !field.is_finite() {
            return Err(Error::CorruptField);
        }
        if let Some(&last) = self.times.last() {
            if time < last {
                return Err(Error::invalid_config(format!(
                    "snapshot times must be non-decreasing ({time} after {last})"
                )));
            }
        }
        let l2 = l2_norm_unchecked(&field);
        let (sup, int) = match self.times.last() {
            None => (l2, 0.0),
            Some(&last) => {
                let dt = time - last;
                let prev = self.fields.last().unwrap();
                let add = if dt > 0.0 && self.pair.p().is_finite() {
                    lr_norm_unchecked(prev, self.pair.r()).powf(self.pair.p()) * dt
                } else {
                    0.0
                };
                (
                    self.sup_l2.last().unwrap().max(l2),
                    self.lr_integral.last().unwrap() + add,
                )
            }
        };
        self.times.push(time);
        self.kinds.push(kind);
        self.fields.push(field);
        self.sup_l2.push(sup);
        self.lr_integral.push(int);
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn pair(&self) -> AdmissiblePair {
        self.pair
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn kind(&self, i: usize) -> SnapshotKind {
        self.kinds[i]
    }

    pub fn field(&self, i: usize) -> &ComplexField {
        &self.fields[i]
    }

    pub fn last_field(&self) -> Option<&ComplexField> {
        self.fields.last()
    }

    /// Running `sup ||u||_{L^2}` over all stored snapshots.
    pub fn running_sup_l2(&self) -> f64 {
        self.sup_l2.last().copied().unwrap_or(0.0)
    }

    /// Running accumulator `integral ||u(s)||_r^p ds` over the stored grid.
    pub fn running_lp_lr_integral(&self) -> f64 {
        self.lr_integral.last().copied().unwrap_or(0.0)
    }

    /// Y-norm restricted to the first `i + 1` entries.
    pub fn y_norm_at(&self, i: usize) -> f64 {
        let int = self.lr_integral[i];
        let mixed = if self.pair.p().is_finite() {
            int.powf(1.0 / self.pair.p())
        } else {
            // (inf, 2): both terms are sup-L2.
            self.sup_l2[i]
        };
        self.sup_l2[i] + mixed
    }

    /// Index of the left limit `u(t-)`: the `PreJump` entry at `t` if one
    /// exists, an `Interior` entry at `t` (where the trajectory is
    /// continuous, so `u(t-) = u(t)`), else the last entry before `t`.
    pub fn left_limit_index(&self, t: f64) -> Result<usize> {
        let mut before: Option<usize> = None;
        let mut at_pre: Option<usize> = None;
        let mut at_interior: Option<usize> = None;
        for (i, &ti) in self.times.iter().enumerate() {
            if ti < t {
                before = Some(i);
            } else if ti == t {
                match self.kinds[i] {
                    SnapshotKind::PreJump => at_pre = Some(i),
                    SnapshotKind::Interior => at_interior = Some(i),
                    SnapshotKind::PostJump => {}
                }
            } else {
                break;
            }
        }
        at_pre
            .or(at_interior)
            .or(before)
            .ok_or(Error::TimeOutOfRange(t))
    }

    /// Index of the cadlag value `u(t)`: the last entry with time <= `t`.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        let mut best: Option<usize> = None;
        for (i, &ti) in self.times.iter().enumerate() {
            if ti <= t {
                best = Some(i);
            } else {
                break;
            }
        }
        best.ok_or(Error::TimeOutOfRange(t))
    }
}

/// Mixed norm `( sum_k ||u(t_k)||_r^p dt_k )^{1/p}` by left-endpoint
/// quadrature over the stored snapshots; `p = inf` gives the sup of the
/// `L^r` norms.
pub fn mixed_norm(traj: &Trajectory, pair: &AdmissiblePair) -> Result<f64> {
    mixed_norm_raw(traj, pair.p(), pair.r())
}

/// Same quadrature for arbitrary exponents `p, r >= 1` (used with conjugate
/// pairs, which are not admissible themselves).
pub fn mixed_norm_raw(traj: &Trajectory, p: f64, r: f64) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if r < 1.0 || r.is_nan() || p < 1.0 || p.is_nan() {
        return Err(Error::InvalidExponent(if r < 1.0 { r } else { p }));
    }
    if p.is_infinite() {
        let mut sup: f64 = 0.0;
        for i in 0..traj.len() {
            sup = sup.max(lr_norm(traj.field(i), r)?);
        }
        return Ok(sup);
    }
    let mut acc = 0.0;
    for i in 0..traj.len().saturating_sub(1) {
        let dt = traj.times()[i + 1] - traj.times()[i];
        if dt > 0.0 {
            acc += lr_norm(traj.field(i), r)?.powf(p) * dt;
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// `sup_t ||u(t)||_{L^2} + mixed_norm(u, pair)`; non-decreasing under
/// trajectory extension.
pub fn y_norm(traj: &Trajectory, pair: &AdmissiblePair) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut sup: f64 = 0.0;
    for i in 0..traj.len() {
        sup = sup.max(l2_norm(traj.field(i))?);
    }
    Ok(sup + mixed_norm(traj, pair)?)
}

/// Y-norm of the difference of two trajectories stored on the same time grid.
pub fn y_distance(a: &Trajectory, b: &Trajectory, pair: &AdmissiblePair) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid_config(
            "trajectories live on different time grids".to_string(),
        ));
    }
    if a.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut sup: f64 = 0.0;
    let mut acc = 0.0;
    let finite_p = pair.p().is_finite();
    for i in 0..a.len() {
        let diff = a.field(i).sub(b.field(i));
        sup = sup.max(l2_norm(&diff)?);
        if finite_p && i + 1 < a.len() {
            let dt = a.times()[i + 1] - a.times()[i];
            if dt > 0.0 {
                acc += lr_norm(&diff, pair.r())?.powf(pair.p()) * dt;
            }
        }
    }
    let mixed = if finite_p { acc.powf(1.0 / pair.p()) } else { sup };
    Ok(sup + mixed)
}

/// Convenience: free trajectory from a closure `t -> field` on a uniform grid
/// of `steps + 1` nodes over `[0, t_max]`.
pub fn trajectory_from_fn(
    grid: Grid,
    pair: AdmissiblePair,
    t_max: f64,
    steps: usize,
    mut f: impl FnMut(f64) -> ComplexField,
) -> Result<Trajectory> {
    let mut traj = Trajectory::new(grid, pair);
    for k in 0..=steps {
        let t = if k == steps {
            t_max
        } else {
            t_max * k as f64 / steps as f64
        };
        traj.push(t, SnapshotKind::Interior, f(t))?;
    }
    Ok(traj)
}

#[allow(unused)]
pub(crate) fn complex_assert_close(a: Complex64, b: Complex64, tol: f64) {
    assert!(
        (a - b).norm() <= tol,
        "expected {b}, got {a} (|diff| = {})",
        (a - b).norm()
    );
}
