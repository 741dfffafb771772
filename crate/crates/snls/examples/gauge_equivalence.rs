//! Linear noise acts as a random global phase.
//!
//! With constant coefficients `g_j(y) = c_j y`, each jump rotates the whole
//! field by `e^{-i c . z}` and the compensator drift by `e^{+i c . mu dt}`,
//! both commuting with the dynamics. The noisy solution therefore equals
//! the zero-noise solution modulated by `e^{-i c . ell(t)}` with
//! `ell(t) = (sum of marks up to t) - mu t`. This example measures that
//! discrepancy against the zero-noise solver error on the same grid.
//!
//! ```bash
//! cargo run --release -p snls --example gauge_equivalence
//! ```

use num_complex::Complex64;
use snls::noise::{Atom, CoefficientFamily, LevyMeasureSpec, NoiseCoefficients, SamplePath};
use snls::norms::l2_norm;
use snls::solver::{evolve, soliton_solution, NoiseModel, SolverConfig};
use snls::{ComplexField, Grid};

fn main() -> snls::Result<()> {
    let grid = Grid::new(1, 512, 8.0 * std::f64::consts::PI)?;
    let horizon = 1.0;
    let dt = 1e-3;
    let c = 0.9;
    let noise = NoiseModel::new(
        NoiseCoefficients::new(vec![CoefficientFamily::Constant { c }])?,
        LevyMeasureSpec::finite_atoms(vec![
            Atom { mark: vec![0.4], rate: 3.0 },
            Atom { mark: vec![-0.7], rate: 2.0 },
        ])?,
    )?;
    let mu = noise.measure.first_moment()[0];
    let path = (0..64)
        .map(|s| noise.measure.sample_path(horizon, s))
        .collect::<snls::Result<Vec<_>>>()?
        .into_iter()
        .find(|p| p.len() >= 3)
        .expect("a path with three events");
    println!("path: {} jumps, drift coefficient mu = {mu}", path.len());

    let u0 = ComplexField::sech_soliton(grid, 1.0, 0.0)?;
    let cfg_noise = SolverConfig::new(grid, horizon, dt, -1.0, 1.0, Some(noise), 100)?;
    let cfg_free = SolverConfig::new(grid, horizon, dt, -1.0, 1.0, None, 100)?;
    let noisy = evolve(&u0, &cfg_noise, &path)?;
    let free = evolve(&u0, &cfg_free, &SamplePath::empty(horizon))?;

    let mut zero_noise_err = 0.0f64;
    let mut discrepancy = 0.0f64;
    for i in 0..free.trajectory.len() {
        let t = free.trajectory.times()[i];
        let exact = soliton_solution(grid, 1.0, 0.0, t)?;
        zero_noise_err = zero_noise_err.max(l2_norm(&free.trajectory.field(i).sub(&exact))?);

        let j = noisy.trajectory.index_at(t)?;
        if noisy.trajectory.times()[j] != t {
            continue;
        }
        let marks: f64 = path
            .events()
            .iter()
            .take_while(|e| e.time <= t)
            .map(|e| e.mark[0])
            .sum();
        let modulated = free
            .trajectory
            .field(i)
            .scale(Complex64::from_polar(1.0, -c * (marks - mu * t)));
        discrepancy = discrepancy.max(l2_norm(&noisy.trajectory.field(j).sub(&modulated))?);
    }

    println!("zero-noise solver error vs soliton closed form : {zero_noise_err:.3e}");
    println!("noisy run vs phase-modulated zero-noise run    : {discrepancy:.3e}");
    println!(
        "gauge discrepancy / solver error                = {:.3}  (budget: 10)",
        discrepancy / zero_noise_err
    );
    Ok(())
}
