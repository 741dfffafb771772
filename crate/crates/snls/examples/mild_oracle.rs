//! Consistency between the splitting solver and the mild (Duhamel) form.
//!
//! The mild operator rebuilds a trajectory from its own history:
//! free flow of the data, plus the truncated nonlinear integral, plus the
//! compensated jump sum, plus the compensator remainder. Applied to the
//! split-step solution it should return (approximately) that same solution;
//! the residual is the quadrature error of the mild form and shrinks at
//! first order in dt. The example also cross-checks the two accumulation
//! orders of the compensated jump term against each other.
//!
//! ```bash
//! cargo run --release -p snls --example mild_oracle
//! ```

use num_complex::Complex64;
use snls::mild::{gamma_r, psi1, psi2, psi2_trajectory, psi3};
use snls::noise::{Atom, CoefficientFamily, LevyMeasureSpec, NoiseCoefficients};
use snls::norms::{l2_norm, y_distance};
use snls::solver::{evolve, NoiseModel, SolverConfig};
use snls::{ComplexField, Grid, Propagator};

fn main() -> snls::Result<()> {
    let grid = Grid::new(1, 128, 8.0 * std::f64::consts::PI)?;
    let prop = Propagator::new(&grid);
    let noise = NoiseModel::new(
        NoiseCoefficients::new(vec![CoefficientFamily::Constant { c: 0.9 }])?,
        LevyMeasureSpec::finite_atoms(vec![
            Atom { mark: vec![0.5], rate: 4.0 },
            Atom { mark: vec![-0.5], rate: 4.0 },
        ])?,
    )?;
    let horizon = 0.25;
    let radius = 50.0;
    let u0 = ComplexField::gaussian_packet(grid, 1.0, 1.0, &[0.0], &[1])?;
    let path = (0..64)
        .map(|s| noise.measure.sample_path(horizon, s))
        .collect::<snls::Result<Vec<_>>>()?
        .into_iter()
        .find(|p| p.len() >= 2)
        .expect("an eventful path");
    println!("horizon {horizon}, {} jumps", path.len());

    // Term-by-term evaluation at the final time.
    let cfg = SolverConfig::new(grid, horizon, horizon / 64.0, -1.0, 1.0, Some(noise.clone()), 1)?;
    let out = evolve(&u0, &cfg, &path)?;
    let u = &out.trajectory;
    let t = horizon;
    let free = prop.free_step(&u0, t)?;
    let p1 = psi1(&prop, u, &cfg, radius, t)?;
    let p2 = psi2(&prop, u, &path, &cfg, t)?;
    let p3 = psi3(&prop, u, &cfg, t)?;
    println!("\nterm sizes at t = {t} (L2 norms):");
    println!("  free flow      : {:.4}", l2_norm(&free)?);
    println!("  nonlinear term : {:.4e}", l2_norm(&p1)?);
    println!("  jump term      : {:.4e}", l2_norm(&p2)?);
    println!("  remainder term : {:.4e}", l2_norm(&p3)?);
    let mut mild = free;
    mild.add_assign_scaled(&p1, Complex64::ONE);
    mild.add_assign_scaled(&p2, Complex64::ONE);
    mild.add_assign_scaled(&p3, Complex64::ONE);
    let residual = l2_norm(&mild.sub(out.final_state()))?;
    println!("  | mild - split-step | at t = {t}: {residual:.4e}");

    // Event-ordered vs time-ordered accumulation of the jump term.
    let swept = psi2_trajectory(&prop, u, &path, &cfg)?;
    let idx = u.times().iter().position(|&s| s == t).unwrap();
    let gap = l2_norm(&swept.field(idx).sub(&p2))?;
    println!("  two jump-term accumulation orders agree to {gap:.3e}");

    // Residual of the full operator under dt refinement.
    println!("\nY-norm residual || Gamma(u) - u || under dt refinement:");
    let mut previous: Option<f64> = None;
    for steps in [32usize, 64, 128, 256] {
        let cfg = SolverConfig::new(
            grid,
            horizon,
            horizon / steps as f64,
            -1.0,
            1.0,
            Some(noise.clone()),
            1,
        )?;
        let out = evolve(&u0, &cfg, &path)?;
        let gamma = gamma_r(&prop, &out.trajectory, &u0, &path, &cfg, radius)?;
        let res = y_distance(&gamma, &out.trajectory, &cfg.pair())?;
        match previous {
            Some(prev) => println!(
                "  {steps:4} steps: residual {res:9.3e}   observed order = {:.3}",
                (prev / res).log2()
            ),
            None => println!("  {steps:4} steps: residual {res:9.3e}"),
        }
        previous = Some(res);
    }
    Ok(())
}
