//! Fixed-point iteration of the mild operator on a small horizon.
//!
//! The iteration `u^{k+1} = S_t u0 + Psi1(u^k) + Psi2(u^k) + Psi3(u^k)`
//! contracts once the horizon is small enough; this example prints the
//! successive Y-distances, shows the contraction ratio improving as the
//! horizon halves, and compares the fixed point against the split-step
//! solution of the same path (they converge to each other at first order
//! in dt, the accuracy of the mild quadrature).
//!
//! ```bash
//! cargo run --release -p snls --example picard_contraction
//! ```

use snls::mild::picard;
use snls::noise::{Atom, CoefficientFamily, LevyMeasureSpec, NoiseCoefficients};
use snls::norms::y_distance;
use snls::solver::{evolve, NoiseModel, SolverConfig};
use snls::{ComplexField, Grid, Propagator};

fn main() -> snls::Result<()> {
    let grid = Grid::new(1, 128, 8.0 * std::f64::consts::PI)?;
    let prop = Propagator::new(&grid);
    let noise = NoiseModel::new(
        NoiseCoefficients::new(vec![CoefficientFamily::Saturating { a: 1.0 }])?,
        LevyMeasureSpec::finite_atoms(vec![
            Atom { mark: vec![0.5], rate: 20.0 },
            Atom { mark: vec![-0.5], rate: 20.0 },
        ])?,
    )?;
    let u0 = ComplexField::gaussian_packet(grid, 1.0, 1.0, &[0.0], &[1])?;
    let radius = 10.0;

    // Iteration log on the small instance T0 = 0.05.
    let t0 = 0.05;
    let cfg = SolverConfig::new(grid, t0, t0 / 50.0, 1.0, 1.0, Some(noise.clone()), 1)?;
    let path = noise.measure.sample_path(t0, 3)?;
    println!("T0 = {t0}, {} jumps, R = {radius}", path.len());
    let run = picard(&prop, &u0, &path, &cfg, radius, 14)?;
    println!("iter   y-distance     ratio");
    for (i, it) in run.iterates.iter().enumerate() {
        match it.ratio {
            Some(r) => println!("{:4}   {:10.3e}   {:.4}", i + 1, it.distance, r),
            None => println!("{:4}   {:10.3e}", i + 1, it.distance),
        }
    }

    // Contraction improves as the horizon halves.
    println!("\nworst contraction ratio under horizon halving:");
    for (t0, steps) in [(0.05, 50usize), (0.025, 25), (0.0125, 13)] {
        let cfg = SolverConfig::new(grid, t0, t0 / steps as f64, 1.0, 1.0, Some(noise.clone()), 1)?;
        let path = noise.measure.sample_path(t0, 3)?;
        let run = picard(&prop, &u0, &path, &cfg, radius, 14)?;
        let worst = run.ratios().into_iter().fold(0.0f64, f64::max);
        println!("  T0 = {t0:7}: worst ratio {worst:.4}");
    }

    // Fixed point vs split-step solution under dt refinement.
    println!("\nfixed point vs split-step solution (same path):");
    let t0 = 0.05;
    let path = noise.measure.sample_path(t0, 5)?;
    let mut previous: Option<f64> = None;
    for steps in [25usize, 50, 100, 200] {
        let cfg = SolverConfig::new(grid, t0, t0 / steps as f64, 1.0, 1.0, Some(noise.clone()), 1)?;
        let run = picard(&prop, &u0, &path, &cfg, radius, 25)?;
        let solved = evolve(&u0, &cfg, &path)?;
        let gap = y_distance(run.final_trajectory(), &solved.trajectory, &cfg.pair())?;
        match previous {
            Some(prev) => println!(
                "  dt = T0/{steps:<4} gap = {gap:9.3e}   observed order = {:.3}",
                (prev / gap).log2()
            ),
            None => println!("  dt = T0/{steps:<4} gap = {gap:9.3e}"),
        }
        previous = Some(gap);
    }
    Ok(())
}
