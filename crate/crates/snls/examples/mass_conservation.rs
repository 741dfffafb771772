//! Pathwise mass conservation under jump noise.
//!
//! Every split sub-step is either unitary in Fourier space or a pointwise
//! modulus-preserving rotation, and each Marcus jump rotates amplitudes
//! without changing their moduli -- so the discrete L2 norm is conserved
//! structurally, focusing or defocusing, noise on or off. This example runs
//! a 64-path ensemble for both signs of the nonlinearity and prints the
//! worst relative drift seen at any snapshot of any path.
//!
//! ```bash
//! cargo run --release -p snls --example mass_conservation
//! ```

use snls::experiment::{run_ensemble, ExperimentSpec, InitialCondition, Observable};
use snls::noise::{Atom, CoefficientFamily, LevyMeasureSpec, NoiseCoefficients};
use snls::solver::{NoiseModel, SolverConfig};
use snls::Grid;

fn main() -> snls::Result<()> {
    let grid = Grid::new(1, 512, 8.0 * std::f64::consts::PI)?;
    let noise = NoiseModel::new(
        NoiseCoefficients::new(vec![CoefficientFamily::Saturating { a: 1.0 }])?,
        LevyMeasureSpec::finite_atoms(vec![
            Atom { mark: vec![0.5], rate: 2.5 },
            Atom { mark: vec![-0.5], rate: 2.5 },
        ])?,
    )?;

    for (label, lambda) in [("focusing", -1.0), ("defocusing", 1.0)] {
        let spec = ExperimentSpec {
            solver: SolverConfig::new(grid, 1.0, 1e-3, lambda, 1.0, Some(noise.clone()), 100)?,
            initial: InitialCondition::Gaussian {
                amplitude: 1.0,
                width: 1.0,
                center: vec![0.0],
                mode: vec![1],
            },
            ensemble_size: 64,
            master_seed: 42,
            observables: vec![Observable::Mass, Observable::YNorm],
            config_hash: "example".into(),
        };
        let summary = run_ensemble(&spec)?;
        let mass = &summary.observables["mass"];
        println!(
            "{label:>10}: 64 paths, terminal mass {:.12} +- {:.3e}, worst drift {:.3e}, failures {}",
            mass.mean,
            mass.variance.sqrt(),
            summary.max_mass_drift(),
            summary.failures,
        );
    }
    println!("\nmass is invariant path by path; the ensemble variance sits at rounding level");
    Ok(())
}
