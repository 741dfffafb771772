//! Byte-identical restarts from a mid-run snapshot.
//!
//! The restarted noise is the time-shifted remainder of the original path
//! (the same jumps, measured from the restart point). Event times are
//! quantized to a dyadic tick when sampled, so for a dyadic step size the
//! restarted schedule reproduces the original floating-point operations
//! exactly -- the tail of the single run and the restarted run agree bit
//! for bit, not merely to rounding.
//!
//! ```bash
//! cargo run --release -p snls --example restart_consistency
//! ```

use snls::noise::{Atom, CoefficientFamily, LevyMeasureSpec, NoiseCoefficients};
use snls::solver::{evolve, NoiseModel, SolverConfig};
use snls::{ComplexField, Grid};

fn main() -> snls::Result<()> {
    let grid = Grid::new(1, 256, 8.0 * std::f64::consts::PI)?;
    let noise = NoiseModel::new(
        NoiseCoefficients::new(vec![CoefficientFamily::Saturating { a: 1.0 }])?,
        LevyMeasureSpec::finite_atoms(vec![
            Atom { mark: vec![0.5], rate: 2.5 },
            Atom { mark: vec![-0.5], rate: 2.5 },
        ])?,
    )?;
    let horizon = 1.0;
    let dt = 1.0 / 1024.0; // dyadic
    let t0 = 0.5; // restart point on the step grid

    let cfg = SolverConfig::new(grid, horizon, dt, -1.0, 1.0, Some(noise.clone()), 64)?;
    let path = (0..64)
        .map(|s| noise.measure.sample_path(horizon, s))
        .collect::<snls::Result<Vec<_>>>()?
        .into_iter()
        .find(|p| p.len() >= 2)
        .expect("an eventful path");
    println!(
        "full run: T = {horizon}, dt = 1/1024, {} jumps at {:?}",
        path.len(),
        path.events().iter().map(|e| e.time).collect::<Vec<_>>()
    );

    let u0 = ComplexField::gaussian_packet(grid, 1.0, 1.0, &[0.0], &[1])?;
    let full = evolve(&u0, &cfg, &path)?;

    let idx0 = full.trajectory.index_at(t0)?;
    let state0 = full.trajectory.field(idx0).clone();
    let tail_path = path.remainder_after(t0);
    println!(
        "restart at T0 = {t0}: {} remaining jumps, shifted to {:?}",
        tail_path.len(),
        tail_path.events().iter().map(|e| e.time).collect::<Vec<_>>()
    );

    let cfg_tail = SolverConfig::new(grid, horizon - t0, dt, -1.0, 1.0, Some(noise), 64)?;
    let tail = evolve(&state0, &cfg_tail, &tail_path)?;

    let offset = full.trajectory.times().iter().position(|&t| t == t0).unwrap();
    let mut all_bitwise = true;
    for i in 0..tail.trajectory.len() {
        let a = full.trajectory.field(offset + i).values();
        let b = tail.trajectory.field(i).values();
        let bitwise = a
            .iter()
            .zip(b)
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
        all_bitwise &= bitwise;
        println!(
            "  snapshot {} (t = {:.4} / restarted t = {:.4}): bitwise = {}",
            i,
            full.trajectory.times()[offset + i],
            tail.trajectory.times()[i],
            bitwise
        );
    }
    println!(
        "\nrestarted tail reproduces the single run byte for byte: {all_bitwise}"
    );
    Ok(())
}
