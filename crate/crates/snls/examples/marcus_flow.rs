//! The Marcus jump map: closed form, oracle, and increment bounds.
//!
//! A jump with mark `z` acts through the time-1 flow of
//! `dPhi/ds = -i (z . g~(|Phi|^2)) Phi`. The flow preserves `|Phi|`, which
//! collapses it to the rotation `y e^{-i z . g~(|y|^2)}`; this example
//! cross-validates that closed form against a fourth-order ODE integration
//! and certifies the growth/Lipschitz bounds of the jump increment `G` and
//! its compensated remainder `H` on randomized inputs.
//!
//! ```bash
//! cargo run --release -p snls --example marcus_flow
//! ```

use num_complex::Complex64;
use snls::marcus::{
    flow_bound_constants, jump_remainder, marcus_jump, marcus_jump_ode, verify_flow_bounds,
};
use snls::noise::{CoefficientFamily, NoiseCoefficients};

fn main() -> snls::Result<()> {
    let coeffs = NoiseCoefficients::new(vec![
        CoefficientFamily::Rational { a: 1.0, b: 1.0 },
        CoefficientFamily::Saturating { a: 0.5 },
    ])?;
    let (l1, l2) = coeffs.lipschitz_constants();
    println!("coefficients: m = {}, L1 = {l1}, L2 = {l2}", coeffs.count());

    // One concrete jump.
    let y = Complex64::new(0.8, -0.3);
    let z = [0.4, -0.2];
    let flow = marcus_jump(y, &z, &coeffs);
    let oracle = marcus_jump_ode(y, &z, &coeffs, 256);
    println!("\njump of y = {y} by mark {z:?}:");
    println!("  closed form : {}", flow.value);
    println!("  RK4 oracle  : {oracle}");
    println!("  gap         : {:.3e}", (flow.value - oracle).norm());
    println!("  |Phi| - |y| : {:.3e}  (modulus conserved)", (flow.value.norm() - y.norm()).abs());
    println!("  rotation    : {:.6} rad", flow.phase);

    // Remainder smallness: |H| = O(|z|^2).
    println!("\ncompensated remainder H(z, 1) for shrinking marks:");
    for scale in [1.0, 0.1, 0.01] {
        let h = jump_remainder(&[0.4 * scale, -0.2 * scale], Complex64::ONE, &coeffs);
        println!("  |z| x {scale:4}: |H| = {:.3e}", h.norm());
    }

    // Randomized certification of the four bounds.
    let constants = flow_bound_constants(&coeffs);
    println!(
        "\nbound constants: G growth {:.4}, G Lipschitz {:.4}, H growth {:.4}, H Lipschitz {:.4}",
        constants.g_growth, constants.g_lipschitz, constants.h_growth, constants.h_lipschitz
    );
    let report = verify_flow_bounds(&coeffs, 200_000, 10.0, 7);
    println!(
        "certification over {} trials: violations {:?}, max observed/bound ratios {:?}",
        report.trials, report.violations, report.max_ratio
    );
    assert!(report.is_clean());
    Ok(())
}
