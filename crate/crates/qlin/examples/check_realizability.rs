//! Physical realizability of an open optical cavity, and a counterexample.
//!
//! Run with: cargo run --example check_realizability

use nalgebra::DMatrix;
use qlin::realizability::{check_nondemolition, check_plant_pr, extract_hamiltonian_coupling};
use qlin::{make_canonical_theta, NoiseSpec, QuantumLinearSystem};

fn main() -> qlin::Result<()> {
    // Optical cavity: dx = -k/2 x dt - sqrt(k) dw, dy = sqrt(k) x dt + dw.
    let kappa: f64 = 0.1;
    let cavity = QuantumLinearSystem::new(
        DMatrix::identity(2, 2).scale(-kappa / 2.0),
        DMatrix::identity(2, 2).scale(-kappa.sqrt()),
        DMatrix::identity(2, 2).scale(kappa.sqrt()),
        DMatrix::identity(2, 2),
        make_canonical_theta(2)?,
        NoiseSpec::vacuum(2)?,
    )?;

    let report = check_plant_pr(&cavity, 1e-10)?;
    println!("cavity realizable: {}", report.is_realizable);
    println!(
        "dynamics residual max |.|: {:.3e}",
        qlin::model::max_abs(&report.pr_residual_dyn)
    );
    println!(
        "non-demolition residual max |.|: {:.3e}",
        qlin::model::max_abs(&check_nondemolition(&cavity))
    );

    // For realizable canonical systems the Hamiltonian matrix R and coupling
    // Lambda are recovered in closed form.
    let (r, lambda) = extract_hamiltonian_coupling(&cavity)?;
    println!("R = {r:.4}");
    println!("Lambda = {:.4} + i {:.4}", lambda.re, lambda.im);

    // A drifting system with no field coupling cannot be realizable.
    let not_pr = QuantumLinearSystem::new(
        DMatrix::identity(2, 2),
        DMatrix::zeros(2, 2),
        DMatrix::zeros(2, 2),
        DMatrix::identity(2, 2),
        make_canonical_theta(2)?,
        NoiseSpec::vacuum(2)?,
    )?;
    let report = check_plant_pr(&not_pr, 1e-10)?;
    println!("A = I, B = 0 realizable: {}", report.is_realizable);
    Ok(())
}
