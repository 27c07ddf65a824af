//! The classical Kalman-Bucy filter as a special case: zero commutation
//! matrix, identity Ito table, same Riccati engine.
//!
//! Run with: cargo run --example classical_kalman

use nalgebra::DMatrix;
use qlin::{classical_kalman_reduce, SolverConfig};

fn main() -> qlin::Result<()> {
    // Damped oscillator driven by process noise (channel 2), observed in
    // position through independent measurement noise (channel 1).
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.4]);
    let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.0, 0.5]);
    let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let d = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);

    let cfg = SolverConfig {
        horizon: 300.0,
        ..Default::default()
    };
    let syn = classical_kalman_reduce(&a, &b, &c, &d, &DMatrix::identity(2, 2), &cfg)?;
    let p = syn.steady_p()?;
    println!("steady P = {p:.6}");
    println!("steady K = {:.6}", syn.k_steady.as_ref().unwrap());

    // Verify against the algebraic Riccati equation directly.
    let k = syn.k_steady.as_ref().unwrap();
    let res = (&a - k * &c) * p + p * (&a - k * &c).transpose()
        + (&b - k * &d) * (&b - k * &d).transpose();
    println!("ARE residual max |.| = {:.3e}", qlin::model::max_abs(&res));
    Ok(())
}
