//! The innovations process under the optimal gain is a Wiener process:
//! its symmetrized covariance grows as t·I and stays uncorrelated with the
//! estimation error. Perturbing the gain destroys both properties.
//!
//! Run with: cargo run --example innovations_audit

use nalgebra::DMatrix;
use qlin::{audit_innovations, Scenario};
use std::path::Path;

fn main() -> qlin::Result<()> {
    let sc = Scenario::from_path(Path::new("crates/qlin/scenarios/squeezer.json"))?;
    let sys = sc.to_system()?;
    let p0 = sc.p0_matrix()?;

    let audit = audit_innovations(&sys, &p0, 30.0, 1e-3, None)?;
    println!("optimal gain:");
    println!("  max ||Gamma12||       = {:.3e}", audit.max_offdiag_drift);
    println!("  max ||Gamma11 - t I|| = {:.3e}", audit.max_gamma11_deviation);
    println!("  max ||Gamma22 - P||   = {:.3e}", audit.max_gamma22_deviation);

    let offset = DMatrix::from_element(sys.n(), sys.n_y, 0.05);
    let audit = audit_innovations(&sys, &p0, 30.0, 1e-3, Some(&offset))?;
    println!("gain perturbed by 0.05:");
    println!("  max ||Gamma12||       = {:.3e}", audit.max_offdiag_drift);
    println!("  max ||Gamma11 - t I|| = {:.3e}", audit.max_gamma11_deviation);
    Ok(())
}
