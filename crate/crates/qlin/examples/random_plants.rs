//! Random physically realizable plants: sample Hamiltonian and coupling
//! matrices, assemble the quadrature system, and confirm the realizability
//! and non-demolition identities hold by construction.
//!
//! Run with: cargo run --example random_plants

use qlin::model::max_abs;
use qlin::realizability::{check_nondemolition, check_plant_pr, random_pr_plant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> qlin::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst_pr: f64 = 0.0;
    let mut worst_nd: f64 = 0.0;
    for i in 0..100 {
        let (n, n_w, n_y) = match i % 4 {
            0 => (2, 2, 2),
            1 => (2, 4, 2),
            2 => (4, 4, 2),
            _ => (4, 6, 4),
        };
        let sys = random_pr_plant(&mut rng, n, n_w, n_y);
        let report = check_plant_pr(&sys, 1e-8)?;
        assert!(report.is_realizable);
        worst_pr = worst_pr
            .max(max_abs(&report.pr_residual_dyn))
            .max(max_abs(&report.pr_residual_out));
        worst_nd = worst_nd.max(max_abs(&check_nondemolition(&sys)));
    }
    println!("100 random plants, all realizable");
    println!("worst realizability residual:  {worst_pr:.3e}");
    println!("worst non-demolition residual: {worst_nd:.3e}");
    Ok(())
}
