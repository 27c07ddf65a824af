//! Least mean squares estimator for a dynamic squeezer: integrate the
//! Riccati flow to steady state and report P, K, and the performance J.
//!
//! Run with: cargo run --example synthesize_filter

use qlin::filter::step_halving_deviation;
use qlin::{solve_steady_riccati, Scenario, SolverConfig};
use std::path::Path;

fn main() -> qlin::Result<()> {
    let sc = Scenario::from_path(Path::new("crates/qlin/scenarios/squeezer.json"))?;
    let sys = sc.to_system()?;
    let cfg = sc.solver_config();

    let syn = solve_steady_riccati(&sys, &sc.p0_matrix()?, &cfg)?;
    println!("status: {:?}", syn.status);
    println!("P = {:.4}", syn.steady_p()?);
    println!("K = {:.4}", syn.k_steady.as_ref().unwrap());
    println!("J = Tr(P) = {:.4}", syn.j_perf.unwrap());
    println!("A - KC Hurwitz: {}", syn.hurwitz);

    // Integration-accuracy sanity check: halving dt should not move P.
    let short = SolverConfig {
        horizon: 200.0,
        ..cfg
    };
    let dev = step_halving_deviation(&sys, &sc.p0_matrix()?, &short)?;
    println!("step-halving deviation: {dev:.3e}");
    Ok(())
}
