//! Independent validation of the Riccati flow: propagate the joint first and
//! second moments of the plant/estimator pair and compare the extracted
//! error covariance against the Riccati solution.
//!
//! Run with: cargo run --example moment_oracle

use nalgebra::DMatrix;
use qlin::filter::riccati_step;
use qlin::model::max_abs;
use qlin::moments::{assemble_joint, extract_error_covariance, propagate_moments, JointMomentState};
use qlin::{optimal_gain, solve_steady_riccati, Scenario};
use std::path::Path;

fn main() -> qlin::Result<()> {
    let sc = Scenario::from_path(Path::new("crates/qlin/scenarios/cavity.json"))?;
    let sys = sc.to_system()?;
    let cfg = sc.solver_config();
    let syn = solve_steady_riccati(&sys, &sc.p0_matrix()?, &cfg)?;
    let k = syn.k_steady.clone().unwrap();

    let n = sys.n();
    let p0 = DMatrix::identity(n, n).scale(2.0);
    let mut sigma0 = DMatrix::zeros(2 * n, 2 * n);
    sigma0.view_mut((0, 0), (n, n)).copy_from(&p0);
    let state0 = JointMomentState {
        mean: DMatrix::from_row_slice(2 * n, 1, &[1.0, -0.5, 0.0, 0.0]),
        sigma: sigma0,
    };

    let dt = 1e-3;
    let horizon = 50.0 / 0.1; // 50 cavity lifetimes
    let joint = assemble_joint(&sys, &k, None)?;
    let traj = propagate_moments(&joint, &state0, horizon, dt, 100)?;

    // Riccati flow with the same fixed gain, stepped in lockstep.
    let mut p = p0;
    let mut deviation: f64 = 0.0;
    let mut idx = 1;
    for s in 0..(horizon / dt).round() as usize {
        p = riccati_step(&sys, &p, &k, dt)?;
        if (s + 1) % 100 == 0 {
            let e = extract_error_covariance(&traj[idx].1.sigma)?;
            deviation = deviation.max(max_abs(&(e - &p)));
            idx += 1;
        }
    }
    let last = &traj.last().unwrap().1;
    println!("final mean = {:.6}", last.mean.transpose());
    println!("final error covariance = {:.6}", extract_error_covariance(&last.sigma)?);
    println!("max |oracle - Riccati| over horizon = {deviation:.3e}");
    println!("steady gain K = {:.4}", optimal_gain(&sys, syn.steady_p()?)?);
    Ok(())
}
