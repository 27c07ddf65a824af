//! Fixed-step classical Runge-Kutta integration over matrix-valued states.
//!
//! Everything downstream (Riccati flows, covariance propagation, the
//! innovations audit) runs on this engine so trajectories are deterministic
//! and reproducible bit-for-bit for a given step size.

use nalgebra::DMatrix;

/// One RK4 step of `x' = f(x)` for a single matrix state.
pub fn rk4_step<F>(f: F, x: &DMatrix<f64>, dt: f64) -> DMatrix<f64>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let k1 = f(x);
    let k2 = f(&(x + k1.scale(dt / 2.0)));
    let k3 = f(&(x + k2.scale(dt / 2.0)));
    let k4 = f(&(x + k3.scale(dt)));
    x + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0)
}

/// One RK4 step for a coupled system of matrix states.
pub fn rk4_step_multi<F>(f: F, x: &[DMatrix<f64>], dt: f64) -> Vec<DMatrix<f64>>
where
    F: Fn(&[DMatrix<f64>]) -> Vec<DMatrix<f64>>,
{
    let add = |a: &[DMatrix<f64>], b: &[DMatrix<f64>], s: f64| -> Vec<DMatrix<f64>> {
        a.iter().zip(b).map(|(ai, bi)| ai + bi.scale(s)).collect()
    };
    let k1 = f(x);
    let k2 = f(&add(x, &k1, dt / 2.0));
    let k3 = f(&add(x, &k2, dt / 2.0));
    let k4 = f(&add(x, &k3, dt));
    x.iter()
        .enumerate()
        .map(|(i, xi)| {
            xi + (&k1[i] + k2[i].scale(2.0) + k3[i].scale(2.0) + &k4[i]).scale(dt / 6.0)
        })
        .collect()
}
