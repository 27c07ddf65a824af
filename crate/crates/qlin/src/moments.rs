//! Joint first/second moment propagation for the plant-estimator pair.
//!
//! Serves as an independent oracle for the Riccati synthesis: the error
//! covariance extracted from the propagated joint covariance must reproduce
//! the Riccati solution for the same gain schedule.

use nalgebra::DMatrix;

use crate::error::{QlinError, Result};
use crate::integrate::rk4_step_multi;
use crate::model::QuantumLinearSystem;

/// First and second moments of the stacked state `[x; xhat]`.
#[derive(Debug, Clone)]
pub struct JointMomentState {
    pub mean: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
}

/// Drift and noise matrices of the stacked plant-estimator system.
#[derive(Debug, Clone)]
pub struct JointSystem {
    pub a_joint: DMatrix<f64>,
    pub b_joint: DMatrix<f64>,
}

/// Stack the plant with an estimator of gain `k`:
///
/// ```text
/// A_joint = [ A      0      ]   B_joint = [ B    0 ]
///           [ K C    A - KC ]             [ K D  b ]
/// ```
///
/// `b` is the optional vacuum coupling of a coherent observer; estimators
/// driven purely by the measurement record pass `None`.
pub fn assemble_joint(
    sys: &QuantumLinearSystem,
    k: &DMatrix<f64>,
    b: Option<&DMatrix<f64>>,
) -> Result<JointSystem> {
    let n = sys.n();
    let n_w = sys.n_w();
    if k.nrows() != n || k.ncols() != sys.n_y {
        return Err(QlinError::Dimension(format!(
            "gain must be {n} x {}, got {} x {}",
            sys.n_y,
            k.nrows(),
            k.ncols()
        )));
    }
    let n_v = b.map_or(0, |m| m.ncols());
    if let Some(bv) = b {
        if bv.nrows() != n {
            return Err(QlinError::Dimension(format!(
                "vacuum coupling must have {n} rows, got {}",
                bv.nrows()
            )));
        }
    }
    let a_cl = &sys.a - k * &sys.c;
    let mut a_joint = DMatrix::zeros(2 * n, 2 * n);
    a_joint.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    a_joint.view_mut((n, 0), (n, n)).copy_from(&(k * &sys.c));
    a_joint.view_mut((n, n), (n, n)).copy_from(&a_cl);

    let mut b_joint = DMatrix::zeros(2 * n, n_w + n_v);
    b_joint.view_mut((0, 0), (n, n_w)).copy_from(&sys.b);
    b_joint.view_mut((n, 0), (n, n_w)).copy_from(&(k * &sys.d));
    if let Some(bv) = b {
        b_joint.view_mut((n, n_w), (n, n_v)).copy_from(bv);
    }
    Ok(JointSystem { a_joint, b_joint })
}

/// Propagate the joint moments over `[0, horizon]` with fixed step `dt`:
/// `mean' = A mean`, `Sigma' = A Sigma + Sigma A^T + B B^T`.
///
/// Returns sampled `(t, state)` pairs including both endpoints.
pub fn propagate_moments(
    joint: &JointSystem,
    state0: &JointMomentState,
    horizon: f64,
    dt: f64,
    sample_stride: usize,
) -> Result<Vec<(f64, JointMomentState)>> {
    if dt <= 0.0 || horizon <= 0.0 {
        return Err(QlinError::Domain("dt and horizon must be positive".into()));
    }
    let n2 = joint.a_joint.nrows();
    if state0.mean.nrows() != n2 || state0.sigma.nrows() != n2 || state0.sigma.ncols() != n2 {
        return Err(QlinError::Dimension(format!(
            "initial moments must match joint dimension {n2}"
        )));
    }
    let bbt = &joint.b_joint * joint.b_joint.transpose();
    let a = &joint.a_joint;
    let steps = (horizon / dt).round() as usize;
    let stride = sample_stride.max(1);
    let mut mean = state0.mean.clone();
    let mut sigma = state0.sigma.clone();
    let mut out = Vec::with_capacity(steps / stride + 2);
    out.push((0.0, state0.clone()));
    for s in 0..steps {
        let next = rk4_step_multi(
            |st| {
                vec![
                    a * &st[0],
                    a * &st[1] + &st[1] * a.transpose() + &bbt,
                ]
            },
            &[mean, sigma],
            dt,
        );
        let mut it = next.into_iter();
        mean = it.next().unwrap();
        sigma = it.next().unwrap();
        sigma = (&sigma + sigma.transpose()).scale(0.5);
        if (s + 1) % stride == 0 || s + 1 == steps {
            out.push((
                (s + 1) as f64 * dt,
                JointMomentState {
                    mean: mean.clone(),
                    sigma: sigma.clone(),
                },
            ));
        }
    }
    Ok(out)
}

/// Error covariance `E Sigma E^T` with `E = [I  -I]`, i.e. the covariance of
/// `x - xhat` implied by the joint covariance.
pub fn extract_error_covariance(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n2 = sigma.nrows();
    if n2 % 2 != 0 || sigma.ncols() != n2 {
        return Err(QlinError::Dimension(
            "joint covariance must be square with even dimension".into(),
        ));
    }
    let n = n2 / 2;
    let s11 = sigma.view((0, 0), (n, n));
    let s12 = sigma.view((0, n), (n, n));
    let s21 = sigma.view((n, 0), (n, n));
    let s22 = sigma.view((n, n), (n, n));
    Ok(s11 - s12 - s21 + s22)
}
