//! Physical realizability checks for plants, the non-demolition certificate,
//! and extraction of the Hamiltonian / coupling matrices for canonical
//! commutation structure.
//!
//! A plant `(A, B, C, D, Theta)` in convention form (`D = [I 0]`) is
//! physically realizable iff
//!
//! ```text
//! A Theta + Theta A^T + B diag_{n_w/2}(J) B^T = 0        (real form)
//! B D^T = Theta C^T diag_{n_y/2}(J)
//! ```

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QlinError, Result};
use crate::model::{
    diag_j, make_canonical_theta, max_abs, CMat, NoiseSpec, QuantumLinearSystem, ThetaKind,
};

/// Outcome of the plant realizability check.
#[derive(Debug, Clone)]
pub struct RealizabilityReport {
    /// Residual of `A Theta + Theta A^T + B diag(J) B^T`.
    pub pr_residual_dyn: DMatrix<f64>,
    /// Residual of `B D^T - Theta C^T diag(J)`.
    pub pr_residual_out: DMatrix<f64>,
    pub is_realizable: bool,
    /// Residual of `Theta C^T + B T_w D^T` (non-demolition certificate).
    pub nondemolition_residual: DMatrix<f64>,
    /// Hamiltonian matrix, for canonical Theta on realizable plants.
    pub r: Option<DMatrix<f64>>,
    /// Coupling matrix, complex `(n_w/2) x n`.
    pub lambda: Option<CMat>,
}

/// Evaluate both realizability identities of the plant.
///
/// The first identity is checked in its real form (the complex statement
/// divided by `i`); `check_plant_pr_complex_residual` retains the complex
/// form as a cross-check.
pub fn check_plant_pr(sys: &QuantumLinearSystem, tol: f64) -> Result<RealizabilityReport> {
    if !sys.d_in_convention_form() {
        return Err(QlinError::Precondition(
            "plant realizability check requires D = [I 0]".into(),
        ));
    }
    let theta = &sys.comm.theta;
    let dyn_res = &sys.a * theta
        + theta * sys.a.transpose()
        + &sys.b * diag_j(sys.n_w() / 2) * sys.b.transpose();
    let out_res =
        &sys.b * sys.d.transpose() - theta * sys.c.transpose() * diag_j(sys.n_y / 2);
    let is_realizable = max_abs(&dyn_res) <= tol && max_abs(&out_res) <= tol;

    let (r, lambda) = if is_realizable && sys.comm.kind == ThetaKind::Canonical {
        let (r, l) = extract_hamiltonian_coupling(sys)?;
        (Some(r), Some(l))
    } else {
        (None, None)
    };

    Ok(RealizabilityReport {
        pr_residual_dyn: dyn_res,
        pr_residual_out: out_res,
        is_realizable,
        nondemolition_residual: check_nondemolition(sys),
        r,
        lambda,
    })
}

/// Complex form `i A Theta + i Theta A^T + B T_w B^T` of the first identity.
pub fn check_plant_pr_complex_residual(sys: &QuantumLinearSystem) -> CMat {
    let theta = &sys.comm.theta;
    let real_part = &sys.a * theta + theta * sys.a.transpose();
    let btb = CMat::real_mul(&sys.b, &sys.noise.t_w.mul_real(&sys.b.transpose()));
    CMat::from_real(real_part).mul_i().add(&btb)
}

/// Residual of `Theta C^T + B T_w D^T` in real quadrature form (where the
/// factored commutator table is `T_w = diag(J)`); near zero certifies the
/// non-demolition property `[x(t), y(s)^T] = 0` for `t >= s`.
pub fn check_nondemolition(sys: &QuantumLinearSystem) -> DMatrix<f64> {
    let theta_ct = &sys.comm.theta * sys.c.transpose();
    // the vacuum table has T_w = i diag(J); the i is the overall factor of
    // the commutator identity and drops out of the real residual
    let t_real = sys.noise.t_w.im.clone();
    theta_ct + &sys.b * t_real * sys.d.transpose()
}

/// Permutation taking interleaved quadratures `(a_1, a_2, ..., a_{2m})` to
/// `(a_1, a_3, ..., a_{2m-1}, a_2, a_4, ..., a_{2m})`.
pub fn interleave_permutation(m: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        p[(i, 2 * i)] = 1.0;
        p[(m + i, 2 * i + 1)] = 1.0;
    }
    p
}

/// `Gamma = P diag_m(M)` with `M = (1/2) [[1, i], [1, -i]]`.
pub fn gamma_matrix(m: usize) -> CMat {
    let mut re = DMatrix::zeros(2 * m, 2 * m);
    let mut im = DMatrix::zeros(2 * m, 2 * m);
    for k in 0..m {
        re[(2 * k, 2 * k)] = 0.5;
        re[(2 * k + 1, 2 * k)] = 0.5;
        im[(2 * k, 2 * k + 1)] = 0.5;
        im[(2 * k + 1, 2 * k + 1)] = -0.5;
    }
    let diag_m = CMat::new(re, im);
    CMat::real_mul(&interleave_permutation(m), &diag_m)
}

/// Inverse of `Gamma`: `diag_m(M^{-1}) P^T` with `M^{-1} = [[1, 1], [-i, i]]`.
pub fn gamma_inverse(m: usize) -> CMat {
    let mut re = DMatrix::zeros(2 * m, 2 * m);
    let mut im = DMatrix::zeros(2 * m, 2 * m);
    for k in 0..m {
        re[(2 * k, 2 * k)] = 1.0;
        re[(2 * k, 2 * k + 1)] = 1.0;
        im[(2 * k + 1, 2 * k)] = -1.0;
        im[(2 * k + 1, 2 * k + 1)] = 1.0;
    }
    CMat::new(re, im).mul_real(&interleave_permutation(m).transpose())
}

/// Hamiltonian matrix `R = (1/4)(-Theta A + A^T Theta)` and coupling matrix
/// `Lambda = -(i/2) [0 I] (Gamma^{-1})^T B^T Theta` for canonical `Theta`.
pub fn extract_hamiltonian_coupling(
    sys: &QuantumLinearSystem,
) -> Result<(DMatrix<f64>, CMat)> {
    if sys.comm.kind != ThetaKind::Canonical {
        return Err(QlinError::Unsupported(
            "Hamiltonian/coupling extraction requires canonical Theta".into(),
        ));
    }
    let theta = &sys.comm.theta;
    let r = (-theta * &sys.a + sys.a.transpose() * theta).scale(0.25);

    let m = sys.n_w() / 2;
    let bt_theta = CMat::from_real(sys.b.transpose() * theta);
    let ginv_t = gamma_inverse(m).transpose();
    let full = ginv_t.mul(&bt_theta);
    // lower half rows, times -i/2
    let lower = CMat::new(
        full.re.rows(m, m).into_owned(),
        full.im.rows(m, m).into_owned(),
    );
    let lambda = lower.mul_i().scale(-0.5);
    Ok((r, lambda))
}

/// Rebuild `A = 2 Theta (R + Im(Lambda^dag Lambda))` from extracted matrices.
pub fn assemble_a(theta: &DMatrix<f64>, r: &DMatrix<f64>, lambda: &CMat) -> DMatrix<f64> {
    let ll = lambda.adjoint().mul(lambda);
    theta * (r + ll.im).scale(2.0)
}

/// Rebuild `B = 2i Theta [-Lambda^dag  Lambda^T] Gamma`; the result is real
/// up to rounding, and the real part is returned.
pub fn assemble_b(theta: &DMatrix<f64>, lambda: &CMat) -> DMatrix<f64> {
    let m = lambda.nrows();
    let stacked = lambda.adjoint().scale(-1.0).hstack(&lambda.transpose());
    let prod = CMat::real_mul(theta, &stacked.mul(&gamma_matrix(m))).mul_i().scale(2.0);
    debug_assert!(prod.im.iter().all(|x| x.abs() < 1e-9));
    prod.re
}

/// Rebuild `C = P^T diag(Sigma, Sigma) [2 Re(Lambda); 2 Im(Lambda)]` with
/// `Sigma = [I_{n_y/2} 0]`.
pub fn assemble_c(lambda: &CMat, n_y: usize) -> DMatrix<f64> {
    let m = lambda.nrows(); // n_w / 2
    let n = lambda.ncols();
    let half = n_y / 2;
    // Sigma projects the leading half-block, so the stacked real/imag parts
    // reduce to the first `half` rows of each.
    let mut stacked = DMatrix::zeros(n_y, n);
    stacked
        .view_mut((0, 0), (half, n))
        .copy_from(&lambda.re.rows(0, half).scale(2.0));
    stacked
        .view_mut((half, 0), (half, n))
        .copy_from(&lambda.im.rows(0, half).scale(2.0));
    let _ = m;
    interleave_permutation(half).transpose() * stacked
}

/// Draw a physically realizable plant from random `(R, Lambda)` through the
/// open-oscillator formulas; membership in the realizability manifold is
/// exact by construction.
pub fn random_pr_plant(
    rng: &mut ChaCha8Rng,
    n: usize,
    n_w: usize,
    n_y: usize,
) -> QuantumLinearSystem {
    assert!(n % 2 == 0 && n_w % 2 == 0 && n_y % 2 == 0 && n_w >= n_y);
    let m = n_w / 2;
    let mut normal = |_: usize| -> f64 {
        // Box-Muller from the uniform stream keeps us off rand_distr.
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let r_raw = DMatrix::from_fn(n, n, |_, _| normal(0));
    let r = (&r_raw + r_raw.transpose()).scale(0.5);
    let lambda = CMat::new(
        DMatrix::from_fn(m, n, |_, _| normal(0)),
        DMatrix::from_fn(m, n, |_, _| normal(0)),
    );
    let comm = make_canonical_theta(n).unwrap();
    let a = assemble_a(&comm.theta, &r, &lambda);
    let b = assemble_b(&comm.theta, &lambda);
    let c = assemble_c(&lambda, n_y);
    let mut d = DMatrix::zeros(n_y, n_w);
    for i in 0..n_y {
        d[(i, i)] = 1.0;
    }
    QuantumLinearSystem::new(a, b, c, d, comm, NoiseSpec::vacuum(n_w).unwrap()).unwrap()
}
