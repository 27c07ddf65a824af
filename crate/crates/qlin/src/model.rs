//! Core data types for linear quantum stochastic systems in quadrature form.
//!
//! A system is described by real matrices `(A, B, C, D)` together with the
//! commutation matrix `Theta` of the system variables and the Ito matrix
//! `F_w` of the driving noise:
//!
//! ```text
//! dx = A x dt + B dw,     dy = C x dt + D dw,
//! [x_j(0), x_k(0)] = 2i Theta_jk,     dw dw^T = F_w dt.
//! ```
//!
//! Complex matrices are kept as (real, imaginary) pairs so that every
//! realizability residual can be asserted on real quantities.

use nalgebra::DMatrix;

use crate::error::{QlinError, Result};

/// The 2x2 symplectic unit `J = [[0, 1], [-1, 0]]`.
pub fn j2() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

/// Block diagonal stack `diag_m(J)` of size `2m x 2m`.
pub fn diag_j(m: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    for k in 0..m {
        out[(2 * k, 2 * k + 1)] = 1.0;
        out[(2 * k + 1, 2 * k)] = -1.0;
    }
    out
}

/// A complex matrix stored as a pair of real matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl CMat {
    pub fn new(re: DMatrix<f64>, im: DMatrix<f64>) -> Self {
        assert_eq!(re.shape(), im.shape(), "re/im shape mismatch");
        CMat { re, im }
    }

    pub fn from_real(re: DMatrix<f64>) -> Self {
        let im = DMatrix::zeros(re.nrows(), re.ncols());
        CMat { re, im }
    }

    pub fn zeros(r: usize, c: usize) -> Self {
        CMat {
            re: DMatrix::zeros(r, c),
            im: DMatrix::zeros(r, c),
        }
    }

    pub fn identity(n: usize) -> Self {
        CMat {
            re: DMatrix::identity(n, n),
            im: DMatrix::zeros(n, n),
        }
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    /// Matrix product over complex scalars.
    pub fn mul(&self, rhs: &CMat) -> CMat {
        CMat {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }

    /// Product with a real matrix on the right.
    pub fn mul_real(&self, rhs: &DMatrix<f64>) -> CMat {
        CMat {
            re: &self.re * rhs,
            im: &self.im * rhs,
        }
    }

    /// Product with a real matrix on the left.
    pub fn real_mul(lhs: &DMatrix<f64>, rhs: &CMat) -> CMat {
        CMat {
            re: lhs * &rhs.re,
            im: lhs * &rhs.im,
        }
    }

    pub fn add(&self, rhs: &CMat) -> CMat {
        CMat {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }

    pub fn sub(&self, rhs: &CMat) -> CMat {
        CMat {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }

    pub fn scale(&self, s: f64) -> CMat {
        CMat {
            re: self.re.scale(s),
            im: self.im.scale(s),
        }
    }

    /// Multiplication by the imaginary unit.
    pub fn mul_i(&self) -> CMat {
        CMat {
            re: -self.im.clone(),
            im: self.re.clone(),
        }
    }

    pub fn transpose(&self) -> CMat {
        CMat {
            re: self.re.transpose(),
            im: self.im.transpose(),
        }
    }

    pub fn conjugate(&self) -> CMat {
        CMat {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat {
            re: self.re.transpose(),
            im: -self.im.transpose(),
        }
    }

    /// Horizontal concatenation `[self rhs]`.
    pub fn hstack(&self, rhs: &CMat) -> CMat {
        let r = self.nrows();
        let c = self.ncols() + rhs.ncols();
        let mut re = DMatrix::zeros(r, c);
        let mut im = DMatrix::zeros(r, c);
        re.view_mut((0, 0), (r, self.ncols())).copy_from(&self.re);
        re.view_mut((0, self.ncols()), (r, rhs.ncols()))
            .copy_from(&rhs.re);
        im.view_mut((0, 0), (r, self.ncols())).copy_from(&self.im);
        im.view_mut((0, self.ncols()), (r, rhs.ncols()))
            .copy_from(&rhs.im);
        CMat { re, im }
    }

    /// Largest entrywise modulus bound `max(|re| + |im|)`.
    pub fn max_abs(&self) -> f64 {
        self.re
            .iter()
            .zip(self.im.iter())
            .map(|(r, i)| r.abs() + i.abs())
            .fold(0.0, f64::max)
    }
}

/// Largest absolute entry of a real matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Structure of the commutation matrix `Theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaKind {
    Canonical,
    /// Leading `n_prime x n_prime` zero block followed by J blocks.
    DegenerateCanonical { n_prime: usize },
}

/// Commutation matrix of the system variables, antisymmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutationSpec {
    pub n: usize,
    pub kind: ThetaKind,
    pub theta: DMatrix<f64>,
}

/// `Theta = diag_{n/2}(J)`, requires `n` even and positive.
pub fn make_canonical_theta(n: usize) -> Result<CommutationSpec> {
    if n == 0 || n % 2 != 0 {
        return Err(QlinError::Dimension(format!(
            "canonical Theta needs positive even n, got {n}"
        )));
    }
    Ok(CommutationSpec {
        n,
        kind: ThetaKind::Canonical,
        theta: diag_j(n / 2),
    })
}

/// `Theta = diag(0_{n'}, diag_{(n-n')/2}(J))`, requires `0 < n' <= n` and
/// `n - n'` even.
pub fn make_degenerate_theta(n: usize, n_prime: usize) -> Result<CommutationSpec> {
    if n_prime == 0 || n_prime > n || (n - n_prime) % 2 != 0 {
        return Err(QlinError::Dimension(format!(
            "degenerate Theta needs 0 < n' <= n with n - n' even, got n={n}, n'={n_prime}"
        )));
    }
    let mut theta = DMatrix::zeros(n, n);
    let m = (n - n_prime) / 2;
    for k in 0..m {
        let i = n_prime + 2 * k;
        theta[(i, i + 1)] = 1.0;
        theta[(i + 1, i)] = -1.0;
    }
    Ok(CommutationSpec {
        n,
        kind: ThetaKind::DegenerateCanonical { n_prime },
        theta,
    })
}

/// Noise Ito algebra: `F_w` (Hermitian) and its skew part `T_w`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub n_w: usize,
    pub f_w: CMat,
    pub t_w: CMat,
}

impl NoiseSpec {
    /// Convention form `F_w = I + i diag_{n_w/2}(J)`, hence
    /// `T_w = i diag_{n_w/2}(J)`.
    pub fn vacuum(n_w: usize) -> Result<NoiseSpec> {
        if n_w == 0 || n_w % 2 != 0 {
            return Err(QlinError::Dimension(format!(
                "noise dimension must be positive even, got {n_w}"
            )));
        }
        let dj = diag_j(n_w / 2);
        Ok(NoiseSpec {
            n_w,
            f_w: CMat::new(DMatrix::identity(n_w, n_w), dj.clone()),
            t_w: CMat::new(DMatrix::zeros(n_w, n_w), dj),
        })
    }

    /// Classical noise: `F_w = I`, `T_w = 0`.
    pub fn classical(n_w: usize) -> NoiseSpec {
        NoiseSpec {
            n_w,
            f_w: CMat::identity(n_w),
            t_w: CMat::zeros(n_w, n_w),
        }
    }
}

/// A linear quantum stochastic plant `(A, B, C, D)` with its noise algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumLinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub comm: CommutationSpec,
    pub noise: NoiseSpec,
    pub n_y: usize,
}

impl QuantumLinearSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        comm: CommutationSpec,
        noise: NoiseSpec,
    ) -> Result<Self> {
        let n = comm.n;
        let n_w = noise.n_w;
        let n_y = c.nrows();
        if a.nrows() != n || a.ncols() != n {
            return Err(QlinError::Dimension(format!(
                "A must be {n}x{n}, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() != n_w {
            return Err(QlinError::Dimension(format!(
                "B must be {n}x{n_w}, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        if c.ncols() != n {
            return Err(QlinError::Dimension(format!(
                "C must have {n} columns, got {}",
                c.ncols()
            )));
        }
        if d.nrows() != n_y || d.ncols() != n_w {
            return Err(QlinError::Dimension(format!(
                "D must be {n_y}x{n_w}, got {}x{}",
                d.nrows(),
                d.ncols()
            )));
        }
        if n_y % 2 != 0 || n_w % 2 != 0 || n_w < n_y {
            return Err(QlinError::Dimension(format!(
                "need n_y, n_w even with n_w >= n_y, got n_y={n_y}, n_w={n_w}"
            )));
        }
        Ok(QuantumLinearSystem {
            a,
            b,
            c,
            d,
            comm,
            noise,
            n_y,
        })
    }

    pub fn n(&self) -> usize {
        self.comm.n
    }

    pub fn n_w(&self) -> usize {
        self.noise.n_w
    }

    /// Whether `D = [I 0]` bit-exactly (the convention the realizability
    /// identities assume).
    pub fn d_in_convention_form(&self) -> bool {
        for i in 0..self.n_y {
            for j in 0..self.n_w() {
                let want = if i == j { 1.0 } else { 0.0 };
                if self.d[(i, j)] != want {
                    return false;
                }
            }
        }
        true
    }

    /// First `n_y` columns of `B`.
    pub fn b_prime(&self) -> DMatrix<f64> {
        self.b.columns(0, self.n_y).into_owned()
    }

    /// Remaining `n_w - n_y` columns of `B`.
    pub fn b_second(&self) -> DMatrix<f64> {
        self.b.columns(self.n_y, self.n_w() - self.n_y).into_owned()
    }
}

/// Output Ito algebra `F_y = D F_w D^T`, `T_y = D T_w D^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputNoiseAlgebra {
    pub f_y: CMat,
    pub t_y: CMat,
}

pub fn output_noise_algebra(sys: &QuantumLinearSystem) -> OutputNoiseAlgebra {
    let dt = sys.d.transpose();
    let f_y = CMat::real_mul(&sys.d, &sys.noise.f_w.mul_real(&dt));
    let t_y = CMat::real_mul(&sys.d, &sys.noise.t_w.mul_real(&dt));
    OutputNoiseAlgebra { f_y, t_y }
}

/// Real coefficient matrix of the output commutator `[y(t), y(s)^T]` for
/// `t >= s`: the commutator is `2 D T_w D^T s`, purely imaginary in
/// convention form, and this returns it divided by `i`.
pub fn output_commutation_growth(sys: &QuantumLinearSystem, s: f64) -> Result<DMatrix<f64>> {
    if s < 0.0 {
        return Err(QlinError::Domain(format!("time must be nonnegative, got {s}")));
    }
    let alg = output_noise_algebra(sys);
    // T_y is i times a real matrix; dividing 2 T_y s by i keeps the imaginary
    // component of T_y as the real coefficient.
    Ok(alg.t_y.im.scale(2.0 * s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_theta_blocks() {
        let spec = make_canonical_theta(2).unwrap();
        assert_eq!(spec.theta, j2());
        let spec4 = make_canonical_theta(4).unwrap();
        assert_eq!(spec4.theta, diag_j(2));
        assert!(make_canonical_theta(3).is_err());
        assert!(make_canonical_theta(0).is_err());
    }

    #[test]
    fn degenerate_theta_blocks() {
        let spec = make_degenerate_theta(3, 1).unwrap();
        let mut want = DMatrix::zeros(3, 3);
        want[(1, 2)] = 1.0;
        want[(2, 1)] = -1.0;
        assert_eq!(spec.theta, want);

        // fully classical block
        let spec2 = make_degenerate_theta(2, 2).unwrap();
        assert_eq!(spec2.theta, DMatrix::zeros(2, 2));

        assert!(make_degenerate_theta(4, 1).is_err()); // 4 - 1 odd
        assert!(make_degenerate_theta(2, 0).is_err());
    }

    #[test]
    fn theta_exactly_antisymmetric() {
        for spec in [
            make_canonical_theta(6).unwrap(),
            make_degenerate_theta(5, 1).unwrap(),
            make_degenerate_theta(7, 3).unwrap(),
        ] {
            let sum = &spec.theta + spec.theta.transpose();
            assert!(sum.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn vacuum_noise_structure() {
        let ns = NoiseSpec::vacuum(4).unwrap();
        // (F_w + F_w^T)/2 = I
        let sym = (&ns.f_w.re + ns.f_w.re.transpose()).scale(0.5);
        assert_eq!(sym, DMatrix::identity(4, 4));
        // T_w^T = -T_w
        let skew = &ns.t_w.im + ns.t_w.im.transpose();
        assert!(skew.iter().all(|&x| x == 0.0));
        assert!(NoiseSpec::vacuum(3).is_err());
    }

    #[test]
    fn diag_j_squares_to_minus_identity() {
        for m in 1..=4 {
            let dj = diag_j(m);
            assert_eq!(&dj * &dj, -DMatrix::<f64>::identity(2 * m, 2 * m));
        }
    }

    fn convention_sys(n: usize, n_w: usize, n_y: usize) -> QuantumLinearSystem {
        let mut d = DMatrix::zeros(n_y, n_w);
        for i in 0..n_y {
            d[(i, i)] = 1.0;
        }
        QuantumLinearSystem::new(
            DMatrix::zeros(n, n),
            DMatrix::zeros(n, n_w),
            DMatrix::zeros(n_y, n),
            d,
            make_canonical_theta(n).unwrap(),
            NoiseSpec::vacuum(n_w).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn output_algebra_projects_leading_block() {
        let sys = convention_sys(2, 4, 2);
        let alg = output_noise_algebra(&sys);
        assert_eq!(alg.f_y.re, DMatrix::identity(2, 2));
        assert_eq!(alg.f_y.im, j2());
        assert_eq!(alg.t_y.im, j2());

        // identity D
        let sys2 = convention_sys(2, 2, 2);
        let alg2 = output_noise_algebra(&sys2);
        assert_eq!(alg2.t_y.im, j2());
    }

    #[test]
    fn classical_noise_has_zero_skew_output() {
        let mut sys = convention_sys(2, 2, 2);
        sys.noise = NoiseSpec::classical(2);
        let alg = output_noise_algebra(&sys);
        assert!(alg.t_y.max_abs() == 0.0);
        assert_eq!(output_commutation_growth(&sys, 5.0).unwrap(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn output_commutation_scales_linearly() {
        let sys = convention_sys(2, 4, 2);
        assert_eq!(
            output_commutation_growth(&sys, 0.0).unwrap(),
            DMatrix::zeros(2, 2)
        );
        assert_eq!(output_commutation_growth(&sys, 1.0).unwrap(), j2().scale(2.0));
        assert!(output_commutation_growth(&sys, -1.0).is_err());
    }
}
