//! Physical realizability of the synthesized estimator, classification of
//! the special cases with their simplified constraints, and construction of
//! coherent observers by vacuum-noise augmentation when the estimator is not
//! realizable as-is.

use nalgebra::DMatrix;

use crate::error::{QlinError, Result};
use crate::filter::{is_hurwitz, solve_steady_riccati_unchecked, EstimatorSynthesis, SolverConfig};
use crate::model::{diag_j, max_abs, QuantumLinearSystem, ThetaKind};
use crate::skew::skew_canonical;

/// Which simplified realizability constraint applies to the plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorPRCase {
    General,
    /// `B' diag(J) B'^T = 0`.
    BprimeJZero,
    /// `n_y = n_w`, so `D = I` and `B' = B`.
    NyEqualsNw,
    /// `B' = 0` with canonical commutation structure.
    BprimeZeroCanonical,
    /// `B' = 0` with degenerate canonical commutation structure.
    BprimeZeroDegenerate,
}

/// Realizability verdict for the least mean squares estimator.
#[derive(Debug, Clone)]
pub struct EstimatorPRReport {
    /// Residual of the simplified realizability condition in `(B, C, P)`.
    pub general_residual: DMatrix<f64>,
    /// Residual of the pre-simplification identity
    /// `(A-KC) Theta + Theta (A-KC)^T + K diag(J) K^T`.
    pub intermediate_residual: DMatrix<f64>,
    pub case: EstimatorPRCase,
    /// Named residuals of the applicable special case, as consistency
    /// cross-checks; never the verdict.
    pub case_residuals: Vec<(String, DMatrix<f64>)>,
    pub is_realizable: bool,
    /// Whether the intermediate and simplified forms agree on the verdict.
    pub verdicts_agree: bool,
}

/// Coherent observer: the estimator matrices plus the vacuum coupling that
/// restores physical realizability.
#[derive(Debug, Clone)]
pub struct CoherentObserver {
    /// `A - K C`.
    pub a_obs: DMatrix<f64>,
    pub k: DMatrix<f64>,
    /// Vacuum-noise coupling, `n x n_v`.
    pub b: DMatrix<f64>,
    pub n_v: usize,
    /// Steady error covariance of the augmented estimator.
    pub p_tilde: DMatrix<f64>,
    /// `Tr(P_tilde)`.
    pub j_tilde: f64,
    /// Max-abs residual of the augmented realizability identity.
    pub residual_norm: f64,
    pub hurwitz: bool,
}

/// Residual of the simplified estimator realizability condition:
///
/// ```text
/// -B diag(J) B^T + 3 B' diag(J) B'^T + 2 P C^T diag(J) B'^T
///   + 2 B' diag(J) C P + P C^T diag(J) C P
/// ```
pub fn estimator_pr_residual(sys: &QuantumLinearSystem, p: &DMatrix<f64>) -> DMatrix<f64> {
    let jw = diag_j(sys.n_w() / 2);
    let jy = diag_j(sys.n_y / 2);
    let bp = sys.b_prime();
    let ct = sys.c.transpose();
    -(&sys.b * &jw * sys.b.transpose())
        + (&bp * &jy * bp.transpose()).scale(3.0)
        + (p * &ct * &jy * bp.transpose()).scale(2.0)
        + (&bp * &jy * &sys.c * p).scale(2.0)
        + p * &ct * &jy * &sys.c * p
}

/// Residual of the estimator realizability identity before gain
/// substitution, in real form:
/// `(A-KC) Theta + Theta (A-KC)^T + K diag(J) K^T`.
pub fn estimator_pr_intermediate_residual(
    sys: &QuantumLinearSystem,
    k: &DMatrix<f64>,
) -> DMatrix<f64> {
    let jy = diag_j(sys.n_y / 2);
    let theta = &sys.comm.theta;
    let a_cl = &sys.a - k * &sys.c;
    &a_cl * theta + theta * a_cl.transpose() + k * jy * k.transpose()
}

/// Detect which simplified constraint pattern the plant matches.
pub fn classify_special_case(sys: &QuantumLinearSystem) -> EstimatorPRCase {
    let bp = sys.b_prime();
    let jy = diag_j(sys.n_y / 2);
    if max_abs(&bp) < 1e-12 {
        return match sys.comm.kind {
            ThetaKind::Canonical => EstimatorPRCase::BprimeZeroCanonical,
            ThetaKind::DegenerateCanonical { .. } => EstimatorPRCase::BprimeZeroDegenerate,
        };
    }
    if sys.n_y == sys.n_w() {
        return EstimatorPRCase::NyEqualsNw;
    }
    if max_abs(&(&bp * &jy * bp.transpose())) < 1e-12 {
        return EstimatorPRCase::BprimeJZero;
    }
    EstimatorPRCase::General
}

/// Projector `diag(0_{n'}, I)` used by the degenerate-canonical branches.
fn degenerate_projector(n: usize, n_prime: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j && i >= n_prime { 1.0 } else { 0.0 })
}

/// Named residuals of the special case matching `case`, evaluated at `p`.
pub fn special_case_residuals(
    sys: &QuantumLinearSystem,
    p: &DMatrix<f64>,
    case: EstimatorPRCase,
    k: &DMatrix<f64>,
) -> Vec<(String, DMatrix<f64>)> {
    let theta = &sys.comm.theta;
    let bp = sys.b_prime();
    let bpp = sys.b_second();
    let jy = diag_j(sys.n_y / 2);
    let j_rest = |cols: usize| diag_j(cols / 2);
    match case {
        EstimatorPRCase::General => vec![],
        EstimatorPRCase::BprimeJZero => {
            // B'' diag(J) B''^T + 2 P Theta B' B'^T + 2 B' B'^T Theta P
            let res = &bpp * j_rest(bpp.ncols()) * bpp.transpose()
                + (p * theta * &bp * bp.transpose()).scale(2.0)
                + (&bp * bp.transpose() * theta * p).scale(2.0);
            vec![("bprime_j_zero".into(), res)]
        }
        EstimatorPRCase::NyEqualsNw => {
            // 2 P Theta B B^T + 2 B B^T Theta P
            let bbt = &sys.b * sys.b.transpose();
            let res = (p * theta * &bbt).scale(2.0) + (&bbt * theta * p).scale(2.0);
            vec![("ny_equals_nw".into(), res)]
        }
        EstimatorPRCase::BprimeZeroCanonical => {
            let bjb = &bpp * j_rest(bpp.ncols()) * bpp.transpose();
            vec![("gain_zero".into(), k.clone()), ("bsecond_j_zero".into(), bjb)]
        }
        EstimatorPRCase::BprimeZeroDegenerate => {
            let n_prime = match sys.comm.kind {
                ThetaKind::DegenerateCanonical { n_prime } => n_prime,
                ThetaKind::Canonical => unreachable!("classified as degenerate"),
            };
            let proj = degenerate_projector(sys.n(), n_prime);
            let ct = sys.c.transpose();
            let projector_holds = max_abs(&(&proj * &ct - &ct)) < 1e-12;
            let bjb = &bpp * j_rest(bpp.ncols()) * bpp.transpose();
            if projector_holds {
                vec![("gain_zero".into(), k.clone()), ("bsecond_j_zero".into(), bjb)]
            } else {
                // C' is the block of C acting on the classical variables.
                let c_prime = sys.c.columns(0, n_prime).into_owned();
                let cjc = c_prime.transpose() * &jy * &c_prime;
                if max_abs(&cjc) < 1e-12 {
                    vec![
                        ("gain_pct".into(), k - p * &ct),
                        ("bsecond_j_zero".into(), bjb),
                    ]
                } else {
                    let res = -bjb + p * &ct * &jy * &sys.c * p;
                    vec![("gain_pct".into(), k - p * &ct), ("degenerate_mixed".into(), res)]
                }
            }
        }
    }
}

/// Evaluate the estimator realizability verdict at the converged steady
/// covariance, with the intermediate identity as a cross-check.
pub fn check_estimator_pr(
    sys: &QuantumLinearSystem,
    synthesis: &EstimatorSynthesis,
    tol: f64,
) -> Result<EstimatorPRReport> {
    let p = synthesis.steady_p()?;
    let k = synthesis
        .k_steady
        .as_ref()
        .ok_or_else(|| QlinError::Precondition("synthesis carries no steady gain".into()))?;
    let general = estimator_pr_residual(sys, p);
    let intermediate = estimator_pr_intermediate_residual(sys, k);
    let is_realizable = max_abs(&general) <= tol;
    let verdicts_agree = is_realizable == (max_abs(&intermediate) <= tol);
    let case = classify_special_case(sys);
    let case_residuals = special_case_residuals(sys, p, case, k);
    Ok(EstimatorPRReport {
        general_residual: general,
        intermediate_residual: intermediate,
        case,
        case_residuals,
        is_realizable,
        verdicts_agree,
    })
}

/// Scalar constraint for the `n = 2, n_y = 2, n_w = 4, Theta = J` family
/// with `B' J B'^T = 0`:
///
/// ```text
/// 2 p1 (-b4^2 - b3^2) + 2 p2 (2 b1 b3 + 2 b2 b4) + 2 p4 (-b1^2 - b2^2) - det(B'')
/// ```
pub fn n2_specialized_check(sys: &QuantumLinearSystem, p: &DMatrix<f64>) -> Result<f64> {
    if sys.n() != 2 || sys.n_y != 2 || sys.n_w() != 4 {
        return Err(QlinError::Precondition(
            "specialized check needs n = 2, n_y = 2, n_w = 4".into(),
        ));
    }
    if sys.comm.kind != ThetaKind::Canonical {
        return Err(QlinError::Precondition("specialized check needs Theta = J".into()));
    }
    let bp = sys.b_prime();
    if max_abs(&(&bp * diag_j(1) * bp.transpose())) > 1e-10 {
        return Err(QlinError::Precondition("specialized check needs B' J B'^T = 0".into()));
    }
    let (b1, b2, b3, b4) = (bp[(0, 0)], bp[(0, 1)], bp[(1, 0)], bp[(1, 1)]);
    let (p1, p2, p4) = (p[(0, 0)], p[(0, 1)], p[(1, 1)]);
    let bpp = sys.b_second();
    let det_bpp = bpp[(0, 0)] * bpp[(1, 1)] - bpp[(0, 1)] * bpp[(1, 0)];
    Ok(2.0 * p1 * (-b4 * b4 - b3 * b3)
        + 2.0 * p2 * (2.0 * b1 * b3 + 2.0 * b2 * b4)
        + 2.0 * p4 * (-b1 * b1 - b2 * b2)
        - det_bpp)
}

/// Factor `-S = b diag_{n_v/2}(J) b^T` for skew `S`, trimming zero blocks.
fn factor_vacuum_coupling(s: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = s.nrows();
    let target = -s;
    if n == 2 {
        // canonical 2x2 choice matching diagonal couplings: -S = s J
        let val = target[(0, 1)];
        if val.abs() <= tol {
            return Ok(DMatrix::zeros(2, 0));
        }
        if val > 0.0 {
            return Ok(DMatrix::identity(2, 2).scale(val.sqrt()));
        }
        // reoriented pair: swapped columns of the scaled identity
        let r = (-val).sqrt();
        return Ok(DMatrix::from_row_slice(2, 2, &[0.0, r, r, 0.0]));
    }
    let form = skew_canonical(&target, tol)?;
    let n_v = 2 * form.mu.len();
    let mut b = DMatrix::zeros(n, n_v);
    for (idx, (&mu, &start)) in form.mu.iter().zip(&form.block_start).enumerate() {
        let scale = mu.sqrt();
        b.set_column(2 * idx, &form.q.column(start).scale(scale));
        b.set_column(2 * idx + 1, &form.q.column(start + 1).scale(scale));
    }
    Ok(b)
}

/// Augmented realizability residual
/// `(A-KC) Theta + Theta (A-KC)^T + K diag(J) K^T + b diag(J) b^T`.
pub fn augmented_pr_residual(
    sys: &QuantumLinearSystem,
    k: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> DMatrix<f64> {
    let mut res = estimator_pr_intermediate_residual(sys, k);
    if b.ncols() > 0 {
        res += b * diag_j(b.ncols() / 2) * b.transpose();
    }
    res
}

/// Build a coherent observer: factor the realizability defect of the
/// estimator into a vacuum-noise coupling `b`, then integrate the augmented
/// Riccati flow for the error covariance.
///
/// `n_v` requests a coupling width; `None` uses one vacuum pair per nonzero
/// skew block (zero blocks trimmed). Requesting fewer channels than the
/// defect needs is an error; requesting more pads zero columns.
pub fn make_coherent_observer(
    sys: &QuantumLinearSystem,
    synthesis: &EstimatorSynthesis,
    n_v: Option<usize>,
    cfg: &SolverConfig,
) -> Result<CoherentObserver> {
    let k = synthesis
        .k_steady
        .as_ref()
        .ok_or_else(|| QlinError::Precondition("synthesis carries no steady gain".into()))?;
    let a_cl = &sys.a - k * &sys.c;
    if !is_hurwitz(&a_cl) {
        return Err(QlinError::Precondition(
            "A - K C must be Hurwitz for the observer to track the plant".into(),
        ));
    }
    let defect = estimator_pr_intermediate_residual(sys, k);
    if max_abs(&defect) <= 1e-8 {
        return Err(QlinError::Precondition(
            "estimator is already physically realizable; no augmentation needed".into(),
        ));
    }
    let mut b = factor_vacuum_coupling(&defect, 1e-12)?;
    if let Some(want) = n_v {
        if want % 2 != 0 {
            return Err(QlinError::Dimension(format!("n_v must be even, got {want}")));
        }
        if want < b.ncols() {
            return Err(QlinError::InfeasibleAugmentation(format!(
                "defect needs {} vacuum channels, only {} requested",
                b.ncols(),
                want
            )));
        }
        if want > b.ncols() {
            let mut padded = DMatrix::zeros(sys.n(), want);
            padded.view_mut((0, 0), (sys.n(), b.ncols())).copy_from(&b);
            b = padded;
        }
    }
    let n_v = b.ncols();

    let residual_norm = max_abs(&augmented_pr_residual(sys, k, &b));

    // Error covariance of the augmented estimator: the same substituted
    // Riccati flow with the extra constant term b b^T, i.e. the flow of the
    // plant with noise matrix [B b].
    let mut b_aug = DMatrix::zeros(sys.n(), sys.n_w() + n_v);
    b_aug
        .view_mut((0, 0), (sys.n(), sys.n_w()))
        .copy_from(&sys.b);
    b_aug
        .view_mut((0, sys.n_w()), (sys.n(), n_v))
        .copy_from(&b);
    let mut d_aug = DMatrix::zeros(sys.n_y, sys.n_w() + n_v);
    for i in 0..sys.n_y {
        d_aug[(i, i)] = 1.0;
    }
    let p0 = synthesis
        .p_schedule
        .first()
        .map(|(_, p)| p.clone())
        .unwrap_or_else(|| DMatrix::identity(sys.n(), sys.n()));
    let aug = solve_steady_riccati_unchecked(&sys.a, &b_aug, &sys.c, &d_aug, &p0, cfg)?;
    let p_tilde = aug.steady_p()?.clone();
    let j_tilde = p_tilde.trace();

    Ok(CoherentObserver {
        a_obs: a_cl,
        k: k.clone(),
        b,
        n_v,
        p_tilde,
        j_tilde,
        residual_norm,
        hurwitz: true,
    })
}
