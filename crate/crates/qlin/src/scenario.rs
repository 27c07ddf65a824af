//! Scenario file ingestion and report serialization.
//!
//! A scenario is a JSON document carrying the system matrices (row-major
//! nested arrays), the commutation structure, and optional solver and
//! coherent-observer settings. Reports mirror the structures produced by the
//! pipeline, serialized with matrices as nested arrays.

use std::io::Write as IoWrite;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{QlinError, Result};
use crate::estimator::CoherentObserver;
use crate::filter::{EstimatorSynthesis, SolverConfig, SteadyStatus};
use crate::model::{
    make_canonical_theta, make_degenerate_theta, NoiseSpec, QuantumLinearSystem,
};
use crate::moments::JointMomentState;
use crate::realizability::RealizabilityReport;

/// Commutation structure selector in a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ThetaSpecFile {
    /// `"canonical"` or `"degenerate"`.
    pub kind: String,
    /// Number of leading classical variables; required for `"degenerate"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_prime: Option<usize>,
}

/// Optional solver settings in a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

/// Optional coherent-observer settings in a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CoherentSection {
    pub enabled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_v: Option<usize>,
}

/// On-disk scenario description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub n: usize,
    pub n_w: usize,
    pub n_y: usize,
    pub theta: ThetaSpecFile,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherent: Option<CoherentSection>,
}

/// Convert row-major nested arrays into a matrix, checking the shape.
pub fn rows_to_matrix(name: &str, rows: &[Vec<f64>], nr: usize, nc: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nr {
        return Err(QlinError::Parse(format!(
            "{name}: expected {nr} rows, found {}",
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != nc {
            return Err(QlinError::Parse(format!(
                "{name}: row {i} has {} entries, expected {nc}",
                row.len()
            )));
        }
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Row-major nested arrays from a matrix, for report serialization.
pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl Scenario {
    /// Parse a scenario from a JSON string.
    pub fn from_json(text: &str) -> Result<Scenario> {
        serde_json::from_str(text).map_err(|e| QlinError::Parse(e.to_string()))
    }

    /// Read and parse a scenario file.
    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QlinError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical serialized form; parsing it back yields an equal scenario.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    /// Build the validated system this scenario describes.
    pub fn to_system(&self) -> Result<QuantumLinearSystem> {
        let comm = match self.theta.kind.as_str() {
            "canonical" => make_canonical_theta(self.n)?,
            "degenerate" => {
                let n_prime = self.theta.n_prime.ok_or_else(|| {
                    QlinError::Parse("theta.n_prime is required for kind \"degenerate\"".into())
                })?;
                make_degenerate_theta(self.n, n_prime)?
            }
            other => {
                return Err(QlinError::Parse(format!(
                    "theta.kind must be \"canonical\" or \"degenerate\", got \"{other}\""
                )))
            }
        };
        let a = rows_to_matrix("A", &self.a, self.n, self.n)?;
        let b = rows_to_matrix("B", &self.b, self.n, self.n_w)?;
        let c = rows_to_matrix("C", &self.c, self.n_y, self.n)?;
        let d = rows_to_matrix("D", &self.d, self.n_y, self.n_w)?;
        QuantumLinearSystem::new(a, b, c, d, comm, NoiseSpec::vacuum(self.n_w)?)
    }

    /// Initial covariance; identity when the file does not specify one.
    pub fn p0_matrix(&self) -> Result<DMatrix<f64>> {
        match &self.p0 {
            Some(rows) => rows_to_matrix("p0", rows, self.n, self.n),
            None => Ok(DMatrix::identity(self.n, self.n)),
        }
    }

    /// Solver configuration with file-level settings applied over defaults.
    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(s) = &self.solver {
            if let Some(dt) = s.dt {
                cfg.dt = dt;
            }
            if let Some(h) = s.horizon {
                cfg.horizon = h;
            }
            if let Some(t) = s.tol {
                cfg.tol = t;
            }
        }
        cfg
    }
}

/// Serialized realizability report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrReportJson {
    pub scenario: String,
    pub realizable: bool,
    pub pr_residual_dyn: Vec<Vec<f64>>,
    pub pr_residual_out: Vec<Vec<f64>>,
    pub max_residual: f64,
    pub nondemolition_residual: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_re: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_im: Option<Vec<Vec<f64>>>,
}

impl PrReportJson {
    pub fn from_report(name: &str, report: &RealizabilityReport) -> PrReportJson {
        let max_residual = crate::model::max_abs(&report.pr_residual_dyn)
            .max(crate::model::max_abs(&report.pr_residual_out));
        PrReportJson {
            scenario: name.to_string(),
            realizable: report.is_realizable,
            pr_residual_dyn: matrix_to_rows(&report.pr_residual_dyn),
            pr_residual_out: matrix_to_rows(&report.pr_residual_out),
            max_residual,
            nondemolition_residual: matrix_to_rows(&report.nondemolition_residual),
            r: report.r.as_ref().map(matrix_to_rows),
            lambda_re: report.lambda.as_ref().map(|l| matrix_to_rows(&l.re)),
            lambda_im: report.lambda.as_ref().map(|l| matrix_to_rows(&l.im)),
        }
    }
}

/// Serialized steady-state synthesis report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyReportJson {
    pub scenario: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<Vec<f64>>>,
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    pub hurwitz: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

/// Human-readable convergence status for reports.
pub fn status_string(status: &SteadyStatus) -> String {
    match status {
        SteadyStatus::Converged => "converged".into(),
        SteadyStatus::NonConvergent { residual } => format!("non-convergent ({residual:.3e})"),
        SteadyStatus::NonUnique { spread } => format!("non-unique ({spread:.3e})"),
    }
}

impl SteadyReportJson {
    pub fn from_synthesis(name: &str, syn: &EstimatorSynthesis) -> SteadyReportJson {
        let residual = match &syn.status {
            SteadyStatus::NonConvergent { residual } => Some(*residual),
            _ => None,
        };
        SteadyReportJson {
            scenario: name.to_string(),
            status: status_string(&syn.status),
            p: syn.p_steady.as_ref().map(matrix_to_rows),
            k: syn.k_steady.as_ref().map(matrix_to_rows),
            j: syn.j_perf,
            hurwitz: syn.hurwitz,
            residual,
        }
    }
}

/// Serialized coherent-observer report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherentReportJson {
    pub scenario: String,
    pub k: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub n_v: usize,
    pub p_tilde: Vec<Vec<f64>>,
    #[serde(rename = "J_tilde")]
    pub j_tilde: f64,
    pub residual_norm: f64,
    pub hurwitz: bool,
}

impl CoherentReportJson {
    pub fn from_observer(name: &str, obs: &CoherentObserver) -> CoherentReportJson {
        CoherentReportJson {
            scenario: name.to_string(),
            k: matrix_to_rows(&obs.k),
            b: matrix_to_rows(&obs.b),
            n_v: obs.n_v,
            p_tilde: matrix_to_rows(&obs.p_tilde),
            j_tilde: obs.j_tilde,
            residual_norm: obs.residual_norm,
            hurwitz: obs.hurwitz,
        }
    }
}

fn upper_triangle_headers(prefix: &str, n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            out.push(format!("{prefix}{}{}", i + 1, j + 1));
        }
    }
    out
}

fn push_upper_triangle(row: &mut Vec<String>, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            row.push(format!("{:.12e}", m[(i, j)]));
        }
    }
}

/// CSV export of a synthesis run: `t`, upper triangle of `P`, all of `K`
/// (row-major), `trace(P)`.
pub fn write_filter_trajectory<W: IoWrite>(
    out: &mut W,
    syn: &EstimatorSynthesis,
) -> std::io::Result<()> {
    let Some((_, p0)) = syn.p_schedule.first() else {
        return Ok(());
    };
    let n = p0.nrows();
    let n_y = syn.k_schedule.first().map_or(0, |(_, k)| k.ncols());
    let mut header = vec!["t".to_string()];
    header.extend(upper_triangle_headers("P", n));
    for i in 0..n {
        for j in 0..n_y {
            header.push(format!("K{}{}", i + 1, j + 1));
        }
    }
    header.push("traceP".into());
    writeln!(out, "{}", header.join(","))?;
    for ((t, p), (_, k)) in syn.p_schedule.iter().zip(&syn.k_schedule) {
        let mut row = vec![format!("{t:.6}")];
        push_upper_triangle(&mut row, p);
        for i in 0..k.nrows() {
            for j in 0..k.ncols() {
                row.push(format!("{:.12e}", k[(i, j)]));
            }
        }
        row.push(format!("{:.12e}", p.trace()));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// CSV export of a joint-moment trajectory: `t`, mean components, upper
/// triangle of `Sigma`, and the trace of the extracted error covariance.
pub fn write_moment_trajectory<W: IoWrite>(
    out: &mut W,
    traj: &[(f64, JointMomentState)],
) -> std::io::Result<()> {
    let Some((_, first)) = traj.first() else {
        return Ok(());
    };
    let n2 = first.mean.nrows();
    let mut header = vec!["t".to_string()];
    for i in 0..n2 {
        header.push(format!("mean{}", i + 1));
    }
    header.extend(upper_triangle_headers("S", n2));
    header.push("errTrace".into());
    writeln!(out, "{}", header.join(","))?;
    for (t, state) in traj {
        let mut row = vec![format!("{t:.6}")];
        for i in 0..n2 {
            row.push(format!("{:.12e}", state.mean[(i, 0)]));
        }
        push_upper_triangle(&mut row, &state.sigma);
        let err = crate::moments::extract_error_covariance(&state.sigma)
            .map(|e| e.trace())
            .unwrap_or(f64::NAN);
        row.push(format!("{err:.12e}"));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
