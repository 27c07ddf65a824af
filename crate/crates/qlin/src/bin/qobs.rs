//! Scenario-driven front end: realizability checks, estimator synthesis,
//! coherent-observer construction, and joint-moment simulation over JSON
//! scenario files.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use qlin::error::QlinError;
use qlin::filter::{solve_steady_riccati, SolverConfig, SteadyStatus};
use qlin::model::max_abs;
use qlin::moments::{assemble_joint, propagate_moments, JointMomentState};
use qlin::scenario::{
    write_filter_trajectory, write_moment_trajectory,
    CoherentReportJson, PrReportJson, Scenario, SteadyReportJson,
};

const EXIT_CODES: &str = "Exit codes:
  0  success
  1  plant (or estimator) is not physically realizable
  2  scenario file could not be read or parsed
  3  numerical failure (singular D D^T, invalid dimensions or domain)
  4  Riccati flow non-convergent or steady state non-unique
  5  vacuum-noise augmentation infeasible

Environment:
  QOBS_LOG   set to any non-empty value for progress logging on stderr";

#[derive(Parser)]
#[command(
    name = "qobs",
    version,
    about = "Estimator synthesis and realizability analysis for linear quantum stochastic systems",
    after_help = EXIT_CODES
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check physical realizability of the plant in a scenario file.
    CheckPr(RunArgs),
    /// Solve the steady-state Riccati flow and report P, K, J.
    SolveFilter(RunArgs),
    /// Build a coherent observer by vacuum-noise augmentation.
    MakeCoherent(RunArgs),
    /// Propagate joint plant/estimator moments and export a CSV trajectory.
    Simulate(RunArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario files to process.
    #[arg(required = true)]
    scenarios: Vec<PathBuf>,

    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write the solver trajectory CSV to this path.
    #[arg(long)]
    trajectory: Option<PathBuf>,

    /// Integration step override.
    #[arg(long)]
    dt: Option<f64>,

    /// Integration horizon override.
    #[arg(long)]
    horizon: Option<f64>,

    /// Convergence tolerance override.
    #[arg(long)]
    tol: Option<f64>,

    /// Number of scenarios to run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn log(msg: &str) {
    if std::env::var("QOBS_LOG").map_or(false, |v| !v.is_empty()) {
        eprintln!("qobs: {msg}");
    }
}

fn exit_code_for(err: &QlinError) -> u8 {
    match err {
        QlinError::Parse(_) => 2,
        QlinError::InfeasibleAugmentation(_) => 5,
        _ => 3,
    }
}

/// Per-scenario outcome: textual report plus the exit code it implies.
struct Outcome {
    report: String,
    trajectory: Option<String>,
    code: u8,
}

fn solver_config(sc: &Scenario, args: &RunArgs) -> SolverConfig {
    let mut cfg = sc.solver_config();
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    cfg
}

fn json_line<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialization cannot fail")
}

fn run_check_pr(sc: &Scenario, args: &RunArgs) -> Result<Outcome, QlinError> {
    let sys = sc.to_system()?;
    let tol = args.tol.unwrap_or(1e-9);
    let report = qlin::realizability::check_plant_pr(&sys, tol)?;
    let json = PrReportJson::from_report(&sc.name, &report);
    let text = match args.format {
        Format::Json => json_line(&json),
        Format::Csv => format!(
            "scenario,realizable,max_residual\n{},{},{:.6e}",
            sc.name, json.realizable, json.max_residual
        ),
    };
    Ok(Outcome {
        report: text,
        trajectory: None,
        code: if report.is_realizable { 0 } else { 1 },
    })
}

fn run_solve_filter(sc: &Scenario, args: &RunArgs) -> Result<Outcome, QlinError> {
    let sys = sc.to_system()?;
    let cfg = solver_config(sc, args);
    let syn = solve_steady_riccati(&sys, &sc.p0_matrix()?, &cfg)?;
    let code = match syn.status {
        SteadyStatus::Converged => 0,
        _ => 4,
    };
    let json = SteadyReportJson::from_synthesis(&sc.name, &syn);
    let report = match args.format {
        Format::Json => json_line(&json),
        Format::Csv => {
            let mut buf = Vec::new();
            write_filter_trajectory(&mut buf, &syn).expect("in-memory write");
            String::from_utf8(buf).expect("csv is utf-8")
        }
    };
    let trajectory = args.trajectory.as_ref().map(|_| {
        let mut buf = Vec::new();
        write_filter_trajectory(&mut buf, &syn).expect("in-memory write");
        String::from_utf8(buf).expect("csv is utf-8")
    });
    Ok(Outcome {
        report,
        trajectory,
        code,
    })
}

fn run_make_coherent(sc: &Scenario, args: &RunArgs) -> Result<Outcome, QlinError> {
    let sys = sc.to_system()?;
    let cfg = solver_config(sc, args);
    let syn = solve_steady_riccati(&sys, &sc.p0_matrix()?, &cfg)?;
    if !matches!(syn.status, SteadyStatus::Converged) {
        return Ok(Outcome {
            report: json_line(&SteadyReportJson::from_synthesis(&sc.name, &syn)),
            trajectory: None,
            code: 4,
        });
    }
    let n_v = sc.coherent.as_ref().and_then(|c| c.n_v);
    let obs = qlin::estimator::make_coherent_observer(&sys, &syn, n_v, &cfg)?;
    let json = CoherentReportJson::from_observer(&sc.name, &obs);
    let report = match args.format {
        Format::Json => json_line(&json),
        Format::Csv => format!(
            "scenario,J_tilde,n_v,residual_norm,hurwitz\n{},{:.6},{},{:.6e},{}",
            sc.name, obs.j_tilde, obs.n_v, obs.residual_norm, obs.hurwitz
        ),
    };
    Ok(Outcome {
        report,
        trajectory: None,
        code: 0,
    })
}

fn run_simulate(sc: &Scenario, args: &RunArgs) -> Result<Outcome, QlinError> {
    let sys = sc.to_system()?;
    let cfg = solver_config(sc, args);
    let p0 = sc.p0_matrix()?;
    let syn = solve_steady_riccati(&sys, &p0, &cfg)?;
    if !matches!(syn.status, SteadyStatus::Converged) {
        return Ok(Outcome {
            report: json_line(&SteadyReportJson::from_synthesis(&sc.name, &syn)),
            trajectory: None,
            code: 4,
        });
    }
    let coherent = sc.coherent.as_ref().map_or(false, |c| c.enabled);
    let (gain, coupling) = if coherent {
        let obs = qlin::estimator::make_coherent_observer(&sys, &syn, None, &cfg)?;
        // gain that is optimal for the augmented noise model
        let k = sys.b_prime() + &obs.p_tilde * sys.c.transpose();
        (k, Some(obs.b))
    } else {
        (syn.k_steady.clone().expect("converged synthesis"), None)
    };
    let joint = assemble_joint(&sys, &gain, coupling.as_ref())?;
    let n = sys.n();
    let mut sigma0 = DMatrix::zeros(2 * n, 2 * n);
    sigma0.view_mut((0, 0), (n, n)).copy_from(&p0);
    let state0 = JointMomentState {
        mean: DMatrix::zeros(2 * n, 1),
        sigma: sigma0,
    };
    let stride = ((cfg.horizon / cfg.dt / 400.0).ceil() as usize).max(1);
    let traj = propagate_moments(&joint, &state0, cfg.horizon, cfg.dt, stride)?;

    // independent cross-check: Riccati flow at the same fixed gain
    let mut p = p0.clone();
    let mut deviation: f64 = 0.0;
    let mut idx = 1usize;
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    for s in 0..steps {
        let bbt_extra = coupling
            .as_ref()
            .map(|b| b * b.transpose())
            .unwrap_or_else(|| DMatrix::zeros(n, n));
        p = qlin::integrate::rk4_step(
            |m| {
                let a_cl = &sys.a - &gain * &sys.c;
                let noise = &sys.b - &gain * &sys.d;
                &a_cl * m + m * a_cl.transpose() + &noise * noise.transpose() + &bbt_extra
            },
            &p,
            cfg.dt,
        );
        p = (&p + p.transpose()).scale(0.5);
        if idx < traj.len() && ((s + 1) % stride == 0 || s + 1 == steps) {
            let e = qlin::moments::extract_error_covariance(&traj[idx].1.sigma)?;
            deviation = deviation.max(max_abs(&(e - &p)));
            idx += 1;
        }
    }

    let mut buf = Vec::new();
    write_moment_trajectory(&mut buf, &traj).expect("in-memory write");
    let mut text = String::from_utf8(buf).expect("csv is utf-8");
    text.push_str(&format!("max_deviation,{deviation:.12e}\n"));
    Ok(Outcome {
        report: text,
        trajectory: None,
        code: 0,
    })
}

fn run_one(cmd: &Cmd, sc_path: &PathBuf, args: &RunArgs) -> (String, Option<String>, u8) {
    log(&format!("running {}", sc_path.display()));
    let result = Scenario::from_path(sc_path).and_then(|sc| match cmd {
        Cmd::CheckPr(_) => run_check_pr(&sc, args),
        Cmd::SolveFilter(_) => run_solve_filter(&sc, args),
        Cmd::MakeCoherent(_) => run_make_coherent(&sc, args),
        Cmd::Simulate(_) => run_simulate(&sc, args),
    });
    match result {
        Ok(outcome) => (outcome.report, outcome.trajectory, outcome.code),
        Err(err) => {
            let code = exit_code_for(&err);
            let report = json_line(&serde_json::json!({
                "scenario": sc_path.display().to_string(),
                "error": err.to_string(),
                "exit_code": code,
            }));
            (report, None, code)
        }
    }
}

fn emit(args: &RunArgs, text: &str) -> anyhow::Result<()> {
    match &args.out {
        Some(path) => std::fs::write(path, text.as_bytes())
            .with_context(|| format!("writing {}", path.display()))?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                lock.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match &cli.cmd {
        Cmd::CheckPr(a) | Cmd::SolveFilter(a) | Cmd::MakeCoherent(a) | Cmd::Simulate(a) => a,
    };

    let jobs = args.jobs.max(1);
    let mut results: Vec<(String, Option<String>, u8)> = Vec::new();
    if jobs == 1 || args.scenarios.len() == 1 {
        for path in &args.scenarios {
            results.push(run_one(&cli.cmd, path, args));
        }
    } else {
        // fixed chunking keeps the merged report order deterministic
        let outputs: Vec<_> = std::thread::scope(|scope| {
            args.scenarios
                .chunks(args.scenarios.len().div_ceil(jobs))
                .map(|chunk| {
                    scope.spawn(|| {
                        chunk
                            .iter()
                            .map(|p| run_one(&cli.cmd, p, args))
                            .collect::<Vec<_>>()
                    })
                })
                .collect::<Vec<_>>()
                .into_iter()
                .map(|h| h.join().expect("worker thread panicked"))
                .collect()
        });
        results = outputs.into_iter().flatten().collect();
    }

    let worst = results.iter().map(|(_, _, c)| *c).max().unwrap_or(0);
    let merged = if results.len() == 1 {
        results[0].0.clone()
    } else if args.format == Format::Json {
        format!(
            "[\n{}\n]",
            results
                .iter()
                .map(|(r, _, _)| r.clone())
                .collect::<Vec<_>>()
                .join(",\n")
        )
    } else {
        results
            .iter()
            .map(|(r, _, _)| r.clone())
            .collect::<Vec<_>>()
            .join("\n")
    };
    if let Err(e) = emit(args, &merged) {
        eprintln!("qobs: {e:#}");
        return ExitCode::from(3);
    }
    if let Some(path) = &args.trajectory {
        let body = results
            .iter()
            .filter_map(|(_, t, _)| t.clone())
            .collect::<Vec<_>>()
            .join("\n");
        if let Err(e) = std::fs::write(path, body.as_bytes()) {
            eprintln!("qobs: writing {}: {e}", path.display());
            return ExitCode::from(3);
        }
    }
    ExitCode::from(worst)
}
