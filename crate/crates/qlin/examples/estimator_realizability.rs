//! Realizability of the synthesized estimator itself: the degenerate
//! parametric amplifier yields a perfectly good filter that nevertheless
//! fails the estimator realizability conditions.
//!
//! Run with: cargo run --example estimator_realizability

use qlin::estimator::classify_special_case;
use qlin::model::max_abs;
use qlin::{check_estimator_pr, solve_steady_riccati, Scenario};
use std::path::Path;

fn main() -> qlin::Result<()> {
    for name in ["cavity", "dpa", "atom_cavity"] {
        let sc = Scenario::from_path(Path::new(&format!("crates/qlin/scenarios/{name}.json")))?;
        let sys = sc.to_system()?;
        let syn = solve_steady_riccati(&sys, &sc.p0_matrix()?, &sc.solver_config())?;
        let report = check_estimator_pr(&sys, &syn, 1e-8)?;
        println!("{name}:");
        println!("  special case: {:?}", classify_special_case(&sys));
        println!("  estimator realizable: {}", report.is_realizable);
        println!(
            "  simplified residual max |.|: {:.4e}",
            max_abs(&report.general_residual)
        );
        println!(
            "  gain-form residual max |.|: {:.4e}",
            max_abs(&report.intermediate_residual)
        );
        println!("  both forms agree: {}", report.verdicts_agree);
        for (label, res) in &report.case_residuals {
            println!("  case residual {label}: {:.4e}", max_abs(res));
        }
    }
    Ok(())
}
