//! Computes one standing wave on the branch and checks it against direct
//! time integration of the scalar equation over one period `2πq`.
//!
//! ```text
//! cargo run --release --example standing_wave_validation
//! ```

use vortex_filaments::continuation::{newton_correct, predictor, BRANCH_TOLERANCE};
use vortex_filaments::evolution::{validate_standing_wave, ValidationSettings};
use vortex_filaments::field::Grid2D;
use vortex_filaments::residual::ResidualWorkspace;
use vortex_filaments::spectrum::bifurcation_frequency;

fn main() -> vortex_filaments::Result<()> {
    let bif = bifurcation_frequency(2, 1)?;
    let ws = ResidualWorkspace::new(Grid2D::for_truncation(32, 32)?, bif.q, 4)?;
    let b = 5e-3;
    let (guess, omega) = predictor(&bif, b, *ws.grid())?;
    let point = newton_correct((&guess, omega), b, &bif, &ws, BRANCH_TOLERANCE, 25)?;
    println!(
        "b = {b}, omega = {:.15}, residual = {:.2e}, iterations = {}",
        point.omega, point.residual_norm, point.newton_iters
    );
    for dt in [1e-2, 5e-3, 2.5e-3, 1e-4] {
        let report = validate_standing_wave(&point, &bif, ValidationSettings { dt, ..Default::default() })?;
        println!(
            "dt = {dt:.1e}: deviation {:.3e}, ansatz residual {:.3e}, mass drift {:.1e}, energy drift {:.1e}",
            report.deviation, report.ansatz_residual, report.mass_drift, report.energy_drift
        );
    }
    Ok(())
}
