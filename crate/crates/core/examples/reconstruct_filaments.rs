//! Computes a short branch at low truncation and rebuilds the n + 1 filament
//! curves of its last point over one period.
//!
//! ```text
//! cargo run --example reconstruct_filaments
//! ```

use std::f64::consts::PI;

use vortex_filaments::central_config::polygon_config;
use vortex_filaments::continuation::{continue_branch, BranchSettings};
use vortex_filaments::evolution::reconstruct;
use vortex_filaments::field::Grid2D;
use vortex_filaments::residual::ResidualWorkspace;
use vortex_filaments::spectrum::bifurcation_frequency;

fn main() -> vortex_filaments::Result<()> {
    let bif = bifurcation_frequency(2, 1)?;
    let grid = Grid2D::for_truncation(12, 12)?;
    let ws = ResidualWorkspace::new(grid, bif.q, 4)?;
    let settings = BranchSettings { db: 2e-3, b_max: 2e-2, db_min: 2e-3 / 64.0, ..Default::default() };
    let branch = continue_branch(&bif, settings, &ws)?;
    let point = branch.points.last().expect("branch has points");
    println!("b = {:.3e}, omega = {:.10}, residual {:.1e}", point.b, point.omega, point.residual_norm);

    let cfg = polygon_config(3, 2.0)?;
    let period = 2.0 * PI * bif.q as f64;
    for step in 0..=4 {
        let t = period * step as f64 / 4.0;
        let curves = reconstruct(point, &bif, &cfg, t, 64)?;
        let spread: Vec<String> = curves[1..]
            .iter()
            .map(|c| {
                let (lo, hi) = c.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), z| (lo.min(z.norm()), hi.max(z.norm())));
                format!("[{lo:.5}, {hi:.5}]")
            })
            .collect();
        println!("t = {t:6.3}: |u_j| ranges {}", spread.join(" "));
    }
    Ok(())
}
