//! Regular polygons across n and a nested two-ring configuration found by
//! Newton from a seed.
//!
//! ```text
//! cargo run --example central_configurations
//! ```

use vortex_filaments::central_config::{jacobian_singular_values, nested_polygon_seed, polygon_config, solve_cc, CcSolveOptions};

fn main() -> vortex_filaments::Result<()> {
    println!("{:>3} {:>6} {:>10} {:>10} {:>10}", "n", "kappa", "radius", "residual", "sigma_min");
    for n in 2..=8 {
        let kappa = (n as f64 - 1.0) / 2.0 + 1.0;
        let cfg = polygon_config(n, kappa)?;
        let mut sv = jacobian_singular_values(&cfg.points, kappa);
        sv.sort_by(f64::total_cmp);
        println!(
            "{n:>3} {kappa:>6.2} {:>10.6} {:>10.2e} {:>10.2e}",
            cfg.points[0].norm(),
            cfg.residual()?,
            sv[0]
        );
    }

    let seed = nested_polygon_seed(3, &[0.7, 1.5], &[0.0, std::f64::consts::FRAC_PI_6])?;
    let sol = solve_cc(&seed, 4.0, CcSolveOptions::default())?;
    println!("\nnested 3+3, kappa = 4: {} iterations, residual {:.2e}", sol.iterations, sol.config.residual()?);
    for z in &sol.config.points {
        println!("  r = {:.6}, arg = {:+.6}", z.norm(), z.arg());
    }
    Ok(())
}
