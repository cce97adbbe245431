//! Evolves homographic filament data `u_j = w a_j` with the full filament
//! system and compares against the scalar equation for `w`.
//!
//! ```text
//! cargo run --release --example homographic_closure
//! ```

use vortex_filaments::central_config::polygon_config;
use vortex_filaments::evolution::{step_plan, FilamentStepper, FilamentState, PdeStepper, ScalarWave};
use vortex_filaments::rustfft::num_complex::Complex64;

fn main() -> vortex_filaments::Result<()> {
    let cfg = polygon_config(3, 2.0)?;
    let ns = 64;
    let (steps, dt) = step_plan(1.0, 1e-4)?;
    let cases = [
        ("constant", ScalarWave::constant(ns, Complex64::new(1.0, 0.0))?),
        (
            "modulated",
            ScalarWave::from_fn(ns, |s| Complex64::new(1.0 + 0.1 * s.cos(), 0.05 * (2.0 * s).sin()))?,
        ),
    ];
    for (name, w) in cases {
        let state = FilamentState::homographic(cfg.clone(), &w)?;
        let filaments = FilamentStepper::new(&cfg, ns, dt)?.evolve(&state, steps, |_, _| {})?;
        let scalar = PdeStepper::new(ns, dt)?.evolve(&w, steps, |_, _| {})?;
        println!(
            "{name:>9}: max_j |u_j(1) - w(1) a_j| = {:.3e}, center drift {:.3e}",
            filaments.homographic_distance(&scalar),
            filaments.curves[0].iter().map(|u| u.norm()).fold(0.0, f64::max)
        );
    }
    Ok(())
}
