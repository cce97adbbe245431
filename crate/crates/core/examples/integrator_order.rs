//! Measures the global convergence order of the two time integrators against
//! fine-step reference solutions.
//!
//! ```text
//! cargo run --release --example integrator_order
//! ```

use vortex_filaments::central_config::polygon_config;
use vortex_filaments::evolution::{step_plan, FilamentStepper, FilamentState, PdeStepper, ScalarWave};
use vortex_filaments::rustfft::num_complex::Complex64;

fn slope(dts: &[f64], errors: &[f64]) -> f64 {
    let n = dts.len() as f64;
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn main() -> vortex_filaments::Result<()> {
    let horizon = 1.0;
    let dts = [0.1, 0.05, 0.025, 0.0125];

    let ns = 32;
    let w0 = ScalarWave::from_fn(ns, |s| Complex64::new(2.0 + 0.2 * s.cos(), 0.1 * (2.0 * s).sin()))?;
    let run_pde = |dt: f64| -> vortex_filaments::Result<ScalarWave> {
        let (steps, dt) = step_plan(horizon, dt)?;
        PdeStepper::new(ns, dt)?.evolve(&w0, steps, |_, _| {})
    };
    let reference = run_pde(1e-5)?;
    let errors: Vec<f64> = dts
        .iter()
        .map(|&dt| run_pde(dt).map(|w| w.max_distance(&reference)))
        .collect::<Result<_, _>>()?;
    println!("splitting errors {:?}, order {:.3}", errors, slope(&dts, &errors));

    let cfg = polygon_config(3, 2.0)?;
    let curves: Vec<Vec<Complex64>> = cfg
        .positions_with_center()
        .iter()
        .enumerate()
        .map(|(j, &a)| {
            (0..ns)
                .map(|m| {
                    let s = 2.0 * std::f64::consts::PI * m as f64 / ns as f64;
                    a * Complex64::new(1.0 + 0.1 * (s + j as f64).cos(), 0.05 * s.sin())
                        + Complex64::new(0.02 * (2.0 * s).cos(), 0.0)
                })
                .collect()
        })
        .collect();
    let state = FilamentState::new(cfg.clone(), curves, 0.0)?;
    let run_fil = |dt: f64| -> vortex_filaments::Result<FilamentState> {
        let (steps, dt) = step_plan(horizon, dt)?;
        FilamentStepper::new(&cfg, ns, dt)?.evolve(&state, steps, |_, _| {})
    };
    let reference = run_fil(1e-4)?;
    let errors: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            run_fil(dt).map(|s| {
                s.curves
                    .iter()
                    .zip(&reference.curves)
                    .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
                    .fold(0.0, f64::max)
            })
        })
        .collect::<Result<_, _>>()?;
    println!("filament errors {:?}, order {:.3}", errors, slope(&dts, &errors));
    Ok(())
}
