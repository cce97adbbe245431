//! Bifurcation frequencies, their resonant sets, and the certified spectral
//! gap across a frequency sweep.
//!
//! ```text
//! cargo run --example spectrum_scan
//! ```

use vortex_filaments::spectrum::{bifurcation_frequency, certify_gap, resonant_set, OperatorParams, DEFAULT_EPSILON};

fn main() -> vortex_filaments::Result<()> {
    println!("{:>2} {:>3} {:>4} {:>12} {:>9}", "q", "k0", "j0", "omega0", "resonant");
    for q in 1..=3 {
        for k0 in 1..=3 {
            let Ok(bif) = bifurcation_frequency(q, k0) else { continue };
            let sites = resonant_set(&bif.params(), 400, 80);
            println!("{q:>2} {k0:>3} {:>4} {:>12.8} {:>9}", bif.j0, bif.omega0, sites.len());
        }
    }

    let eps = DEFAULT_EPSILON;
    for q in 1..=3 {
        let (lo, hi) = (2.0 * eps, 1.0 / q as f64 - 2.0 * eps);
        let mut worst = (f64::INFINITY, 0.0);
        for i in 0..50 {
            let omega = -(lo + (hi - lo) * (i as f64 + 0.5) / 50.0);
            let p = OperatorParams::new(q, omega)?.with_epsilon(eps);
            let exclude: Vec<_> = resonant_set(&p, 400, 80).iter().map(|m| (m.j, m.k)).collect();
            let cert = certify_gap(&p, &exclude, 400, 80)?;
            if cert.gap < worst.0 {
                worst = (cert.gap, omega);
            }
        }
        println!("q = {q}: smallest certified gap {:.4e} at omega = {:.5} (gap/eps = {:.3})", worst.0, worst.1, worst.0 / eps);
    }
    Ok(())
}
