//! Follows the standing-wave branch from a bifurcation point and prints the
//! small-amplitude fits.
//!
//! ```text
//! cargo run --release --example branch -- 2 1 32
//! ```

use std::time::Instant;

use vortex_filaments::continuation::{continue_branch, verify_asymptotics, BranchSettings};
use vortex_filaments::field::Grid2D;
use vortex_filaments::residual::ResidualWorkspace;
use vortex_filaments::spectrum::bifurcation_frequency;

fn main() -> vortex_filaments::Result<()> {
    let args: Vec<i64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (q, k0, n) = match args.as_slice() {
        [q, k0, n, ..] => (*q, *k0, *n as usize),
        [q, k0] => (*q, *k0, 32),
        _ => (2, 1, 32),
    };
    let bif = bifurcation_frequency(q, k0)?;
    let ws = ResidualWorkspace::new(Grid2D::for_truncation(n, n)?, q, 4)?;
    let started = Instant::now();
    let branch = continue_branch(&bif, BranchSettings::default(), &ws)?;
    println!("q={q} k0={k0} j0={} omega0={} J=K={n}", bif.j0, bif.omega0);
    for p in &branch.points {
        println!(
            "b={:.4e}  omega-omega0={:+.6e}  residual={:.2e}  iters={}",
            p.b,
            p.omega - bif.omega0,
            p.residual_norm,
            p.newton_iters
        );
    }
    let report = verify_asymptotics(&branch, &ws)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!("elapsed {:.1?}", started.elapsed());
    Ok(())
}
