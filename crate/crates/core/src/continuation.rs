//! Amplitude continuation of the standing-wave branch from a bifurcation
//! point.
//!
//! The branch is parameterized by `b = X_{j₀,k₀}`; each point solves the
//! bordered system `F(v, ω) = 0`, `X_{j₀,k₀}(v) = b` by damped chord Newton
//! on a dense LU factorization.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Grid2D, SymmetricField};
use crate::residual::{ResidualWorkspace, DOMAIN_LIMIT};
use crate::spectrum::BifurcationPoint;

/// Default residual tolerance of a branch point.
pub const BRANCH_TOLERANCE: f64 = 1e-11;

/// Lower end of the amplitude window used for the log-log fits.
pub const FIT_MIN_AMPLITUDE: f64 = 1e-3;

/// Deviations below this are treated as numerically zero in the fits.
pub const FIT_FLOOR: f64 = 1e-14;

/// A fresh factorization is taken when the residual shrinks by less than this
/// factor per chord step.
const REFACTOR_RATIO: f64 = 0.25;

const MAX_HALVINGS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchSettings {
    pub db: f64,
    pub b_max: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest step tried after repeated Newton failures.
    pub db_min: f64,
}

impl Default for BranchSettings {
    fn default() -> Self {
        Self {
            db: 5e-4,
            b_max: 2e-2,
            tol: BRANCH_TOLERANCE,
            max_iter: 25,
            db_min: 5e-4 / 64.0,
        }
    }
}

impl BranchSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.db > 0.0) || !(self.db_min > 0.0) || self.db_min > self.db {
            return Err(Error::Config(format!(
                "need 0 < db_min <= db (db = {}, db_min = {})",
                self.db, self.db_min
            )));
        }
        if !(self.b_max >= 0.0) || self.b_max >= DOMAIN_LIMIT {
            return Err(Error::Config(format!(
                "b_max = {} must lie in [0, {DOMAIN_LIMIT})",
                self.b_max
            )));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("tolerance and max_iter must be positive".into()));
        }
        Ok(())
    }

    /// Target amplitudes `0, db, 2db, …, b_max`.
    pub fn targets(&self) -> Vec<f64> {
        let steps = (self.b_max / self.db).round() as usize;
        let mut out: Vec<f64> = (0..=steps).map(|i| i as f64 * self.db).collect();
        if let Some(last) = out.last_mut() {
            if (*last - self.b_max).abs() <= 1e-12 * self.db {
                *last = self.b_max;
            }
        }
        if out.last().is_some_and(|&b| b < self.b_max) {
            out.push(self.b_max);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub b: f64,
    pub omega: f64,
    pub v: SymmetricField,
    pub residual_norm: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum BranchStatus {
    Complete,
    Terminated { at_b: f64, reason: String },
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub bif: BifurcationPoint,
    pub points: Vec<BranchPoint>,
    pub settings: BranchSettings,
    pub status: BranchStatus,
}

/// `X_{j₀,k₀} = b`, `Y_{j₀,k₀} = -b(1 - k₀⁻²/q)`, everything else zero;
/// frequency `ω₀`.
pub fn predictor(bif: &BifurcationPoint, b: f64, grid: Grid2D) -> Result<(SymmetricField, f64)> {
    if !(b >= 0.0) {
        return Err(Error::Precondition(format!("amplitude b = {b} must be non-negative")));
    }
    let (j0, k0) = (bif.j0 as usize, bif.k0 as usize);
    let mut v = SymmetricField::zeros(grid);
    v.set_x(j0, k0, b).map_err(|_| truncation_error(bif, &grid))?;
    v.set_y(j0, k0, -b * bif.kernel_ratio())?;
    Ok((v, bif.omega0))
}

fn truncation_error(bif: &BifurcationPoint, grid: &Grid2D) -> Error {
    Error::Config(format!(
        "truncation J={}, K={} does not contain the kernel mode ({},{})",
        grid.j_max(),
        grid.k_max(),
        bif.j0,
        bif.k0
    ))
}

fn column(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len() + 1, 1, |i, _| if i < v.len() { -v[i] } else { 0.0 })
}

/// Solves `F(v, ω) = 0`, `X_{j₀,k₀}(v) = b` from `init`.
///
/// The amplitude coefficient of `init` is overwritten with `b` before the
/// first residual evaluation, so the constraint holds exactly at every
/// iterate. Returns with zero iterations when `init` already meets `tol`.
pub fn newton_correct(
    init: (&SymmetricField, f64),
    b: f64,
    bif: &BifurcationPoint,
    ws: &ResidualWorkspace,
    tol: f64,
    max_iter: usize,
) -> Result<BranchPoint> {
    let (j0, k0) = (bif.j0 as usize, bif.k0 as usize);
    let mut v = init.0.clone();
    let mut omega = init.1;
    v.set_x(j0, k0, b).map_err(|_| truncation_error(bif, ws.grid()))?;
    let constraint = v.x_index(j0, k0);

    let mut r = ws.residual(&v, omega)?;
    let mut norm = r.l2_norm();
    let mut history = vec![norm];
    let mut lu: Option<PartialPivLu<f64>> = None;
    let mut iters = 0;
    while norm > tol {
        if iters == max_iter || !norm.is_finite() {
            return Err(Error::Divergence { history });
        }
        let fresh = lu.is_none();
        let factor = match lu.take() {
            Some(f) => f,
            None => ws.assemble_bordered(&v, omega, constraint)?.partial_piv_lu(),
        };
        let step = factor.solve(&column(&r.to_vec()));
        let dv = SymmetricField::from_slice(*ws.grid(), &(0..v.len()).map(|i| step[(i, 0)]).collect::<Vec<_>>())?;
        let domega = step[(v.len(), 0)];

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = v.add_scaled(t, &dv);
            let cand_omega = omega + t * domega;
            if let Ok(rc) = ws.residual(&cand, cand_omega) {
                let nc = rc.l2_norm();
                if nc < norm {
                    accepted = Some((cand, cand_omega, rc, nc));
                    break;
                }
            }
            t *= 0.5;
        }
        iters += 1;
        match accepted {
            Some((cand, cand_omega, rc, nc)) => {
                let ratio = nc / norm;
                v = cand;
                omega = cand_omega;
                r = rc;
                norm = nc;
                history.push(norm);
                if t == 1.0 && ratio <= REFACTOR_RATIO {
                    lu = Some(factor);
                }
            }
            None if fresh => {
                history.push(norm);
                return Err(Error::Divergence { history });
            }
            // A stale factorization failed to reduce the residual; refactor.
            None => history.push(norm),
        }
    }
    Ok(BranchPoint {
        b,
        omega,
        v,
        residual_norm: norm,
        newton_iters: iters,
    })
}

/// `prev.v + predictor(b) - predictor(prev.b)`.
fn warm_start(bif: &BifurcationPoint, grid: Grid2D, prev: &BranchPoint, b: f64) -> Result<SymmetricField> {
    let (to, _) = predictor(bif, b, grid)?;
    let (from, _) = predictor(bif, prev.b, grid)?;
    Ok(prev.v.add_scaled(1.0, &to.sub(&from)))
}

/// Marches from `start` through `targets` (in the given order), warm-starting
/// each correction from the previous point plus the predictor increment and
/// halving the step on failure. Stops at the first target that cannot be
/// reached with steps of at least `settings.db_min`.
fn march(
    bif: &BifurcationPoint,
    ws: &ResidualWorkspace,
    start: BranchPoint,
    targets: &[f64],
    settings: &BranchSettings,
) -> (Vec<BranchPoint>, BranchStatus) {
    let grid = *ws.grid();
    let mut points = vec![start];
    for &target in targets {
        loop {
            let prev = points.last().unwrap();
            let mut h = target - prev.b;
            let mut reached = None;
            let mut last_err = String::new();
            while h.abs() >= settings.db_min * (1.0 - 1e-12) || h == target - prev.b {
                let b = prev.b + h;
                let attempt = warm_start(bif, grid, prev, b).and_then(|guess| {
                    newton_correct((&guess, prev.omega), b, bif, ws, settings.tol, settings.max_iter)
                });
                match attempt {
                    Ok(p) => {
                        reached = Some(p);
                        break;
                    }
                    Err(e) => {
                        last_err = e.to_string();
                        h *= 0.5;
                    }
                }
                if h == 0.0 {
                    break;
                }
            }
            match reached {
                Some(p) => {
                    let done = p.b == target;
                    points.push(p);
                    if done {
                        break;
                    }
                }
                None => {
                    let at_b = prev.b;
                    return (
                        points,
                        BranchStatus::Terminated {
                            at_b,
                            reason: format!("step fell below db_min toward b = {target}: {last_err}"),
                        },
                    );
                }
            }
        }
    }
    (points, BranchStatus::Complete)
}

/// The branch at `b = 0, db, …, b_max`, starting from the trivial solution.
pub fn continue_branch(bif: &BifurcationPoint, settings: BranchSettings, ws: &ResidualWorkspace) -> Result<Branch> {
    settings.validate()?;
    if ws.q() != bif.q {
        return Err(Error::Config(format!("workspace q = {} differs from q = {}", ws.q(), bif.q)));
    }
    let (v0, omega0) = predictor(bif, 0.0, *ws.grid())?;
    let start = newton_correct((&v0, omega0), 0.0, bif, ws, settings.tol, settings.max_iter)?;
    let targets = settings.targets();
    let (points, status) = march(bif, ws, start, &targets[1..], &settings);
    Ok(Branch {
        bif: *bif,
        points,
        settings,
        status,
    })
}

/// Re-solves the branch from its last point down to its smallest positive
/// amplitude. Returns the points in the order visited.
pub fn retrace(branch: &Branch, ws: &ResidualWorkspace) -> Result<Vec<BranchPoint>> {
    let last = branch
        .points
        .last()
        .ok_or_else(|| Error::Precondition("empty branch".into()))?
        .clone();
    let targets: Vec<f64> = branch
        .points
        .iter()
        .rev()
        .skip(1)
        .map(|p| p.b)
        .filter(|&b| b > 0.0)
        .collect();
    match march(&branch.bif, ws, last, &targets, &branch.settings) {
        (points, BranchStatus::Complete) => Ok(points),
        (_, BranchStatus::Terminated { at_b, reason }) => Err(Error::Continuation { at_b, reason }),
    }
}

/// Least-squares line through `(log b, log y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "fit", rename_all = "snake_case")]
pub enum PowerFit {
    Fitted {
        slope: f64,
        /// `exp(intercept)`, the constant in `y ≈ C b^slope`.
        constant: f64,
        /// RMS residual of the fit in log space.
        rms: f64,
        samples: usize,
    },
    BelowFloor,
}

impl PowerFit {
    pub fn slope(&self) -> Option<f64> {
        match self {
            PowerFit::Fitted { slope, .. } => Some(*slope),
            PowerFit::BelowFloor => None,
        }
    }
}

/// Fits `y ≈ C b^p` over the pairs with `b ≥ b_min` and `y > FIT_FLOOR`.
pub fn power_fit(samples: &[(f64, f64)], b_min: f64) -> PowerFit {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(b, y)| *b >= b_min && *y > FIT_FLOOR)
        .map(|(b, y)| (b.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return PowerFit::BelowFloor;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return PowerFit::BelowFloor;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    PowerFit::Fitted {
        slope,
        constant: intercept.exp(),
        rms,
        samples: pts.len(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    /// `|ω(b) - ω₀|` against `b`.
    pub omega_fit: PowerFit,
    /// `‖v(b) - predictor(b)‖_{H³}` against `b`.
    pub deviation_fit: PowerFit,
    /// Sign of `ω(b) - ω₀` where it is above the floor: `1`, `-1`, or `0` if
    /// mixed or absent.
    pub curvature_sign: i8,
    /// `(ω(b) - ω₀)/b²` at the smallest amplitude above the floor.
    pub curvature: Option<f64>,
    /// `max_b ‖w‖_{H³} / ‖P v‖²_{H³}` with `P` the projection on the kernel
    /// and `w = v - P v`.
    pub kernel_bound_constant: f64,
    /// `min_b` of the same ratio.
    pub kernel_bound_min: f64,
    /// `max_b ‖P v - T P v‖ / ‖P v‖` for the half-period shift
    /// `T: (t, s) ↦ (t + π/j₀, s + π/k₀)`.
    pub kernel_shift_defect: f64,
    /// `max_b ‖v - T v‖ / ‖v‖`; reported, not asserted.
    pub solution_shift_defect: f64,
    /// Largest residual of `embed(v)` in the full truncated space.
    pub max_full_residual: f64,
    /// Largest violation of the symmetric-subspace invariants.
    pub max_symmetry_defect: f64,
    /// Largest pointwise `|u|` along the branch.
    pub max_modulus: f64,
}

/// Fits the small-amplitude laws along `branch` over `b ≥ FIT_MIN_AMPLITUDE`
/// and collects the per-point diagnostics.
pub fn verify_asymptotics(branch: &Branch, ws: &ResidualWorkspace) -> Result<AsymptoticsReport> {
    let bif = &branch.bif;
    let grid = *ws.grid();
    let nontrivial: Vec<&BranchPoint> = branch.points.iter().filter(|p| p.b > 0.0).collect();
    if nontrivial.len() < 5 {
        return Err(Error::Precondition(format!(
            "need at least 5 points with b > 0, found {}",
            nontrivial.len()
        )));
    }
    let phi = bif.kernel_fn(grid)?;
    let shift = |f: &SymmetricField| -> Result<f64> {
        let e = f.embed();
        let moved = e.translated(std::f64::consts::PI / bif.j0 as f64, std::f64::consts::PI / bif.k0 as f64);
        Ok(moved.sub(&e).l2_norm() / e.l2_norm())
    };

    let mut omega_samples = Vec::new();
    let mut dev_samples = Vec::new();
    let mut ratio_max: f64 = 0.0;
    let mut ratio_min = f64::INFINITY;
    let mut kernel_shift: f64 = 0.0;
    let mut solution_shift: f64 = 0.0;
    let mut max_full: f64 = 0.0;
    let mut max_sym: f64 = 0.0;
    let mut max_modulus: f64 = 0.0;
    for p in &branch.points {
        let embedded = p.v.embed();
        let full = ws.full_residual(&embedded, p.omega)?;
        let (_, defect) = SymmetricField::project(&full);
        max_full = max_full.max(full.l2_norm());
        max_sym = max_sym.max(defect).max(embedded.hermitian_defect());
        max_modulus = max_modulus.max(embedded.to_grid().max_modulus());
    }
    for p in &nontrivial {
        omega_samples.push((p.b, (p.omega - bif.omega0).abs()));
        let (pred, _) = predictor(bif, p.b, grid)?;
        dev_samples.push((p.b, p.v.sub(&pred).sobolev_norm(3.0)));

        let kernel = phi.scaled(p.v.dot(&phi));
        let off = p.v.sub(&kernel);
        let kn = kernel.sobolev_norm(3.0);
        if p.b >= FIT_MIN_AMPLITUDE {
            let ratio = off.sobolev_norm(3.0) / (kn * kn);
            ratio_max = ratio_max.max(ratio);
            ratio_min = ratio_min.min(ratio);
        }
        kernel_shift = kernel_shift.max(shift(&kernel)?);
        solution_shift = solution_shift.max(shift(&p.v)?);
    }

    let signs: Vec<f64> = nontrivial
        .iter()
        .map(|p| p.omega - bif.omega0)
        .filter(|d| d.abs() > FIT_FLOOR)
        .collect();
    let curvature_sign = if !signs.is_empty() && signs.iter().all(|d| *d > 0.0) {
        1
    } else if !signs.is_empty() && signs.iter().all(|d| *d < 0.0) {
        -1
    } else {
        0
    };
    let curvature = nontrivial
        .iter()
        .find(|p| (p.omega - bif.omega0).abs() > FIT_FLOOR)
        .map(|p| (p.omega - bif.omega0) / (p.b * p.b));

    Ok(AsymptoticsReport {
        omega_fit: power_fit(&omega_samples, FIT_MIN_AMPLITUDE),
        deviation_fit: power_fit(&dev_samples, FIT_MIN_AMPLITUDE),
        curvature_sign,
        curvature,
        kernel_bound_constant: ratio_max,
        kernel_bound_min: ratio_min,
        kernel_shift_defect: kernel_shift,
        solution_shift_defect: solution_shift,
        max_full_residual: max_full,
        max_symmetry_defect: max_sym,
        max_modulus,
    })
}
