//! Central configurations of `n` unit-circulation filaments around a central
//! filament of circulation `-κ` fixed at the origin.
//!
//! The positions `a_1..a_n` must satisfy
//!
//! ```text
//! Σ_i a_i/|a_i|² = 0                                          (balance)
//! a_j + Σ_{i≠j} (a_j - a_i)/|a_j - a_i|² - κ a_j/|a_j|² = 0   (force, j = 1..n)
//! ```

use std::f64::consts::PI;

use faer::Mat;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default residual tolerance for [`solve_cc`].
pub const CC_TOLERANCE: f64 = 1e-11;
pub const CC_MAX_ITER: usize = 50;

/// Circulations and positions; `a_0 = 0` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralConfig {
    pub n: usize,
    pub kappa: f64,
    pub points: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct ConfigJson {
    n: usize,
    kappa: f64,
    points: Vec<[f64; 2]>,
}

impl Serialize for CentralConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConfigJson {
            n: self.n,
            kappa: self.kappa,
            points: self.points.iter().map(|p| [p.re, p.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CentralConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ConfigJson::deserialize(d)?;
        if raw.points.len() != raw.n {
            return Err(serde::de::Error::custom(format!(
                "n = {} but {} points given",
                raw.n,
                raw.points.len()
            )));
        }
        Ok(CentralConfig {
            n: raw.n,
            kappa: raw.kappa,
            points: raw.points.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
        })
    }
}

impl CentralConfig {
    pub fn new(kappa: f64, points: Vec<Complex64>) -> Result<Self> {
        check_inputs(&points, kappa)?;
        Ok(Self {
            n: points.len(),
            kappa,
            points,
        })
    }

    /// Circulation `Γ_j`, with `j = 0` the central filament.
    pub fn circulation(&self, j: usize) -> f64 {
        if j == 0 {
            -self.kappa
        } else {
            1.0
        }
    }

    /// All `n + 1` positions, central filament first.
    pub fn positions_with_center(&self) -> Vec<Complex64> {
        std::iter::once(Complex64::default())
            .chain(self.points.iter().copied())
            .collect()
    }

    pub fn rotated(&self, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        Self {
            points: self.points.iter().map(|p| p * r).collect(),
            ..self.clone()
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p * factor).collect(),
            ..self.clone()
        }
    }

    pub fn residual(&self) -> Result<f64> {
        cc_residual(&self.points, self.kappa)
    }
}

fn check_inputs(points: &[Complex64], kappa: f64) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::Precondition(
            "at least two outer filaments are required (the balance equation has no solution for n = 1)"
                .into(),
        ));
    }
    if !(kappa > 0.0) {
        return Err(Error::Precondition(format!("kappa = {kappa} must be positive")));
    }
    Ok(())
}

fn check_distinct(points: &[Complex64]) -> Result<()> {
    for (j, a) in points.iter().enumerate() {
        if a.norm() == 0.0 || !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::Degenerate(format!("point {} coincides with the center", j + 1)));
        }
        for (i, b) in points.iter().enumerate().skip(j + 1) {
            if a == b {
                return Err(Error::Degenerate(format!(
                    "points {} and {} coincide",
                    j + 1,
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

/// `z / |z|²`, the planar point-vortex kernel.
#[inline]
fn kernel(z: Complex64) -> Complex64 {
    z / z.norm_sqr()
}

/// Real 2×2 matrix of `w ↦ D(z/|z|²)[w] = -conj(w)/conj(z)²`.
#[inline]
fn kernel_derivative(z: Complex64) -> [[f64; 2]; 2] {
    let c = -1.0 / (z.conj() * z.conj());
    [[c.re, c.im], [c.im, -c.re]]
}

/// Residuals of the `n` force equations followed by the balance equation.
pub fn cc_equations(points: &[Complex64], kappa: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = points
        .iter()
        .enumerate()
        .map(|(j, &a)| {
            let mut f = a - kernel(a) * kappa;
            for (i, &b) in points.iter().enumerate() {
                if i != j {
                    f += kernel(a - b);
                }
            }
            f
        })
        .collect();
    out.push(points.iter().map(|&a| kernel(a)).sum());
    out
}

/// Largest modulus among the force and balance residuals.
pub fn cc_residual(points: &[Complex64], kappa: f64) -> Result<f64> {
    check_distinct(points)?;
    Ok(cc_equations(points, kappa)
        .iter()
        .map(|r| r.norm())
        .fold(0.0, f64::max))
}

/// Jacobian of [`cc_equations`] with respect to `(Re a_1, Im a_1, …)`,
/// a `(2n+2) × 2n` real matrix.
pub fn cc_jacobian(points: &[Complex64], kappa: f64) -> Mat<f64> {
    let n = points.len();
    let mut jac = Mat::<f64>::zeros(2 * n + 2, 2 * n);
    let mut add = |row: usize, col: usize, m: [[f64; 2]; 2], sign: f64| {
        for r in 0..2 {
            for c in 0..2 {
                jac[(2 * row + r, 2 * col + c)] += sign * m[r][c];
            }
        }
    };
    for (j, &a) in points.iter().enumerate() {
        add(j, j, [[1.0, 0.0], [0.0, 1.0]], 1.0);
        add(j, j, kernel_derivative(a), -kappa);
        for (i, &b) in points.iter().enumerate() {
            if i != j {
                let d = kernel_derivative(a - b);
                add(j, j, d, 1.0);
                add(j, i, d, -1.0);
            }
        }
        add(n, j, kernel_derivative(a), 1.0);
    }
    jac
}

/// Singular values (descending) of the unconstrained Jacobian.
pub fn jacobian_singular_values(points: &[Complex64], kappa: f64) -> Vec<f64> {
    let jac = cc_jacobian(points, kappa);
    let mut s: Vec<f64> = jac
        .singular_values()
        .expect("SVD of a small dense matrix");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Regular polygon `a_j = r e^{2πij/n}` with `r = √(κ - (n-1)/2)`.
pub fn polygon_config(n: usize, kappa: f64) -> Result<CentralConfig> {
    if n < 2 {
        return Err(Error::Precondition(format!("n = {n}: need n >= 2")));
    }
    let excess = kappa - (n as f64 - 1.0) / 2.0;
    if !(excess > 0.0) {
        return Err(Error::Infeasible(format!(
            "kappa = {kappa} <= (n-1)/2 = {}: no regular polygon",
            (n as f64 - 1.0) / 2.0
        )));
    }
    let r = excess.sqrt();
    let zeta = 2.0 * PI / n as f64;
    let points = (1..=n)
        .map(|j| Complex64::from_polar(r, j as f64 * zeta))
        .collect();
    CentralConfig::new(kappa, points)
}

/// `Z_m`-symmetric rings: `a_{j + m·ring} = r_ring e^{i(2πj/m + φ_ring)}`.
///
/// Every solution of the force equations lies on the circle
/// `|a| = √(κ - (n-1)/2)` and is equally spaced, so `solve_cc` from such a
/// seed lands on a regular polygon; the rings end at a common radius.
pub fn nested_polygon_seed(per_ring: usize, radii: &[f64], offsets: &[f64]) -> Result<Vec<Complex64>> {
    if per_ring < 2 {
        return Err(Error::Precondition("need at least two points per ring".into()));
    }
    if radii.len() != offsets.len() || radii.is_empty() {
        return Err(Error::Precondition(
            "one angular offset per ring radius is required".into(),
        ));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Precondition("ring radii must be positive".into()));
    }
    let zeta = 2.0 * PI / per_ring as f64;
    Ok(radii
        .iter()
        .zip(offsets)
        .flat_map(|(&r, &phi)| {
            (0..per_ring).map(move |j| Complex64::from_polar(r, j as f64 * zeta + phi))
        })
        .collect())
}

#[derive(Debug, Clone, Copy)]
pub struct CcSolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CcSolveOptions {
    fn default() -> Self {
        Self {
            tol: CC_TOLERANCE,
            max_iter: CC_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CcSolution {
    pub config: CentralConfig,
    pub iterations: usize,
    /// `cc_residual` before each step and after the last one.
    pub history: Vec<f64>,
}

/// Damped Gauss–Newton on the force and balance equations with the phase
/// constraint `Im a_1 = 0` appended. The initial data is first rotated so that
/// `a_1` lies on the positive real axis.
pub fn solve_cc(initial: &[Complex64], kappa: f64, opts: CcSolveOptions) -> Result<CcSolution> {
    check_inputs(initial, kappa)?;
    check_distinct(initial)?;
    let n = initial.len();
    let align = Complex64::from_polar(1.0, -initial[0].arg());
    let mut z: Vec<Complex64> = initial.iter().map(|p| p * align).collect();
    z[0].im = 0.0;

    let merit = |pts: &[Complex64]| -> f64 {
        if check_distinct(pts).is_err() {
            return f64::INFINITY;
        }
        let eq = cc_equations(pts, kappa);
        (eq.iter().map(|c| c.norm_sqr()).sum::<f64>() + pts[0].im.powi(2)).sqrt()
    };

    let mut history = vec![cc_residual(&z, kappa)?];
    let mut iterations = 0;
    while *history.last().unwrap() > opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::Divergence { history });
        }
        let eqs = cc_equations(&z, kappa);
        let mut jac = Mat::<f64>::zeros(2 * n + 3, 2 * n);
        let base = cc_jacobian(&z, kappa);
        for r in 0..2 * n + 2 {
            for c in 0..2 * n {
                jac[(r, c)] = base[(r, c)];
            }
        }
        jac[(2 * n + 2, 1)] = 1.0;
        let mut rhs = Mat::<f64>::zeros(2 * n + 3, 1);
        for (i, e) in eqs.iter().enumerate() {
            rhs[(2 * i, 0)] = -e.re;
            rhs[(2 * i + 1, 0)] = -e.im;
        }
        rhs[(2 * n + 2, 0)] = -z[0].im;

        let svd = jac
            .thin_svd()
            .map_err(|_| Error::Degenerate("SVD of the configuration Jacobian failed".into()))?;
        let s = svd.S().column_vector();
        let smax = (0..s.nrows()).map(|i| s[i]).fold(0.0, f64::max);
        let smin = (0..s.nrows()).map(|i| s[i]).fold(f64::INFINITY, f64::min);
        if smin <= 1e-12 * smax {
            return Err(Error::Degenerate(format!(
                "Jacobian singular beyond the rotation mode (sigma_min/sigma_max = {:.2e})",
                smin / smax
            )));
        }
        // Least-squares step via the pseudo-inverse.
        let ut_b = svd.U().transpose() * &rhs;
        let mut y = Mat::<f64>::zeros(2 * n, 1);
        for i in 0..2 * n {
            y[(i, 0)] = ut_b[(i, 0)] / s[i];
        }
        let step = svd.V() * &y;

        let current = merit(&z);
        let mut lambda = 1.0;
        let mut trial;
        loop {
            trial = z
                .iter()
                .enumerate()
                .map(|(j, p)| p + Complex64::new(step[(2 * j, 0)], step[(2 * j + 1, 0)]) * lambda)
                .collect::<Vec<_>>();
            if merit(&trial) <= current || lambda < 1e-6 {
                break;
            }
            lambda *= 0.5;
        }
        z = trial;
        iterations += 1;
        history.push(cc_residual(&z, kappa).unwrap_or(f64::INFINITY));
    }
    if z[0].re < 0.0 {
        z.iter_mut().for_each(|p| *p = -*p);
    }
    Ok(CcSolution {
        config: CentralConfig::new(kappa, z)?,
        iterations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn triangle_radius_and_residual() {
        let c = polygon_config(3, 2.0).unwrap();
        for (j, p) in c.points.iter().enumerate() {
            assert!((p.norm() - 1.0).abs() < 1e-15);
            let want = Complex64::from_polar(1.0, 2.0 * PI * (j + 1) as f64 / 3.0);
            assert!((p - want).norm() < 1e-15);
        }
        assert!(c.residual().unwrap() <= 1e-13);
    }

    #[test]
    fn pair_radius() {
        let c = polygon_config(2, 1.0).unwrap();
        assert!((c.points[0].norm() - 0.5f64.sqrt()).abs() < 1e-15);
        // Spelled out for a_1 = -1/√2, a_2 = 1/√2.
        let a1 = c.points[0];
        let a2 = c.points[1];
        let f1 = a1 + (a1 - a2) / (a1 - a2).norm_sqr() - a1 / a1.norm_sqr();
        assert!(f1.norm() < 1e-15);
        assert!(c.residual().unwrap() <= 1e-13);
    }

    #[test]
    fn infeasible_and_degenerate_inputs() {
        assert!(matches!(polygon_config(3, 1.0), Err(Error::Infeasible(_))));
        assert!(matches!(polygon_config(1, 5.0), Err(Error::Precondition(_))));
        let pts = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(matches!(cc_residual(&pts, 2.0), Err(Error::Degenerate(_))));
        let pts = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(matches!(cc_residual(&pts, 2.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn scaled_polygon_is_not_central() {
        let c = polygon_config(3, 2.0).unwrap().scaled(1.1);
        // Each force collapses to a_j (1 - (κ - 1)/r²) with r = 1.1.
        let want = 1.1 * (1.0 - 1.0 / 1.21);
        let res = c.residual().unwrap();
        assert!((res - want).abs() < 1e-14, "{res} vs {want}");
        assert!(res > 0.1);
    }

    #[test]
    fn residual_is_rotation_invariant() {
        let c = polygon_config(5, 3.0).unwrap().scaled(0.9);
        let r0 = c.residual().unwrap();
        for k in 0..12 {
            let r = c.rotated(0.37 * k as f64).residual().unwrap();
            assert!((r - r0).abs() < 1e-13);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Complex64> = polygon_config(4, 2.5)
            .unwrap()
            .points
            .iter()
            .map(|p| p + Complex64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)))
            .collect();
        let kappa = 2.5;
        let jac = cc_jacobian(&pts, kappa);
        let h = 1e-6;
        for col in 0..2 * pts.len() {
            let mut plus = pts.clone();
            let mut minus = pts.clone();
            let d = if col % 2 == 0 {
                Complex64::new(h, 0.0)
            } else {
                Complex64::new(0.0, h)
            };
            plus[col / 2] += d;
            minus[col / 2] -= d;
            let fp = cc_equations(&plus, kappa);
            let fm = cc_equations(&minus, kappa);
            for (row, (a, b)) in fp.iter().zip(&fm).enumerate() {
                let fd = (a - b) / (2.0 * h);
                for (part, v) in [(0, fd.re), (1, fd.im)] {
                    let an = jac[(2 * row + part, col)];
                    assert!(
                        (an - v).abs() <= 1e-6 * an.abs().max(1.0),
                        "row {row}.{part} col {col}: {an} vs {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn exact_polygon_needs_no_steps() {
        let c = polygon_config(3, 2.0).unwrap();
        let sol = solve_cc(&c.points, 2.0, CcSolveOptions::default()).unwrap();
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn perturbed_polygon_reconverges() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = polygon_config(3, 2.0).unwrap();
        let init: Vec<Complex64> = c
            .points
            .iter()
            .map(|p| p + Complex64::new(rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3)))
            .collect();
        let sol = solve_cc(&init, 2.0, CcSolveOptions { tol: 1e-12, max_iter: 50 }).unwrap();
        assert!(sol.config.residual().unwrap() <= 1e-12);
        assert!(sol.iterations <= 8);
        // Align the closed form with the phase convention a_1 > 0.
        let aligned = c.rotated(-c.points[0].arg());
        for (a, b) in sol.config.points.iter().zip(&aligned.points) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn nested_triangles_converge() {
        let seed = nested_polygon_seed(3, &[0.7, 1.5], &[0.0, PI / 3.0]).unwrap();
        assert_eq!(seed.len(), 6);
        let sol = solve_cc(&seed, 4.0, CcSolveOptions { tol: 1e-12, max_iter: 50 }).unwrap();
        assert!(sol.config.residual().unwrap() <= 1e-12);
        // Re-solving a converged configuration is a fixed point.
        let again = solve_cc(&sol.config.points, 4.0, CcSolveOptions { tol: 1e-12, max_iter: 50 }).unwrap();
        assert_eq!(again.iterations, 0);
    }

    #[test]
    fn single_ring_seed_is_polygon() {
        let seed = nested_polygon_seed(4, &[1.3], &[0.0]).unwrap();
        for (j, p) in seed.iter().enumerate() {
            assert!((p - Complex64::from_polar(1.3, PI / 2.0 * j as f64)).norm() < 1e-15);
        }
        assert!(nested_polygon_seed(1, &[1.0], &[0.0]).is_err());
        assert!(nested_polygon_seed(3, &[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn one_rotational_null_direction() {
        let c = polygon_config(5, 3.0).unwrap();
        let s = jacobian_singular_values(&c.points, c.kappa);
        let small = s.iter().filter(|v| **v < 1e-8 * s[0]).count();
        assert_eq!(small, 1, "{s:?}");
    }

    #[test]
    fn json_round_trip() {
        let c = polygon_config(3, 2.0).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.starts_with("{\"n\":3,\"kappa\":2.0,\"points\":[["));
        let back: CentralConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<CentralConfig>(r#"{"n":2,"kappa":1,"points":[[1,0]]}"#).is_err());
    }
}
