//! Real coefficients for the subspace of fields with
//! `x(t,s) = x(-t,s) = x(t,-s)` and `y(t,s) = -y(-t,s) = y(t,-s)`.
//!
//! ```text
//! x(t,s) = Σ_{0≤j≤J, 0≤k≤K} X_{j,k} cos(jt) cos(ks)
//! y(t,s) = Σ_{1≤j≤J, 0≤k≤K} Y_{j,k} sin(jt) cos(ks)
//! ```
//!
//! There is no `Y_{0,k}`: the constant-`y` gauge direction is absent.

use rustfft::num_complex::Complex64;

use super::{Grid2D, SpectralField};
use crate::error::{Error, Result};

/// Relative defect above which [`SymmetricField::restrict`] rejects a field.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Orbit type of a non-negative mode `(j, k)` under `j ↦ -j`, `k ↦ -k`.
///
/// The L² norm of a basis function is `weight()`: one unit coefficient spread
/// over 1, 2 or 4 Hermitian sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeClass {
    Origin,
    Axis,
    Interior,
}

impl ModeClass {
    pub fn of(j: usize, k: usize) -> Self {
        match (j == 0, k == 0) {
            (true, true) => ModeClass::Origin,
            (false, false) => ModeClass::Interior,
            _ => ModeClass::Axis,
        }
    }

    /// Squared L² norm of the unit basis function.
    pub fn weight(self) -> f64 {
        match self {
            ModeClass::Origin => 1.0,
            ModeClass::Axis => 0.5,
            ModeClass::Interior => 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricField {
    grid: Grid2D,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SymmetricField {
    pub fn zeros(grid: Grid2D) -> Self {
        let kk = grid.k_max() + 1;
        Self {
            grid,
            x: vec![0.0; (grid.j_max() + 1) * kk],
            y: vec![0.0; grid.j_max() * kk],
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Number of X coefficients, `(J+1)(K+1)`.
    pub fn x_len(&self) -> usize {
        self.x.len()
    }

    /// Total number of real unknowns.
    pub fn len(&self) -> usize {
        self.x.len() + self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of `X_{j,k}` in [`Self::to_vec`].
    pub fn x_index(&self, j: usize, k: usize) -> usize {
        j * (self.grid.k_max() + 1) + k
    }

    /// Position of `Y_{j,k}` in [`Self::to_vec`].
    pub fn y_index(&self, j: usize, k: usize) -> usize {
        self.x.len() + (j - 1) * (self.grid.k_max() + 1) + k
    }

    fn in_x(&self, j: usize, k: usize) -> bool {
        j <= self.grid.j_max() && k <= self.grid.k_max()
    }

    fn in_y(&self, j: usize, k: usize) -> bool {
        j >= 1 && self.in_x(j, k)
    }

    /// `X_{j,k}`, zero outside the truncation.
    pub fn x(&self, j: usize, k: usize) -> f64 {
        if self.in_x(j, k) {
            self.x[self.x_index(j, k)]
        } else {
            0.0
        }
    }

    /// `Y_{j,k}`, zero outside the truncation and for `j = 0`.
    pub fn y(&self, j: usize, k: usize) -> f64 {
        if self.in_y(j, k) {
            self.y[self.y_index(j, k) - self.x.len()]
        } else {
            0.0
        }
    }

    pub fn set_x(&mut self, j: usize, k: usize, value: f64) -> Result<()> {
        if !self.in_x(j, k) {
            return Err(Error::Config(format!("X_({j},{k}) outside truncation")));
        }
        let i = self.x_index(j, k);
        self.x[i] = value;
        Ok(())
    }

    pub fn set_y(&mut self, j: usize, k: usize, value: f64) -> Result<()> {
        if !self.in_y(j, k) {
            return Err(Error::Config(format!("Y_({j},{k}) outside truncation")));
        }
        let i = self.y_index(j, k) - self.x.len();
        self.y[i] = value;
        Ok(())
    }

    /// Flat coefficient vector, all X then all Y.
    pub fn to_vec(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    pub fn from_slice(grid: Grid2D, data: &[f64]) -> Result<Self> {
        let mut out = Self::zeros(grid);
        if data.len() != out.len() {
            return Err(Error::Config(format!(
                "expected {} symmetric coefficients, got {}",
                out.len(),
                data.len()
            )));
        }
        let nx = out.x.len();
        out.x.copy_from_slice(&data[..nx]);
        out.y.copy_from_slice(&data[nx..]);
        Ok(out)
    }

    /// Iterator over `(j, k, X_{j,k})`.
    pub fn x_modes(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let kk = self.grid.k_max() + 1;
        self.x.iter().enumerate().map(move |(i, &v)| (i / kk, i % kk, v))
    }

    /// Iterator over `(j, k, Y_{j,k})`.
    pub fn y_modes(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let kk = self.grid.k_max() + 1;
        self.y
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i / kk + 1, i % kk, v))
    }

    /// Hermitian coefficients of the represented field.
    pub fn embed(&self) -> SpectralField {
        let mut f = SpectralField::zeros(self.grid);
        for (j, k, v) in self.x_modes() {
            let c = Complex64::new(v * ModeClass::of(j, k).weight(), 0.0);
            let (j, k) = (j as i64, k as i64);
            for (a, b) in [(j, k), (j, -k), (-j, k), (-j, -k)] {
                f.set_site(a, b, [c, f.get(a, b)[1]]);
            }
        }
        for (j, k, v) in self.y_modes() {
            let c = Complex64::new(0.0, -v * ModeClass::of(j, k).weight());
            let (j, k) = (j as i64, k as i64);
            for (a, b, val) in [(j, k, c), (j, -k, c), (-j, k, -c), (-j, -k, -c)] {
                f.set_site(a, b, [f.get(a, b)[0], val]);
            }
        }
        f
    }

    /// Orthogonal projection onto the symmetric subspace together with the
    /// L² norm of the discarded part.
    pub fn project(f: &SpectralField) -> (Self, f64) {
        let grid = *f.grid();
        let mut out = Self::zeros(grid);
        let site = |j: usize, k: usize, sj: i64, sk: i64| f.get(sj * j as i64, sk * k as i64);
        for j in 0..=grid.j_max() {
            for k in 0..=grid.k_max() {
                let x = match ModeClass::of(j, k) {
                    ModeClass::Origin => site(0, 0, 1, 1)[0].re,
                    ModeClass::Axis if k == 0 => site(j, 0, 1, 1)[0].re + site(j, 0, -1, 1)[0].re,
                    ModeClass::Axis => site(0, k, 1, 1)[0].re + site(0, k, 1, -1)[0].re,
                    ModeClass::Interior => {
                        (site(j, k, 1, 1)[0].re + site(j, k, 1, -1)[0].re)
                            + (site(j, k, -1, 1)[0].re + site(j, k, -1, -1)[0].re)
                    }
                };
                let i = out.x_index(j, k);
                out.x[i] = x;
                if j >= 1 {
                    let y = if k == 0 {
                        -site(j, 0, 1, 1)[1].im + site(j, 0, -1, 1)[1].im
                    } else {
                        -(site(j, k, 1, 1)[1].im + site(j, k, 1, -1)[1].im)
                            + (site(j, k, -1, 1)[1].im + site(j, k, -1, -1)[1].im)
                    };
                    let i = out.y_index(j, k) - out.x.len();
                    out.y[i] = y;
                }
            }
        }
        let defect = f.sub(&out.embed()).l2_norm();
        (out, defect)
    }

    /// Inverse of [`Self::embed`]; rejects fields whose relative symmetry
    /// defect exceeds [`SYMMETRY_TOLERANCE`].
    pub fn restrict(f: &SpectralField) -> Result<Self> {
        Self::restrict_with_tolerance(f, SYMMETRY_TOLERANCE)
    }

    pub fn restrict_with_tolerance(f: &SpectralField, tol: f64) -> Result<Self> {
        let (out, defect) = Self::project(f);
        let scale = f.l2_norm();
        let relative = if scale > 0.0 { defect / scale } else { 0.0 };
        if relative > tol {
            return Err(Error::SymmetryViolation { defect, relative });
        }
        Ok(out)
    }

    /// L² inner product of the represented fields.
    pub fn dot(&self, other: &Self) -> f64 {
        let xs: f64 = self
            .x_modes()
            .zip(other.x_modes())
            .map(|((j, k, a), (_, _, b))| a * b * ModeClass::of(j, k).weight())
            .sum();
        let ys: f64 = self
            .y_modes()
            .zip(other.y_modes())
            .map(|((j, k, a), (_, _, b))| a * b * ModeClass::of(j, k).weight())
            .sum();
        xs + ys
    }

    /// Same value as `self.embed().sobolev_norm(s)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let term = |j: usize, k: usize, v: f64| {
            v * v * ModeClass::of(j, k).weight() * ((j * j + k * k + 1) as f64).powf(s)
        };
        let xs: f64 = self.x_modes().map(|(j, k, v)| term(j, k, v)).sum();
        let ys: f64 = self.y_modes().map(|(j, k, v)| term(j, k, v)).sum();
        (xs + ys).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.x.iter().chain(&self.y).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &Self) -> Self {
        Self {
            grid: self.grid,
            x: self.x.iter().zip(&other.x).map(|(u, v)| u + a * v).collect(),
            y: self.y.iter().zip(&other.y).map(|(u, v)| u + a * v).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(-1.0, other)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            x: self.x.iter().map(|v| a * v).collect(),
            y: self.y.iter().map(|v| a * v).collect(),
        }
    }

    /// Copies the coefficients onto another truncation.
    pub fn retruncated(&self, grid: Grid2D) -> Self {
        let mut out = Self::zeros(grid);
        for (j, k, v) in self.x_modes() {
            let _ = out.set_x(j, k, v);
        }
        for (j, k, v) in self.y_modes() {
            let _ = out.set_y(j, k, v);
        }
        out
    }

    /// `(u, ∂_t u, ∂_s² u)` at one point, by direct summation of the series.
    pub fn eval_with_derivatives(&self, t: f64, s: f64) -> [[f64; 2]; 3] {
        let mut out = [[0.0; 2]; 3];
        for (j, k, v) in self.x_modes() {
            if v == 0.0 {
                continue;
            }
            let (jf, kf) = (j as f64, k as f64);
            let (ct, st, cs) = ((jf * t).cos(), (jf * t).sin(), (kf * s).cos());
            out[0][0] += v * ct * cs;
            out[1][0] -= v * jf * st * cs;
            out[2][0] -= v * kf * kf * ct * cs;
        }
        for (j, k, v) in self.y_modes() {
            if v == 0.0 {
                continue;
            }
            let (jf, kf) = (j as f64, k as f64);
            let (ct, st, cs) = ((jf * t).cos(), (jf * t).sin(), (kf * s).cos());
            out[0][1] += v * st * cs;
            out[1][1] += v * jf * ct * cs;
            out[2][1] -= v * kf * kf * st * cs;
        }
        out
    }

    pub fn eval(&self, t: f64, s: f64) -> [f64; 2] {
        self.eval_with_derivatives(t, s)[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid2D {
        Grid2D::for_truncation(5, 4).unwrap()
    }

    #[test]
    fn single_x_mode_embeds_to_cos_cos() {
        let g = grid();
        let mut v = SymmetricField::zeros(g);
        v.set_x(3, 2, 1.0).unwrap();
        let vals = v.embed().to_grid();
        for m in 0..g.nt() {
            for n in 0..g.ns() {
                let [x, y] = vals.get(m, n);
                let want = (3.0 * g.t(m)).cos() * (2.0 * g.s(n)).cos();
                assert!((x - want).abs() < 1e-14);
                assert!(y.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn y_axis_mode_is_sine() {
        let g = grid();
        let mut v = SymmetricField::zeros(g);
        v.set_y(1, 0, 1.0).unwrap();
        let vals = v.embed().to_grid();
        for m in 0..g.nt() {
            for n in 0..g.ns() {
                let [x, y] = vals.get(m, n);
                assert!(x.abs() < 1e-14);
                assert!((y - g.t(m).sin()).abs() < 1e-14);
            }
        }
        assert!(v.set_y(0, 1, 1.0).is_err());
    }

    #[test]
    fn odd_in_s_is_rejected() {
        let g = grid();
        let mut f = SpectralField::zeros(g);
        // cos(t) sin(s) = Σ ± e^{i(±t ± s)} / (4i)
        let q = Complex64::new(0.0, -0.25);
        f.set(1, 1, [q, Complex64::default()]).unwrap();
        f.set(-1, 1, [q, Complex64::default()]).unwrap();
        match SymmetricField::restrict(&f) {
            Err(Error::SymmetryViolation { defect, relative }) => {
                assert!((defect - f.l2_norm()).abs() < 1e-15);
                assert!((relative - 1.0).abs() < 1e-14);
            }
            other => panic!("expected symmetry violation, got {other:?}"),
        }
    }

    #[test]
    fn restrict_embed_is_bit_exact() {
        let g = grid();
        let data: Vec<f64> = (0..SymmetricField::zeros(g).len())
            .map(|i| ((i * 37 % 101) as f64 - 50.0) / 7.0 * 1.000_000_1f64.powi(i as i32))
            .collect();
        let v = SymmetricField::from_slice(g, &data).unwrap();
        let back = SymmetricField::restrict(&v.embed()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn norms_agree_with_embedding() {
        let g = grid();
        let data: Vec<f64> = (0..SymmetricField::zeros(g).len())
            .map(|i| (i as f64 * 0.37).sin())
            .collect();
        let v = SymmetricField::from_slice(g, &data).unwrap();
        for s in [0.0, 1.0, 3.0] {
            let a = v.sobolev_norm(s);
            let b = v.embed().sobolev_norm(s);
            assert!((a - b).abs() < 1e-12 * b);
        }
        assert!((v.dot(&v).sqrt() - v.l2_norm()).abs() < 1e-12);
        assert!((v.l2_norm() - v.embed().to_grid().rms()).abs() < 1e-12);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn derivatives_match_finite_differences() {
        let g = grid();
        let mut v = SymmetricField::zeros(g);
        v.set_x(2, 1, 0.3).unwrap();
        v.set_y(3, 2, -0.2).unwrap();
        v.set_x(0, 3, 0.1).unwrap();
        let (t, s, h) = (0.4, 1.3, 1e-4);
        let d = v.eval_with_derivatives(t, s);
        for c in 0..2 {
            let dt = (v.eval(t + h, s)[c] - v.eval(t - h, s)[c]) / (2.0 * h);
            let dss = (v.eval(t, s + h)[c] - 2.0 * v.eval(t, s)[c] + v.eval(t, s - h)[c]) / (h * h);
            assert!((dt - d[1][c]).abs() < 1e-7);
            assert!((dss - d[2][c]).abs() < 1e-5);
        }
    }
}
