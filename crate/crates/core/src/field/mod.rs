//! Two-component real fields on the torus `[0, 2π)²`.
//!
//! A [`SpectralField`] stores the truncated Fourier coefficients
//! `u_{j,k} ∈ ℂ²` over the dense rectangle `|j| ≤ J`, `|k| ≤ K`, with the
//! Hermitian symmetry `u_{j,k} = conj(u_{-j,-k})` so that the represented
//! field `u = (x, y)` is real. Collocation values live in [`GridValues`].
//!
//! Both components are transformed together by packing them into the single
//! complex field `x + i y`.

mod fft;
pub mod io;
mod symmetric;

pub use fft::{wrap, Fft2};
pub use symmetric::{ModeClass, SymmetricField};

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// Default truncation `J = K`.
pub const DEFAULT_TRUNCATION: usize = 32;

/// Default oversampling factor for pointwise nonlinear maps.
pub const DEFAULT_PADDING: usize = 4;

/// Collocation grid together with the spectral truncation it resolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid2D {
    nt: usize,
    ns: usize,
    j_max: usize,
    k_max: usize,
}

impl Grid2D {
    pub fn new(nt: usize, ns: usize, j_max: usize, k_max: usize) -> Result<Self> {
        for (name, n) in [("Nt", nt), ("Ns", ns)] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::Config(format!("{name} = {n} must be even and >= 4")));
            }
        }
        if nt < 2 * j_max + 1 || ns < 2 * k_max + 1 {
            return Err(Error::Config(format!(
                "grid {nt}x{ns} cannot resolve truncation J={j_max}, K={k_max}"
            )));
        }
        Ok(Self {
            nt,
            ns,
            j_max,
            k_max,
        })
    }

    /// Smallest even grid resolving `(J, K)`.
    pub fn for_truncation(j_max: usize, k_max: usize) -> Result<Self> {
        let nt = (2 * j_max + 2).max(4);
        let ns = (2 * k_max + 2).max(4);
        Self::new(nt, ns, j_max, k_max)
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn t(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.nt as f64
    }

    pub fn s(&self, n: usize) -> f64 {
        2.0 * PI * n as f64 / self.ns as f64
    }

    /// Number of stored coefficient sites, `(2J+1)(2K+1)`.
    pub fn mode_count(&self) -> usize {
        (2 * self.j_max + 1) * (2 * self.k_max + 1)
    }

    pub fn contains(&self, j: i64, k: i64) -> bool {
        j.unsigned_abs() as usize <= self.j_max && k.unsigned_abs() as usize <= self.k_max
    }

    fn index(&self, j: i64, k: i64) -> usize {
        let row = (j + self.j_max as i64) as usize;
        let col = (k + self.k_max as i64) as usize;
        row * (2 * self.k_max + 1) + col
    }

    /// Same truncation, collocation grid oversampled by `factor`.
    pub fn padded(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Config("padding factor must be positive".into()));
        }
        Self::new(
            self.nt * factor,
            self.ns * factor,
            self.j_max,
            self.k_max,
        )
    }
}

/// Pointwise samples `(x, y)(t_m, s_n)` in row-major order (rows along `s`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridValues {
    pub nt: usize,
    pub ns: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl GridValues {
    pub fn zeros(nt: usize, ns: usize) -> Self {
        Self {
            nt,
            ns,
            x: vec![0.0; nt * ns],
            y: vec![0.0; nt * ns],
        }
    }

    pub fn from_fn(nt: usize, ns: usize, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(nt, ns);
        for m in 0..nt {
            for n in 0..ns {
                let [x, y] = f(out.t(m), out.s(n));
                out.x[m * ns + n] = x;
                out.y[m * ns + n] = y;
            }
        }
        out
    }

    pub fn t(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.nt as f64
    }

    pub fn s(&self, n: usize) -> f64 {
        2.0 * PI * n as f64 / self.ns as f64
    }

    pub fn get(&self, m: usize, n: usize) -> [f64; 2] {
        [self.x[m * self.ns + n], self.y[m * self.ns + n]]
    }

    pub fn max_modulus(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(x, y)| x.hypot(*y))
            .fold(0.0, f64::max)
    }

    /// Root-mean-square of `|u|` over the grid; equals the coefficient L² norm
    /// for resolved fields.
    pub fn rms(&self) -> f64 {
        let sum: f64 = self
            .x
            .iter()
            .zip(&self.y)
            .map(|(x, y)| x * x + y * y)
            .sum();
        (sum / (self.nt * self.ns) as f64).sqrt()
    }

    pub fn max_abs_diff(&self, other: &GridValues) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .chain(self.y.iter().zip(&other.y))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Truncated Hermitian Fourier representation of a real two-component field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid2D,
    x: Vec<Complex64>,
    y: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid2D) -> Self {
        let n = grid.mode_count();
        Self {
            grid,
            x: vec![Complex64::default(); n],
            y: vec![Complex64::default(); n],
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Coefficient pair `u_{j,k}`; zero outside the truncation.
    pub fn get(&self, j: i64, k: i64) -> [Complex64; 2] {
        if !self.grid.contains(j, k) {
            return [Complex64::default(); 2];
        }
        let i = self.grid.index(j, k);
        [self.x[i], self.y[i]]
    }

    /// Sets `u_{j,k}` and its Hermitian partner `u_{-j,-k}`.
    ///
    /// At `(0, 0)` only the real parts are kept.
    pub fn set(&mut self, j: i64, k: i64, value: [Complex64; 2]) -> Result<()> {
        if !self.grid.contains(j, k) {
            return Err(Error::Config(format!(
                "mode ({j},{k}) outside truncation J={}, K={}",
                self.grid.j_max, self.grid.k_max
            )));
        }
        let i = self.grid.index(j, k);
        let p = self.grid.index(-j, -k);
        if i == p {
            self.x[i] = Complex64::new(value[0].re, 0.0);
            self.y[i] = Complex64::new(value[1].re, 0.0);
        } else {
            self.x[i] = value[0];
            self.y[i] = value[1];
            self.x[p] = value[0].conj();
            self.y[p] = value[1].conj();
        }
        Ok(())
    }

    /// Raw write of one site without touching its partner. Used by the
    /// readers; callers must restore Hermitian symmetry themselves.
    pub(crate) fn set_site(&mut self, j: i64, k: i64, value: [Complex64; 2]) {
        let i = self.grid.index(j, k);
        self.x[i] = value[0];
        self.y[i] = value[1];
    }

    /// Iterator over `(j, k, u_{j,k})` for every stored site.
    pub fn modes(&self) -> impl Iterator<Item = (i64, i64, [Complex64; 2])> + '_ {
        let jm = self.grid.j_max as i64;
        let km = self.grid.k_max as i64;
        (-jm..=jm).flat_map(move |j| (-km..=km).map(move |k| (j, k, self.get(j, k))))
    }

    /// Largest violation of `u_{j,k} = conj(u_{-j,-k})`.
    pub fn hermitian_defect(&self) -> f64 {
        self.modes()
            .map(|(j, k, u)| {
                let p = self.get(-j, -k);
                (u[0] - p[0].conj()).norm().max((u[1] - p[1].conj()).norm())
            })
            .fold(0.0, f64::max)
    }

    /// `(Σ |u_{j,k}|² (j² + k² + 1)^s)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.modes()
            .map(|(j, k, u)| {
                let w = ((j * j + k * k + 1) as f64).powf(s);
                (u[0].norm_sqr() + u[1].norm_sqr()) * w
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// Largest coefficient modulus over all sites and both components.
    pub fn max_coeff(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_values(|c| c * a)
    }

    fn map_values(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            x: self.x.iter().map(|&c| f(c)).collect(),
            y: self.y.iter().map(|&c| f(c)).collect(),
        }
    }

    fn check_same_grid(&self, other: &Self) {
        assert_eq!(
            (self.grid.j_max, self.grid.k_max),
            (other.grid.j_max, other.grid.k_max),
            "fields on different truncations"
        );
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &Self) -> Self {
        self.check_same_grid(other);
        Self {
            grid: self.grid,
            x: self.x.iter().zip(&other.x).map(|(u, v)| u + v * a).collect(),
            y: self.y.iter().zip(&other.y).map(|(u, v)| u + v * a).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(-1.0, other)
    }

    /// Applies a 2×2 multiplier to every coefficient pair,
    /// `u_{j,k} ↦ M(j,k) u_{j,k}`.
    pub fn apply_multiplier(&self, m: impl Fn(i64, i64) -> [[Complex64; 2]; 2]) -> Self {
        let mut out = Self::zeros(self.grid);
        for (j, k, u) in self.modes() {
            let a = m(j, k);
            let i = self.grid.index(j, k);
            out.x[i] = a[0][0] * u[0] + a[0][1] * u[1];
            out.y[i] = a[1][0] * u[0] + a[1][1] * u[1];
        }
        out
    }

    /// Translation `u(t, s) ↦ u(t + τ, s + σ)`.
    pub fn translated(&self, tau: f64, sigma: f64) -> Self {
        let mut out = self.clone();
        for (j, k, u) in self.modes() {
            let phase = Complex64::from_polar(1.0, j as f64 * tau + k as f64 * sigma);
            let i = self.grid.index(j, k);
            out.x[i] = u[0] * phase;
            out.y[i] = u[1] * phase;
        }
        out
    }

    /// Samples on the field's own collocation grid.
    pub fn to_grid(&self) -> GridValues {
        self.to_grid_sized(self.grid.nt, self.grid.ns)
            .expect("grid resolves its own truncation")
    }

    /// Samples on an `nt × ns` grid, which must resolve the truncation.
    pub fn to_grid_sized(&self, nt: usize, ns: usize) -> Result<GridValues> {
        Grid2D::new(nt, ns, self.grid.j_max, self.grid.k_max)?;
        let fft = Fft2::new(nt, ns);
        Ok(self.to_grid_with(&fft))
    }

    /// Samples using a prepared transform plan of the target size.
    pub fn to_grid_with(&self, fft: &Fft2) -> GridValues {
        let (nt, ns) = fft.shape();
        let mut buf = vec![Complex64::default(); nt * ns];
        for (j, k, u) in self.modes() {
            buf[wrap(j, nt) * ns + wrap(k, ns)] = u[0] + Complex64::i() * u[1];
        }
        fft.inverse(&mut buf);
        GridValues {
            nt,
            ns,
            x: buf.iter().map(|c| c.re).collect(),
            y: buf.iter().map(|c| c.im).collect(),
        }
    }

    /// Projects grid samples onto the truncation of `grid`.
    ///
    /// Modes above the truncation are discarded; the sample grid may be finer
    /// than `grid`'s own collocation grid.
    pub fn from_grid(values: &GridValues, grid: Grid2D) -> Result<Self> {
        Grid2D::new(values.nt, values.ns, grid.j_max, grid.k_max)?;
        let fft = Fft2::new(values.nt, values.ns);
        Ok(Self::from_grid_with(values, grid, &fft))
    }

    pub fn from_grid_with(values: &GridValues, grid: Grid2D, fft: &Fft2) -> Self {
        let (nt, ns) = fft.shape();
        debug_assert_eq!((nt, ns), (values.nt, values.ns));
        let mut buf: Vec<Complex64> = values
            .x
            .iter()
            .zip(&values.y)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        fft.forward(&mut buf);
        let norm = 1.0 / (nt * ns) as f64;
        let mut out = Self::zeros(grid);
        let jm = grid.j_max as i64;
        let km = grid.k_max as i64;
        for j in -jm..=jm {
            for k in -km..=km {
                let z = buf[wrap(j, nt) * ns + wrap(k, ns)] * norm;
                let zc = buf[wrap(-j, nt) * ns + wrap(-k, ns)].conj() * norm;
                let i = grid.index(j, k);
                out.x[i] = (z + zc) * 0.5;
                out.y[i] = (z - zc) * Complex64::new(0.0, -0.5);
            }
        }
        out
    }

    /// Evaluates a pointwise map on a grid oversampled by `padding` and
    /// truncates the result back to this field's modes.
    pub fn dealiased_pointwise(
        &self,
        padding: usize,
        map: impl Fn([f64; 2]) -> [f64; 2],
    ) -> Result<Self> {
        let fine = self.grid.padded(padding)?;
        let fft = Fft2::new(fine.nt, fine.ns);
        let mut values = self.to_grid_with(&fft);
        for (x, y) in values.x.iter_mut().zip(values.y.iter_mut()) {
            let [a, b] = map([*x, *y]);
            *x = a;
            *y = b;
        }
        Ok(Self::from_grid_with(&values, self.grid, &fft))
    }

    /// Pointwise value at an arbitrary `(t, s)` by direct summation.
    pub fn eval(&self, t: f64, s: f64) -> [f64; 2] {
        let mut acc = [0.0; 2];
        for (j, k, u) in self.modes() {
            let e = Complex64::from_polar(1.0, j as f64 * t + k as f64 * s);
            acc[0] += (u[0] * e).re;
            acc[1] += (u[1] * e).re;
        }
        acc
    }

    /// Copies the coefficients onto another truncation (zero-fill or cut).
    pub fn retruncated(&self, grid: Grid2D) -> Self {
        let mut out = Self::zeros(grid);
        for (j, k, u) in self.modes() {
            if grid.contains(j, k) {
                out.set_site(j, k, u);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_invariants() {
        assert!(Grid2D::new(6, 8, 2, 3).is_ok());
        assert!(Grid2D::new(5, 8, 2, 3).is_err());
        assert!(Grid2D::new(4, 8, 2, 3).is_err());
        assert!(Grid2D::new(2, 2, 0, 0).is_err());
        let g = Grid2D::for_truncation(32, 32).unwrap();
        assert_eq!((g.nt(), g.ns()), (66, 66));
        assert!(g.padded(0).is_err());
    }

    #[test]
    fn constant_mode_is_constant_field() {
        let g = Grid2D::for_truncation(4, 4).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set(0, 0, [c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let v = f.to_grid();
        for (x, y) in v.x.iter().zip(&v.y) {
            assert!((x - 1.0).abs() < 1e-15 && y.abs() < 1e-15);
        }
    }

    #[test]
    fn pure_cosine_mode() {
        let g = Grid2D::new(16, 12, 4, 3).unwrap();
        let mut f = SpectralField::zeros(g);
        for (j, k) in [(3, 2), (3, -2)] {
            f.set(j, k, [c(0.25, 0.0), c(0.0, 0.0)]).unwrap();
        }
        let v = f.to_grid();
        for m in 0..16 {
            for n in 0..12 {
                let want = (3.0 * g.t(m)).cos() * (2.0 * g.s(n)).cos();
                let [x, y] = v.get(m, n);
                assert!((x - want).abs() < 1e-14, "{m} {n}");
                assert!(y.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sobolev_examples() {
        let g = Grid2D::for_truncation(3, 3).unwrap();
        let mut f = SpectralField::zeros(g);
        assert_eq!(f.sobolev_norm(3.0), 0.0);
        f.set(0, 0, [c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        for s in [0.0, 1.0, 2.5] {
            assert!((f.sobolev_norm(s) - 1.0).abs() < 1e-15);
        }
        let mut f = SpectralField::zeros(g);
        f.set(1, 1, [c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((f.sobolev_norm(1.0) - 6f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn set_keeps_hermitian() {
        let g = Grid2D::for_truncation(3, 3).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set(2, -1, [c(0.3, -0.2), c(0.1, 0.7)]).unwrap();
        f.set(0, 0, [c(0.5, 0.9), c(0.0, 0.0)]).unwrap();
        assert_eq!(f.hermitian_defect(), 0.0);
        assert_eq!(f.get(-2, 1)[0], c(0.3, 0.2));
        assert!(f.set(4, 0, [c(1.0, 0.0); 2]).is_err());
    }

    #[test]
    fn square_of_cosine_is_dealiased() {
        let g = Grid2D::for_truncation(4, 2).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set(1, 0, [c(0.5, 0.0), c(0.0, 0.0)]).unwrap();
        let sq = f.dealiased_pointwise(4, |[x, _]| [x * x, 0.0]).unwrap();
        assert!((sq.get(0, 0)[0].re - 0.5).abs() < 1e-15);
        assert!((sq.get(2, 0)[0].re - 0.25).abs() < 1e-15);
        assert!((sq.get(-2, 0)[0].re - 0.25).abs() < 1e-15);
        let total: f64 = sq.modes().map(|(_, _, u)| u[0].norm() + u[1].norm()).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn square_of_top_mode_keeps_only_the_mean() {
        let jm = 4;
        let g = Grid2D::for_truncation(jm, 2).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set(jm as i64, 0, [c(0.5, 0.0), c(0.0, 0.0)]).unwrap();
        let sq = f.dealiased_pointwise(4, |[x, _]| [x * x, 0.0]).unwrap();
        // cos²(Jt) = 1/2 + cos(2Jt)/2 and 2J lies outside the truncation.
        for (j, k, u) in sq.modes() {
            let want = if (j, k) == (0, 0) { 0.5 } else { 0.0 };
            assert!((u[0] - c(want, 0.0)).norm() < 1e-15, "({j},{k})");
        }
    }

    #[test]
    fn identity_map_is_identity() {
        let g = Grid2D::for_truncation(5, 4).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set(2, 3, [c(0.1, 0.2), c(-0.3, 0.05)]).unwrap();
        f.set(5, -4, [c(0.01, 0.0), c(0.0, 0.02)]).unwrap();
        let h = f.dealiased_pointwise(4, |u| u).unwrap();
        assert!(h.sub(&f).max_coeff() < 1e-15);
    }

    #[test]
    fn translation_matches_pointwise_shift() {
        let g = Grid2D::for_truncation(4, 4).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set(1, 2, [c(0.2, -0.1), c(0.05, 0.3)]).unwrap();
        let sh = f.translated(0.3, -0.7);
        let a = sh.eval(1.1, 2.2);
        let b = f.eval(1.4, 1.5);
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    }
}
