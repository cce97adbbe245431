//! The standing-wave equation `F(u, ω) = L(ω) u + g(u) = 0` and its
//! linearization, restricted to the symmetric subspace.
//!
//! With `ū = x - iy` the nonlinearity is `g_c = -ω ū²/(1 + ū)`, returned in
//! real form `(Re g_c, Im g_c)`. It is evaluated pointwise on an oversampled
//! grid and truncated back. Its derivative acts on a perturbation through
//! `conj(du)`: `dg_c = c · conj(du)` with `c = -ω ū(2 + ū)/(1 + ū)²`, which is
//! the real matrix `[[Re c, Im c], [Im c, -Re c]]`.
//!
//! On the symmetric coefficients `(X, Y)_{j,k}` the linear part is the real
//! symmetric block `[[k² + 2ω, j/q], [j/q, k²]]`.

use faer::Mat;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{wrap, Fft2, Grid2D, GridValues, SpectralField, SymmetricField, DEFAULT_PADDING};
use crate::spectrum::{multiplier_matrix, BifurcationPoint, OperatorParams};

/// Pointwise `|u|` must stay below this bound (the nonlinearity is singular
/// at `ū = -1`).
pub const DOMAIN_LIMIT: f64 = 0.95;

/// `-ū²/(1 + ū)`, so that `g = ω · g_unit`.
fn g_unit(x: f64, y: f64) -> Complex64 {
    let ub = Complex64::new(x, -y);
    -(ub * ub) / (1.0 + ub)
}

/// `-ū(2 + ū)/(1 + ū)²`, so that `dg_c/dū = ω · dg_unit`.
fn dg_unit(x: f64, y: f64) -> Complex64 {
    let ub = Complex64::new(x, -y);
    let d = 1.0 + ub;
    -(ub * (2.0 + ub)) / (d * d)
}

fn check_domain(values: &GridValues) -> Result<()> {
    let max_modulus = values.max_modulus();
    if !(max_modulus < DOMAIN_LIMIT) {
        return Err(Error::Domain {
            max_modulus,
            limit: DOMAIN_LIMIT,
        });
    }
    Ok(())
}

/// `g(u)` with the default oversampling.
pub fn eval_g(u: &SpectralField, omega: f64) -> Result<SpectralField> {
    ResidualWorkspace::new(*u.grid(), 1, DEFAULT_PADDING)?.eval_g(u, omega)
}

/// Cached transform plan and discretization for repeated residual calls.
#[derive(Debug, Clone)]
pub struct ResidualWorkspace {
    grid: Grid2D,
    q: i64,
    padding: usize,
    fft: Fft2,
}

/// Symmetric-basis index together with the Hermitian sites it occupies.
struct BasisSites {
    /// `(j, k, sign)`; the sign is `+1` for `j ≥ 0` and `-1` otherwise and
    /// only matters for `Y` entries.
    sites: Vec<(i64, i64, f64)>,
    weight: f64,
}

fn basis_sites(j: usize, k: usize) -> BasisSites {
    let (j, k) = (j as i64, k as i64);
    let mut sites = vec![(j, k, 1.0)];
    if k != 0 {
        sites.push((j, -k, 1.0));
    }
    if j != 0 {
        sites.push((-j, k, -1.0));
        if k != 0 {
            sites.push((-j, -k, -1.0));
        }
    }
    let weight = 1.0 / sites.len() as f64;
    BasisSites { sites, weight }
}

impl ResidualWorkspace {
    pub fn new(grid: Grid2D, q: i64, padding: usize) -> Result<Self> {
        if padding < 2 {
            return Err(Error::Config(format!("padding = {padding} must be at least 2")));
        }
        if q < 1 {
            return Err(Error::Config(format!("q = {q} must be positive")));
        }
        let fine = grid.padded(padding)?;
        Ok(Self {
            grid,
            q,
            padding,
            fft: Fft2::new(fine.nt(), fine.ns()),
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn params(&self, omega: f64) -> OperatorParams {
        OperatorParams::new(self.q, omega).expect("q validated at construction")
    }

    fn check_grid(&self, grid: &Grid2D) {
        assert_eq!(
            (grid.j_max(), grid.k_max()),
            (self.grid.j_max(), self.grid.k_max()),
            "field truncation differs from the workspace"
        );
    }

    fn fine_values(&self, u: &SpectralField) -> Result<GridValues> {
        self.check_grid(u.grid());
        let values = u.to_grid_with(&self.fft);
        check_domain(&values)?;
        Ok(values)
    }

    fn map_fine(&self, mut values: GridValues, f: impl Fn(f64, f64) -> [f64; 2]) -> SpectralField {
        for (x, y) in values.x.iter_mut().zip(values.y.iter_mut()) {
            let [a, b] = f(*x, *y);
            *x = a;
            *y = b;
        }
        SpectralField::from_grid_with(&values, self.grid, &self.fft)
    }

    /// `g(u)`, truncated to the workspace modes.
    pub fn eval_g(&self, u: &SpectralField, omega: f64) -> Result<SpectralField> {
        let values = self.fine_values(u)?;
        Ok(self.map_fine(values, |x, y| {
            let g = g_unit(x, y) * omega;
            [g.re, g.im]
        }))
    }

    /// `L(ω) v` on symmetric coefficients.
    pub fn linear(&self, v: &SymmetricField, omega: f64) -> SymmetricField {
        self.check_grid(v.grid());
        let q = self.q as f64;
        let mut out = SymmetricField::zeros(self.grid);
        for (j, k, x) in v.x_modes() {
            let k2 = (k * k) as f64;
            let y = if j > 0 { v.y(j, k) } else { 0.0 };
            let r = j as f64 / q;
            out.set_x(j, k, (k2 + 2.0 * omega) * x + r * y).unwrap();
            if j > 0 {
                out.set_y(j, k, r * x + k2 * y).unwrap();
            }
        }
        out
    }

    /// `F(v, ω) = restrict(L(ω) v + g(v))`.
    pub fn residual(&self, v: &SymmetricField, omega: f64) -> Result<SymmetricField> {
        let g = self.eval_g(&v.embed(), omega)?;
        let g = SymmetricField::restrict(&g)?;
        Ok(self.linear(v, omega).add_scaled(1.0, &g))
    }

    /// `L(ω) u + g(u)` on the full Hermitian coefficient set, without any
    /// symmetry restriction.
    pub fn full_residual(&self, u: &SpectralField, omega: f64) -> Result<SpectralField> {
        let p = self.params(omega);
        let lin = u.apply_multiplier(|j, k| multiplier_matrix(j, k, &p));
        Ok(lin.add_scaled(1.0, &self.eval_g(u, omega)?))
    }

    /// `∂_ω F = (I + R) v + g(v)/ω`.
    pub fn d_omega(&self, v: &SymmetricField) -> Result<SymmetricField> {
        let values = self.fine_values(&v.embed())?;
        let gu = SymmetricField::restrict(&self.map_fine(values, |x, y| {
            let g = g_unit(x, y);
            [g.re, g.im]
        }))?;
        let mut out = gu;
        for (j, k, x) in v.x_modes() {
            let i = out.x(j, k);
            out.set_x(j, k, i + 2.0 * x).unwrap();
        }
        Ok(out)
    }

    /// `L(ω) dv + Dg(v)[dv]`.
    pub fn jacobian_apply(
        &self,
        v: &SymmetricField,
        omega: f64,
        dv: &SymmetricField,
    ) -> Result<SymmetricField> {
        let base = self.fine_values(&v.embed())?;
        let mut pert = dv.embed().to_grid_with(&self.fft);
        for i in 0..base.x.len() {
            let c = dg_unit(base.x[i], base.y[i]) * omega;
            let (dx, dy) = (pert.x[i], pert.y[i]);
            pert.x[i] = c.re * dx + c.im * dy;
            pert.y[i] = c.im * dx - c.re * dy;
        }
        let dg = SpectralField::from_grid_with(&pert, self.grid, &self.fft);
        let dg = SymmetricField::restrict(&dg)?;
        Ok(self.linear(dv, omega).add_scaled(1.0, &dg))
    }

    /// Fourier coefficients of `Re c` and `Im c` on the oversampled grid,
    /// where `c = ω · dg_unit(v)`.
    fn dg_coefficients(&self, v: &SymmetricField, omega: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let base = self.fine_values(&v.embed())?;
        let (nt, ns) = self.fft.shape();
        let mut buf: Vec<Complex64> = base
            .x
            .iter()
            .zip(&base.y)
            .map(|(&x, &y)| dg_unit(x, y) * omega)
            .collect();
        self.fft.forward(&mut buf);
        let norm = 1.0 / (nt * ns) as f64;
        let mut re = vec![Complex64::default(); nt * ns];
        let mut im = vec![Complex64::default(); nt * ns];
        for m in 0..nt {
            for n in 0..ns {
                let z = buf[m * ns + n] * norm;
                let zc = buf[((nt - m) % nt) * ns + (ns - n) % ns].conj() * norm;
                re[m * ns + n] = (z + zc) * 0.5;
                im[m * ns + n] = (z - zc) * Complex64::new(0.0, -0.5);
            }
        }
        Ok((re, im))
    }

    /// Dense matrix of `dv ↦ jacobian_apply(v, ω, dv)` in the symmetric
    /// coefficient ordering of [`SymmetricField::to_vec`].
    ///
    /// Built by discrete convolution of the coefficients of `Dg(v)` with the
    /// (at most four) Hermitian sites of each basis function, so it agrees
    /// with the matrix-free product up to rounding.
    pub fn assemble_dense(&self, v: &SymmetricField, omega: f64) -> Result<Mat<f64>> {
        self.check_grid(v.grid());
        let (alpha, beta) = self.dg_coefficients(v, omega)?;
        let (nt, ns) = self.fft.shape();
        let at = |c: &[Complex64], j: i64, k: i64| c[wrap(j, nt) * ns + wrap(k, ns)];

        let template = SymmetricField::zeros(self.grid);
        let n = template.len();
        let (jm, km) = (self.grid.j_max(), self.grid.k_max());
        // (index, j, k, is_y)
        let mut basis = Vec::with_capacity(n);
        for j in 0..=jm {
            for k in 0..=km {
                basis.push((template.x_index(j, k), j, k, false));
                if j > 0 {
                    basis.push((template.y_index(j, k), j, k, true));
                }
            }
        }
        let sites: Vec<BasisSites> = basis.iter().map(|&(_, j, k, _)| basis_sites(j, k)).collect();

        let mut mat = Mat::<f64>::zeros(n, n);
        for (col_pos, &(col, _, _, col_is_y)) in basis.iter().enumerate() {
            let input = &sites[col_pos];
            for (row_pos, &(row, _, _, row_is_y)) in basis.iter().enumerate() {
                let output = &sites[row_pos];
                let mut acc = 0.0;
                for &(oj, ok, osign) in &output.sites {
                    let mut out = Complex64::default();
                    for &(ij, ik, isign) in &input.sites {
                        let (a, b) = (at(&alpha, oj - ij, ok - ik), at(&beta, oj - ij, ok - ik));
                        // Input site value: x̂ = w for X, ŷ = -i·sign·w for Y.
                        out += match (col_is_y, row_is_y) {
                            (false, false) => a,
                            (false, true) => b,
                            (true, false) => b * Complex64::new(0.0, -isign),
                            (true, true) => -a * Complex64::new(0.0, -isign),
                        };
                    }
                    acc += if row_is_y { -osign * out.im } else { out.re };
                }
                mat[(row, col)] = acc * input.weight;
            }
        }

        let q = self.q as f64;
        for j in 0..=jm {
            for k in 0..=km {
                let xi = template.x_index(j, k);
                let k2 = (k * k) as f64;
                mat[(xi, xi)] += k2 + 2.0 * omega;
                if j > 0 {
                    let yi = template.y_index(j, k);
                    let r = j as f64 / q;
                    mat[(xi, yi)] += r;
                    mat[(yi, xi)] += r;
                    mat[(yi, yi)] += k2;
                }
            }
        }
        Ok(mat)
    }

    /// `[[DF, ∂_ω F], [e_cᵀ, 0]]` for the unknowns `(v, ω)` and the amplitude
    /// constraint on the symmetric coefficient with index `constraint`.
    pub fn assemble_bordered(&self, v: &SymmetricField, omega: f64, constraint: usize) -> Result<Mat<f64>> {
        let jac = self.assemble_dense(v, omega)?;
        let col = self.d_omega(v)?.to_vec();
        Ok(border(&jac, &col, constraint))
    }

    /// Transversality check at the bifurcation point: the bordered matrix
    /// with the column `(I + R) φ` in place of `∂_ω F`, where `φ` is the
    /// kernel function. `∂_ω F` itself vanishes at `v = 0`; this column is
    /// its derivative along the branch. Returns the 2-norm condition number,
    /// finite exactly when `(I + R) φ` lies outside the range of `L(ω₀)`.
    pub fn transversality_condition(&self, bif: &BifurcationPoint) -> Result<f64> {
        let phi = bif.kernel_fn(self.grid)?;
        let zero = SymmetricField::zeros(self.grid);
        let jac = self.assemble_dense(&zero, bif.omega0)?;
        let mut col = SymmetricField::zeros(self.grid);
        for (j, k, x) in phi.x_modes() {
            col.set_x(j, k, 2.0 * x)?;
        }
        let constraint = zero.x_index(bif.j0 as usize, bif.k0 as usize);
        let m = border(&jac, &col.to_vec(), constraint);
        let s = m
            .singular_values()
            .map_err(|e| Error::Degenerate(format!("singular value decomposition failed: {e:?}")))?;
        let (max, min) = s.iter().fold((0.0f64, f64::INFINITY), |(a, b), &x| (a.max(x), b.min(x)));
        Ok(max / min)
    }
}

fn border(jac: &Mat<f64>, col: &[f64], constraint: usize) -> Mat<f64> {
    let n = jac.nrows();
    let mut m = Mat::<f64>::zeros(n + 1, n + 1);
    for c in 0..n {
        for r in 0..n {
            m[(r, c)] = jac[(r, c)];
        }
    }
    for (r, &v) in col.iter().enumerate() {
        m[(r, n)] = v;
    }
    m[(n, constraint)] = 1.0;
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid2D, scale: f64, decay: f64, rng: &mut ChaCha8Rng) -> SymmetricField {
        let mut v = SymmetricField::zeros(grid);
        for j in 0..=grid.j_max() {
            for k in 0..=grid.k_max() {
                let w = scale * (-decay * (j + k) as f64).exp();
                v.set_x(j, k, w * rng.gen_range(-1.0..1.0)).unwrap();
                if j > 0 {
                    v.set_y(j, k, w * rng.gen_range(-1.0..1.0)).unwrap();
                }
            }
        }
        v
    }

    fn constant(grid: Grid2D, x: f64) -> SpectralField {
        let mut u = SpectralField::zeros(grid);
        u.set(0, 0, [Complex64::new(x, 0.0), Complex64::default()]).unwrap();
        u
    }

    #[test]
    fn g_of_constant() {
        let g = Grid2D::for_truncation(3, 3).unwrap();
        assert_eq!(eval_g(&SpectralField::zeros(g), -0.5).unwrap().max_coeff(), 0.0);

        let out = eval_g(&constant(g, 0.1), -0.5).unwrap();
        let want = 0.5 * 0.01 / 1.1;
        assert!((out.get(0, 0)[0].re - want).abs() < 1e-16);
        assert!(out.get(0, 0)[1].norm() < 1e-16);
        // Truncated geometric series -ω(ū² - ū³ + ū⁴) agrees to O(ū⁵).
        let series = 0.5 * (0.01 - 0.001 + 0.0001);
        assert!((out.get(0, 0)[0].re - series).abs() < 2e-5);
        assert!((out.get(0, 0)[0].re - series).abs() > 1e-6);
    }

    #[test]
    fn domain_limit_enforced() {
        let g = Grid2D::for_truncation(3, 3).unwrap();
        assert!(matches!(eval_g(&constant(g, 0.96), -0.5), Err(Error::Domain { .. })));
        assert!(eval_g(&constant(g, -0.9), -0.5).is_ok());
        assert!(ResidualWorkspace::new(g, 1, 1).is_err());
    }

    #[test]
    fn linear_block_matches_multiplier() {
        let grid = Grid2D::for_truncation(4, 4).unwrap();
        let ws = ResidualWorkspace::new(grid, 2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_field(grid, 1.0, 0.0, &mut rng);
        let p = ws.params(-0.375);
        let via_multiplier = v.embed().apply_multiplier(|j, k| multiplier_matrix(j, k, &p));
        let direct = ws.linear(&v, -0.375);
        assert!(direct.embed().sub(&via_multiplier).max_coeff() < 1e-14);
    }

    #[test]
    fn zero_is_a_solution() {
        let grid = Grid2D::for_truncation(4, 4).unwrap();
        let ws = ResidualWorkspace::new(grid, 2, 4).unwrap();
        let z = SymmetricField::zeros(grid);
        assert_eq!(ws.residual(&z, -0.3).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn small_kernel_multiple_is_nearly_a_solution() {
        let bif = crate::spectrum::bifurcation_frequency(2, 1).unwrap();
        let grid = Grid2D::for_truncation(8, 8).unwrap();
        let ws = ResidualWorkspace::new(grid, 2, 4).unwrap();
        let v = bif.kernel_fn(grid).unwrap().scaled(1e-6);
        let r = ws.residual(&v, bif.omega0).unwrap().l2_norm();
        assert!(r <= 1e-12 && r > 0.0, "{r:e}");
    }

    /// Independent oracle: project pointwise samples onto cos·cos and
    /// sin·cos by direct quadrature.
    #[test]
    fn residual_against_quadrature() {
        let grid = Grid2D::for_truncation(4, 4).unwrap();
        let ws = ResidualWorkspace::new(grid, 2, 4).unwrap();
        let mut v = SymmetricField::zeros(grid);
        v.set_x(0, 1, 0.5).unwrap();
        v.set_x(1, 1, 0.1).unwrap();
        v.set_y(1, 1, -0.05).unwrap();
        let omega = -0.375;
        let r = ws.residual(&v, omega).unwrap();

        let (nt, ns) = (grid.nt() * 4, grid.ns() * 4);
        let mut oracle = ws.linear(&v, omega);
        for j in 0..=4usize {
            for k in 0..=4usize {
                let (mut sx, mut sy) = (0.0, 0.0);
                for m in 0..nt {
                    let t = 2.0 * std::f64::consts::PI * m as f64 / nt as f64;
                    for n in 0..ns {
                        let s = 2.0 * std::f64::consts::PI * n as f64 / ns as f64;
                        let [x, y] = v.eval(t, s);
                        let ub = Complex64::new(x, -y);
                        let g = -omega * ub * ub / (1.0 + ub);
                        let ck = (k as f64 * s).cos();
                        sx += g.re * (j as f64 * t).cos() * ck;
                        sy += g.im * (j as f64 * t).sin() * ck;
                    }
                }
                let w = crate::field::ModeClass::of(j, k).weight() * (nt * ns) as f64;
                oracle.set_x(j, k, oracle.x(j, k) + sx / w).unwrap();
                if j > 0 {
                    oracle.set_y(j, k, oracle.y(j, k) + sy / w).unwrap();
                }
            }
        }
        assert!(r.sub(&oracle).max_abs() < 1e-14, "{:e}", r.sub(&oracle).max_abs());
    }

    #[test]
    fn residual_is_affine_in_omega() {
        let grid = Grid2D::for_truncation(6, 6).unwrap();
        let ws = ResidualWorkspace::new(grid, 1, 4).unwrap();
        let v = random_field(grid, 0.05, 0.3, &mut ChaCha8Rng::seed_from_u64(3));
        let r = |w: f64| ws.residual(&v, w).unwrap();
        let (a, b, c) = (r(-0.9), r(-0.6), r(-0.3));
        let mid = a.add_scaled(1.0, &c).scaled(0.5);
        assert!(mid.sub(&b).max_abs() < 1e-15);
        // ∂_ω F equals the slope.
        let slope = c.sub(&a).scaled(1.0 / 0.6);
        assert!(slope.sub(&ws.d_omega(&v).unwrap()).max_abs() < 1e-13);
    }

    #[test]
    fn jacobian_against_central_differences() {
        let grid = Grid2D::for_truncation(6, 6).unwrap();
        let ws = ResidualWorkspace::new(grid, 2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let v = random_field(grid, 0.1, 0.4, &mut rng);
            let dv = random_field(grid, 1.0, 0.2, &mut rng);
            let h = 1e-5;
            let fp = ws.residual(&v.add_scaled(h, &dv), -0.4).unwrap();
            let fm = ws.residual(&v.add_scaled(-h, &dv), -0.4).unwrap();
            let fd = fp.sub(&fm).scaled(0.5 / h);
            let jv = ws.jacobian_apply(&v, -0.4, &dv).unwrap();
            let rel = fd.sub(&jv).l2_norm() / jv.l2_norm();
            assert!(rel <= 1e-6, "{rel:e}");
        }
    }

    #[test]
    fn jacobian_at_zero_is_linear_part() {
        let grid = Grid2D::for_truncation(5, 3).unwrap();
        let ws = ResidualWorkspace::new(grid, 3, 4).unwrap();
        let dv = random_field(grid, 1.0, 0.0, &mut ChaCha8Rng::seed_from_u64(9));
        let z = SymmetricField::zeros(grid);
        assert_eq!(ws.jacobian_apply(&z, -0.2, &dv).unwrap(), ws.linear(&dv, -0.2));
    }

    #[test]
    fn dense_matches_matrix_free() {
        let grid = Grid2D::for_truncation(6, 5).unwrap();
        let ws = ResidualWorkspace::new(grid, 2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = random_field(grid, 0.15, 0.3, &mut rng);
        let m = ws.assemble_dense(&v, -0.37).unwrap();
        for _ in 0..20 {
            let dv = random_field(grid, 1.0, 0.0, &mut rng);
            let x = Mat::<f64>::from_fn(dv.len(), 1, |i, _| dv.to_vec()[i]);
            let y = &m * &x;
            let free = ws.jacobian_apply(&v, -0.37, &dv).unwrap().to_vec();
            let err = free
                .iter()
                .enumerate()
                .map(|(i, f)| (f - y[(i, 0)]).abs())
                .fold(0.0, f64::max);
            let scale = free.iter().fold(0.0f64, |a, f| a.max(f.abs()));
            assert!(err <= 1e-12 * scale, "{err:e}");
        }
    }

    #[test]
    fn unbordered_null_space_is_the_kernel() {
        let bif = crate::spectrum::bifurcation_frequency(2, 1).unwrap();
        let grid = Grid2D::for_truncation(8, 8).unwrap();
        let ws = ResidualWorkspace::new(grid, 2, 4).unwrap();
        let z = SymmetricField::zeros(grid);
        let m = ws.assemble_dense(&z, bif.omega0).unwrap();
        let mut s = m.singular_values().unwrap();
        s.sort_by(f64::total_cmp);
        assert!(s[0] < 1e-10);
        let resonant: Vec<_> = crate::spectrum::resonant_set(&bif.params(), 8, 8)
            .iter()
            .map(|r| (r.j, r.k))
            .collect();
        let cert = crate::spectrum::certify_gap(&bif.params(), &resonant, 8, 8).unwrap();
        assert!(s[1] >= cert.scan_gap * (1.0 - 1e-12), "{} {}", s[1], cert.scan_gap);
        // The null vector is the kernel function.
        let phi = bif.kernel_fn(grid).unwrap().to_vec();
        let x = Mat::<f64>::from_fn(phi.len(), 1, |i, _| phi[i]);
        let y = &m * &x;
        assert!((0..phi.len()).all(|i| y[(i, 0)].abs() < 1e-15));
    }

    #[test]
    fn transversality_holds() {
        let bif = crate::spectrum::bifurcation_frequency(2, 1).unwrap();
        let grid = Grid2D::for_truncation(8, 8).unwrap();
        let ws = ResidualWorkspace::new(grid, 2, 4).unwrap();
        let cond = ws.transversality_condition(&bif).unwrap();
        assert!(cond.is_finite() && cond < 1e6, "{cond}");
    }

    #[test]
    fn full_residual_stays_symmetric() {
        let grid = Grid2D::for_truncation(6, 6).unwrap();
        let ws = ResidualWorkspace::new(grid, 1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let v = random_field(grid, 0.1, 0.3, &mut rng);
            let full = ws.full_residual(&v.embed(), -0.7).unwrap();
            let (sym, defect) = SymmetricField::project(&full);
            assert!(defect < 1e-12 * full.l2_norm().max(1.0));
            assert!(sym.sub(&ws.residual(&v, -0.7).unwrap()).max_abs() < 1e-14);
        }
    }

    #[test]
    fn nonlinear_derivative_is_small_near_zero() {
        let grid = Grid2D::for_truncation(5, 5).unwrap();
        let ws = ResidualWorkspace::new(grid, 1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let dv = random_field(grid, 1.0, 0.3, &mut rng);
        let base = random_field(grid, 1.0, 0.3, &mut rng);
        let mut ratios = Vec::new();
        for scale in [1e-2, 1e-3, 1e-4] {
            let v = base.scaled(scale);
            let dg = ws.jacobian_apply(&v, -0.5, &dv).unwrap().sub(&ws.linear(&dv, -0.5));
            let sup = v.embed().to_grid().max_modulus();
            ratios.push(dg.l2_norm() / (sup * dv.l2_norm()));
        }
        assert!(ratios.iter().all(|r| *r < 5.0), "{ratios:?}");
    }
}
