//! The linearized operator `L(ω)` as Fourier multipliers.
//!
//! In real coordinates `u = (x, y)`,
//! `L u = -(1/q) J ∂_t u - ∂_s² u + ω (I + R) u` with `J = [[0,-1],[1,0]]`
//! and `R = diag(1, -1)`. On the mode `e^{i(jt + ks)}` it acts by
//!
//! ```text
//! M_{j,k} = [[k² + 2ω,   i j/q],
//!            [ -i j/q,     k² ]]
//! ```
//!
//! with eigenvalues `λ_{j,k,±1} = k² + ω ± √((j/q)² + ω²)`.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Grid2D, SymmetricField};

/// Threshold on `|λ|` for counting a lattice mode as resonant.
pub const ZERO_TOLERANCE: f64 = 1e-9;

/// Default spectral-gap margin `ε`.
pub const DEFAULT_EPSILON: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorParams {
    pub q: i64,
    pub omega: f64,
    /// Gap margin used by [`certify_gap`].
    pub epsilon: f64,
}

impl OperatorParams {
    pub fn new(q: i64, omega: f64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Precondition("q must be nonzero".into()));
        }
        if !omega.is_finite() {
            return Err(Error::Precondition(format!("omega = {omega} is not finite")));
        }
        Ok(Self {
            q,
            omega,
            epsilon: DEFAULT_EPSILON,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    fn ratio(&self, j: i64) -> f64 {
        j as f64 / self.q as f64
    }
}

pub type Matrix2c = [[Complex64; 2]; 2];

/// `M_{j,k}` exactly as written above.
pub fn multiplier_matrix(j: i64, k: i64, p: &OperatorParams) -> Matrix2c {
    let k2 = (k * k) as f64;
    let r = p.ratio(j);
    [
        [Complex64::new(k2 + 2.0 * p.omega, 0.0), Complex64::new(0.0, r)],
        [Complex64::new(0.0, -r), Complex64::new(k2, 0.0)],
    ]
}

/// Eigenvalues `(lower, upper)` of a Hermitian 2×2 matrix by direct
/// decomposition.
pub fn hermitian_eigenvalues(m: &Matrix2c) -> (f64, f64) {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let half_gap = ((a - d) * 0.5).hypot(m[0][1].norm());
    let mid = (a + d) * 0.5;
    let (lo, hi) = (mid - half_gap, mid + half_gap);
    // Recover the smaller-modulus root from the determinant to avoid cancellation.
    let det = a * d - m[0][1].norm_sqr();
    if hi.abs() >= lo.abs() && hi != 0.0 {
        (det / hi, hi)
    } else if lo != 0.0 {
        (lo, det / lo)
    } else {
        (lo, hi)
    }
}

/// Unit eigenvector of a Hermitian 2×2 matrix for eigenvalue `lambda`,
/// normalized so its first nonzero component is real and positive.
pub fn hermitian_eigenvector(m: &Matrix2c, lambda: f64) -> [Complex64; 2] {
    let r1 = [m[0][0] - lambda, m[0][1]];
    let r2 = [m[1][0], m[1][1] - lambda];
    let n1 = r1[0].norm_sqr() + r1[1].norm_sqr();
    let n2 = r2[0].norm_sqr() + r2[1].norm_sqr();
    let v = if n1 == 0.0 && n2 == 0.0 {
        [Complex64::new(1.0, 0.0), Complex64::default()]
    } else if n1 >= n2 {
        [-r1[1], r1[0]]
    } else {
        [r2[1], -r2[0]]
    };
    normalize_phase(v)
}

fn normalize_phase(v: [Complex64; 2]) -> [Complex64; 2] {
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let lead = if v[0].norm() > 1e-14 * norm { v[0] } else { v[1] };
    let phase = lead.conj() / lead.norm() / norm;
    [v[0] * phase, v[1] * phase]
}

/// Branch of the direct decomposition that vanished.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenBranch {
    Lower,
    Upper,
}

/// Eigenvalue of `M_{j,k}` with the smaller modulus.
pub fn min_modulus_eigenvalue(j: i64, k: i64, p: &OperatorParams) -> (f64, EigenBranch) {
    let (lo, hi) = hermitian_eigenvalues(&multiplier_matrix(j, k, p));
    if lo.abs() <= hi.abs() {
        (lo, EigenBranch::Lower)
    } else {
        (hi, EigenBranch::Upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEigenpair {
    pub j: i64,
    pub k: i64,
    pub l: i8,
    pub lambda: f64,
    pub evec: [Complex64; 2],
}

impl ModeEigenpair {
    /// `‖M e - λ e‖ / ‖e‖`.
    pub fn residual(&self, p: &OperatorParams) -> f64 {
        let m = multiplier_matrix(self.j, self.k, p);
        let e = self.evec;
        let r0 = m[0][0] * e[0] + m[0][1] * e[1] - e[0] * self.lambda;
        let r1 = m[1][0] * e[0] + m[1][1] * e[1] - e[1] * self.lambda;
        (r0.norm_sqr() + r1.norm_sqr()).sqrt() / (e[0].norm_sqr() + e[1].norm_sqr()).sqrt()
    }
}

/// `λ_{j,k,l}` from the closed form with eigenvector
/// `(-ω - l√((j/q)² + ω²), i j/q)`, falling back to direct decomposition when
/// that vector vanishes (it does at `j = 0` for one of the two branches).
pub fn eigenpair(j: i64, k: i64, l: i8, p: &OperatorParams) -> Result<ModeEigenpair> {
    if l != 1 && l != -1 {
        return Err(Error::Precondition(format!("l = {l} must be +1 or -1")));
    }
    let r = p.ratio(j);
    let root = r.hypot(p.omega);
    let lf = l as f64;
    let lambda = (k * k) as f64 + p.omega + lf * root;
    let closed = [Complex64::new(-p.omega - lf * root, 0.0), Complex64::new(0.0, r)];
    let scale = (k * k) as f64 + root + p.omega.abs() + 1.0;
    let norm = (closed[0].norm_sqr() + closed[1].norm_sqr()).sqrt();
    let evec = if norm > 1e-12 * scale {
        normalize_phase(closed)
    } else {
        hermitian_eigenvector(&multiplier_matrix(j, k, p), lambda)
    };
    Ok(ModeEigenpair {
        j,
        k,
        l,
        lambda,
        evec,
    })
}

/// Bifurcation point `(q, k₀)` with `j₀ = q k₀² - 1` and
/// `ω₀ = -(1/q)(1 - 1/(2 q k₀²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifurcationPoint {
    pub q: i64,
    pub k0: i64,
    pub j0: i64,
    pub omega0: f64,
}

pub fn bifurcation_frequency(q: i64, k0: i64) -> Result<BifurcationPoint> {
    if q < 1 || k0 < 1 {
        return Err(Error::Precondition(format!("need q >= 1 and k0 >= 1, got q={q}, k0={k0}")));
    }
    let j0 = q * k0 * k0 - 1;
    if j0 == 0 {
        return Err(Error::Degenerate(
            "q = 1, k0 = 1 gives j0 = 0: the kernel mode is time independent".into(),
        ));
    }
    let qf = q as f64;
    let omega0 = -(1.0 - 1.0 / (2.0 * qf * (k0 * k0) as f64)) / qf;
    let bif = BifurcationPoint { q, k0, j0, omega0 };
    let lambda = bif.kernel_eigenvalue();
    if lambda.abs() > 1e-12 || !(omega0 > -1.0 / qf && omega0 < 0.0) {
        return Err(Error::Degenerate(format!(
            "bifurcation check failed: lambda = {lambda:e}, omega0 = {omega0}"
        )));
    }
    Ok(bif)
}

impl BifurcationPoint {
    pub fn params(&self) -> OperatorParams {
        OperatorParams {
            q: self.q,
            omega: self.omega0,
            epsilon: DEFAULT_EPSILON,
        }
    }

    /// `λ_{j₀,k₀,-1}(ω₀)`.
    pub fn kernel_eigenvalue(&self) -> f64 {
        let r = self.j0 as f64 / self.q as f64;
        (self.k0 * self.k0) as f64 + self.omega0 - r.hypot(self.omega0)
    }

    /// `(X, Y)` coefficients of the kernel direction on the `(j₀, k₀)` mode,
    /// unnormalized: `(k₀², -j₀/q)`.
    pub fn kernel_direction(&self) -> (f64, f64) {
        ((self.k0 * self.k0) as f64, -(self.j0 as f64) / self.q as f64)
    }

    /// `1 - k₀⁻²/q`, the ratio `-Y/X` of the kernel direction.
    pub fn kernel_ratio(&self) -> f64 {
        1.0 - 1.0 / ((self.k0 * self.k0) as f64 * self.q as f64)
    }

    /// Unit-L² kernel function `∝ (k₀² cos j₀t, -(j₀/q) sin j₀t) cos k₀s`.
    pub fn kernel_fn(&self, grid: Grid2D) -> Result<SymmetricField> {
        let (j0, k0) = (self.j0 as usize, self.k0 as usize);
        if j0 > grid.j_max() || k0 > grid.k_max() {
            return Err(Error::Config(format!(
                "truncation J={}, K={} does not contain the kernel mode ({j0},{k0})",
                grid.j_max(),
                grid.k_max()
            )));
        }
        let (a, b) = self.kernel_direction();
        let norm = a.hypot(b) * 0.5;
        let mut v = SymmetricField::zeros(grid);
        v.set_x(j0, k0, a / norm)?;
        v.set_y(j0, k0, b / norm)?;
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonantMode {
    pub j: i64,
    pub k: i64,
    pub branch: EigenBranch,
    pub lambda: f64,
}

/// All `(j, k)` with `|j| ≤ scan_j`, `|k| ≤ scan_k` at which `M_{j,k}` has an
/// eigenvalue of modulus `≤ ZERO_TOLERANCE`, sorted by `(j, k)`.
pub fn resonant_set(p: &OperatorParams, scan_j: i64, scan_k: i64) -> Vec<ResonantMode> {
    let mut out = Vec::new();
    for j in -scan_j..=scan_j {
        for k in -scan_k..=scan_k {
            let (lambda, branch) = min_modulus_eigenvalue(j, k, p);
            if lambda.abs() <= ZERO_TOLERANCE {
                out.push(ResonantMode { j, k, branch, lambda });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapCertificate {
    /// Smallest `|λ|` over the scanned box, excluded eigen-directions removed.
    pub scan_gap: f64,
    pub worst_mode: (i64, i64),
    /// Analytic lower bound on `|λ|` for every mode outside the box.
    pub tail_bound: f64,
    /// `min(scan_gap, tail_bound)`: a lower bound over the whole lattice.
    pub gap: f64,
}

/// Lower bound on `|λ|` over the lattice minus the `exclude` sites, under the
/// hypothesis `2ε < |ω| < 1/q - 2ε`, `ω < 0`.
///
/// At an excluded site only its vanishing eigenvalue is dropped; the other
/// one still counts. Outside the scan box the bound follows from writing
/// `λ_{j,k,-1} = m/q + ω - δ` with `m = qk² - |j|` an integer and
/// `0 < δ = √((j/q)² + ω²) - |j|/q ≤ min(|ω|, qω²/(2|j|))`, and
/// `λ_{j,k,+1} ≥ max(k², |j|/q - |ω|)`.
pub fn certify_gap(
    p: &OperatorParams,
    exclude: &[(i64, i64)],
    scan_j: i64,
    scan_k: i64,
) -> Result<GapCertificate> {
    let (q, w, eps) = (p.q as f64, p.omega, p.epsilon);
    if p.q < 1 || !(w < 0.0) || !(2.0 * eps < w.abs() && w.abs() < 1.0 / q - 2.0 * eps) {
        return Err(Error::Precondition(format!(
            "gap certification needs omega < 0 and 2eps < |omega| < 1/q - 2eps (q={}, omega={w}, eps={eps})",
            p.q
        )));
    }
    if scan_j < 0 || scan_k < 0 {
        return Err(Error::Precondition("scan bounds must be non-negative".into()));
    }
    let mut scan_gap = f64::INFINITY;
    let mut worst_mode = (0, 0);
    for j in -scan_j..=scan_j {
        for k in -scan_k..=scan_k {
            let (lo, hi) = hermitian_eigenvalues(&multiplier_matrix(j, k, p));
            let value = if exclude.contains(&(j, k)) {
                lo.abs().max(hi.abs())
            } else {
                lo.abs().min(hi.abs())
            };
            if value < scan_gap {
                scan_gap = value;
                worst_mode = (j, k);
            }
        }
    }

    let aw = w.abs();
    let jn = (scan_j + 1) as f64;
    // |j| beyond the box.
    let delta_far = q * w * w / (2.0 * jn);
    let bound_far = (1.0 / q - aw - delta_far).min(aw);
    // |j| inside the box, |k| beyond it.
    let m_min = p.q * (scan_k + 1) * (scan_k + 1) - scan_j;
    if m_min < 1 {
        return Err(Error::Precondition(format!(
            "scan box {scan_j}x{scan_k} is too flat to certify the tail (need q(K+1)^2 > J)"
        )));
    }
    let bound_tall = m_min as f64 / q - 2.0 * aw;
    let bound_upper = 1.0f64.min(jn / q - aw);
    let tail_bound = bound_far.min(bound_tall).min(bound_upper);
    if !(tail_bound > 0.0) {
        return Err(Error::Precondition(format!(
            "scan box {scan_j}x{scan_k} too small: tail bound {tail_bound:.3e} is not positive"
        )));
    }
    Ok(GapCertificate {
        scan_gap,
        worst_mode,
        tail_bound,
        gap: scan_gap.min(tail_bound),
    })
}
