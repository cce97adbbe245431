//! Time integration of `w_t = i(w_ss - w/|w|²)` and of the filament system
//! `∂_t u_j = i(Γ_j ∂_ss u_j + Σ_{i≠j} Γ_i (u_j - u_i)/|u_j - u_i|²)`,
//! plus reconstruction and dynamic validation of computed standing waves.
//!
//! Curves are sampled at `s_m = 2πm/N_s`; spatial derivatives are spectral.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::central_config::CentralConfig;
use crate::continuation::BranchPoint;
use crate::error::{Error, Result};
use crate::spectrum::BifurcationPoint;

/// `|w|` below this is treated as a singularity.
pub const MODULUS_FLOOR: f64 = 1e-8;

/// Filaments closer than this are treated as collided.
pub const COLLISION_DISTANCE: f64 = 1e-6;

/// Default number of samples along `s`.
pub const DEFAULT_SAMPLES: usize = 128;

fn s_at(m: usize, ns: usize) -> f64 {
    2.0 * PI * m as f64 / ns as f64
}

fn check_samples(ns: usize) -> Result<()> {
    if ns < 4 || !ns.is_multiple_of(2) {
        return Err(Error::Config(format!("Ns = {ns} must be even and >= 4")));
    }
    Ok(())
}

/// Periodic spectral calculus on `N_s` points.
#[derive(Clone)]
struct Periodic {
    ns: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Signed wavenumber of each storage slot; the Nyquist slot gets 0 for
    /// first derivatives.
    k: Vec<f64>,
}

impl Periodic {
    fn new(ns: usize) -> Self {
        let mut planner = FftPlanner::new();
        let k = (0..ns)
            .map(|m| {
                if m < ns / 2 {
                    m as f64
                } else if m == ns / 2 {
                    0.0
                } else {
                    m as f64 - ns as f64
                }
            })
            .collect();
        Self {
            ns,
            fwd: planner.plan_fft_forward(ns),
            inv: planner.plan_fft_inverse(ns),
            k,
        }
    }

    /// `k²` for the second derivative, keeping the Nyquist mode.
    fn k2(&self, m: usize) -> f64 {
        let k = if m == self.ns / 2 { (self.ns / 2) as f64 } else { self.k[m] };
        k * k
    }

    /// Applies `values ↦ F⁻¹ diag(mult) F values`.
    fn apply(&self, values: &mut [Complex64], mult: &[Complex64]) {
        self.fwd.process(values);
        let norm = 1.0 / self.ns as f64;
        for (v, m) in values.iter_mut().zip(mult) {
            *v *= m * norm;
        }
        self.inv.process(values);
    }

    fn derivative(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mult: Vec<Complex64> = self.k.iter().map(|&k| Complex64::new(0.0, k)).collect();
        let mut out = values.to_vec();
        self.apply(&mut out, &mult);
        out
    }

    fn propagator(&self, factor: f64) -> Vec<Complex64> {
        (0..self.ns)
            .map(|m| Complex64::from_polar(1.0, -factor * self.k2(m)))
            .collect()
    }
}

/// Samples `w(s_m)` of a solution of the scalar equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarWave {
    pub values: Vec<Complex64>,
}

impl ScalarWave {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        check_samples(values.len())?;
        let w = Self { values };
        w.check_floor()?;
        Ok(w)
    }

    pub fn constant(ns: usize, a: Complex64) -> Result<Self> {
        Self::new(vec![a; ns])
    }

    pub fn from_fn(ns: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new((0..ns).map(|m| f(s_at(m, ns))).collect())
    }

    pub fn ns(&self) -> usize {
        self.values.len()
    }

    pub fn s(&self, m: usize) -> f64 {
        s_at(m, self.ns())
    }

    /// Smallest `|w|` and the index where it occurs.
    pub fn min_modulus(&self) -> (f64, usize) {
        self.values
            .iter()
            .enumerate()
            .map(|(m, w)| (w.norm(), m))
            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
    }

    fn check_floor(&self) -> Result<()> {
        let (modulus, m) = self.min_modulus();
        if !(modulus > MODULUS_FLOOR) {
            return Err(Error::Singularity { modulus, s: self.s(m) });
        }
        Ok(())
    }

    /// `∫ |w|² ds`.
    pub fn mass(&self) -> f64 {
        quadrature(self.values.iter().map(|w| w.norm_sqr()))
    }

    /// `∫ |w_s|² + log|w|² ds`.
    pub fn energy(&self) -> f64 {
        let ws = Periodic::new(self.ns()).derivative(&self.values);
        quadrature(
            ws.iter()
                .zip(&self.values)
                .map(|(d, w)| d.norm_sqr() + w.norm_sqr().ln()),
        )
    }

    pub fn max_distance(&self, other: &ScalarWave) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn quadrature(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum * 2.0 * PI / n as f64
}

/// Strang splitting for the scalar equation with cached transforms.
#[derive(Clone)]
pub struct PdeStepper {
    spectral: Periodic,
    dt: f64,
    linear: Vec<Complex64>,
}

impl PdeStepper {
    pub fn new(ns: usize, dt: f64) -> Result<Self> {
        check_samples(ns)?;
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt = {dt} must be positive")));
        }
        let spectral = Periodic::new(ns);
        let linear = spectral.propagator(dt);
        Ok(Self { spectral, dt, linear })
    }

    fn nonlinear_half(&self, values: &mut [Complex64]) {
        let h = 0.5 * self.dt;
        for w in values.iter_mut() {
            *w *= Complex64::from_polar(1.0, -h / w.norm_sqr());
        }
    }

    /// One step `N(dt/2) ∘ L(dt) ∘ N(dt/2)`.
    pub fn step(&self, w: &ScalarWave) -> Result<ScalarWave> {
        assert_eq!(w.ns(), self.spectral.ns, "sample count differs from the stepper");
        let mut values = w.values.clone();
        self.nonlinear_half(&mut values);
        self.spectral.apply(&mut values, &self.linear);
        self.nonlinear_half(&mut values);
        let out = ScalarWave { values };
        out.check_floor()?;
        Ok(out)
    }

    /// `steps` consecutive steps; `observe` sees the state after each one.
    pub fn evolve(
        &self,
        w: &ScalarWave,
        steps: usize,
        mut observe: impl FnMut(usize, &ScalarWave),
    ) -> Result<ScalarWave> {
        let mut cur = w.clone();
        for i in 1..=steps {
            cur = self.step(&cur)?;
            observe(i, &cur);
        }
        Ok(cur)
    }
}

/// One Strang step of the scalar equation.
pub fn step_pde(w: &ScalarWave, dt: f64) -> Result<ScalarWave> {
    PdeStepper::new(w.ns(), dt)?.step(w)
}

/// Number of steps and the step size that land exactly on `horizon`.
pub fn step_plan(horizon: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(Error::Config(format!("need dt > 0 and T >= 0 (dt = {dt}, T = {horizon})")));
    }
    let steps = (horizon / dt).round().max(if horizon > 0.0 { 1.0 } else { 0.0 }) as usize;
    Ok((steps, if steps == 0 { dt } else { horizon / steps as f64 }))
}

/// Center filament `u_0` plus the `n` outer filaments.
#[derive(Debug, Clone, PartialEq)]
pub struct FilamentState {
    pub config: CentralConfig,
    /// `curves[j][m] = u_j(s_m)`; `curves[0]` is the center filament.
    pub curves: Vec<Vec<Complex64>>,
    pub time: f64,
}

impl FilamentState {
    pub fn new(config: CentralConfig, curves: Vec<Vec<Complex64>>, time: f64) -> Result<Self> {
        if curves.len() != config.n + 1 {
            return Err(Error::Config(format!(
                "expected {} curves (center plus {}), got {}",
                config.n + 1,
                config.n,
                curves.len()
            )));
        }
        let ns = curves[0].len();
        check_samples(ns)?;
        if curves.iter().any(|c| c.len() != ns) {
            return Err(Error::Config("all curves need the same number of samples".into()));
        }
        let state = Self { config, curves, time };
        state.check_separation()?;
        Ok(state)
    }

    /// `u_j = w a_j` with `a_0 = 0`.
    pub fn homographic(config: CentralConfig, w: &ScalarWave) -> Result<Self> {
        let curves = config
            .positions_with_center()
            .iter()
            .map(|&a| w.values.iter().map(|&x| x * a).collect())
            .collect();
        Self::new(config, curves, 0.0)
    }

    pub fn ns(&self) -> usize {
        self.curves[0].len()
    }

    /// `Γ_0 = -κ`, `Γ_j = 1`.
    pub fn circulations(&self) -> Vec<f64> {
        (0..=self.config.n).map(|j| self.config.circulation(j)).collect()
    }

    /// Closest approach `(distance, i, j, s)` over all pairs and samples.
    pub fn min_separation(&self) -> (f64, usize, usize, f64) {
        let mut best = (f64::INFINITY, 0, 0, 0.0);
        for i in 0..self.curves.len() {
            for j in i + 1..self.curves.len() {
                for m in 0..self.ns() {
                    let d = (self.curves[i][m] - self.curves[j][m]).norm();
                    if d < best.0 {
                        best = (d, i, j, s_at(m, self.ns()));
                    }
                }
            }
        }
        best
    }

    fn check_separation(&self) -> Result<()> {
        let (distance, i, j, s) = self.min_separation();
        if !(distance >= COLLISION_DISTANCE) {
            return Err(Error::Collision { i, j, s, distance });
        }
        Ok(())
    }

    /// `(Σ_j Γ_j ∫ u_j ds, Σ_j Γ_j ∫ |u_j|² ds)`, both conserved.
    pub fn invariants(&self) -> (Complex64, f64) {
        let gamma = self.circulations();
        let ns = self.ns() as f64;
        let mut linear = Complex64::default();
        let mut quadratic = 0.0;
        for (g, c) in gamma.iter().zip(&self.curves) {
            linear += c.iter().sum::<Complex64>() * (*g * 2.0 * PI / ns);
            quadratic += g * quadrature(c.iter().map(|u| u.norm_sqr()));
        }
        (linear, quadratic)
    }

    /// `Σ_j Γ_j² ∫ |∂_s u_j|² ds - Σ_{i<j} Γ_i Γ_j ∫ log|u_j - u_i|² ds`,
    /// the Hamiltonian of the filament system.
    pub fn hamiltonian(&self) -> f64 {
        let gamma = self.circulations();
        let spectral = Periodic::new(self.ns());
        let mut h = 0.0;
        for (j, c) in self.curves.iter().enumerate() {
            let d = spectral.derivative(c);
            h += gamma[j] * gamma[j] * quadrature(d.iter().map(|x| x.norm_sqr()));
            for i in 0..j {
                let logs = c.iter().zip(&self.curves[i]).map(|(a, b)| (a - b).norm_sqr().ln());
                h -= gamma[i] * gamma[j] * quadrature(logs);
            }
        }
        h
    }

    /// `max_j max_s |u_j - w a_j|`.
    pub fn homographic_distance(&self, w: &ScalarWave) -> f64 {
        self.config
            .positions_with_center()
            .iter()
            .zip(&self.curves)
            .flat_map(|(&a, c)| c.iter().zip(&w.values).map(move |(u, x)| (u - x * a).norm()))
            .fold(0.0, f64::max)
    }
}

/// Fourth-order Runge-Kutta in the integrating-factor (Lawson) form: the
/// linear terms `i Γ_j ∂_ss` are propagated exactly, the interaction
/// explicitly.
#[derive(Clone)]
pub struct FilamentStepper {
    spectral: Periodic,
    dt: f64,
    gamma: Vec<f64>,
    half: Vec<Vec<Complex64>>,
}

impl FilamentStepper {
    pub fn new(config: &CentralConfig, ns: usize, dt: f64) -> Result<Self> {
        check_samples(ns)?;
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt = {dt} must be positive")));
        }
        let spectral = Periodic::new(ns);
        let gamma: Vec<f64> = (0..=config.n).map(|j| config.circulation(j)).collect();
        let half = gamma.iter().map(|g| spectral.propagator(0.5 * dt * g)).collect();
        Ok(Self {
            spectral,
            dt,
            gamma,
            half,
        })
    }

    fn propagate(&self, curves: &mut [Vec<Complex64>]) {
        for (c, e) in curves.iter_mut().zip(&self.half) {
            self.spectral.apply(c, e);
        }
    }

    fn interaction(&self, curves: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
        let ns = self.spectral.ns;
        let mut out = vec![vec![Complex64::default(); ns]; curves.len()];
        for j in 0..curves.len() {
            for i in 0..curves.len() {
                if i == j {
                    continue;
                }
                for m in 0..ns {
                    let d = curves[j][m] - curves[i][m];
                    let r2 = d.norm_sqr();
                    if !(r2.sqrt() >= COLLISION_DISTANCE) {
                        return Err(Error::Collision {
                            i: i.min(j),
                            j: i.max(j),
                            s: s_at(m, ns),
                            distance: r2.sqrt(),
                        });
                    }
                    out[j][m] += Complex64::new(0.0, self.gamma[i] / r2) * d;
                }
            }
        }
        Ok(out)
    }

    pub fn step(&self, state: &FilamentState) -> Result<FilamentState> {
        assert_eq!(state.ns(), self.spectral.ns, "sample count differs from the stepper");
        let dt = self.dt;
        let axpy = |u: &[Vec<Complex64>], a: f64, k: &[Vec<Complex64>]| -> Vec<Vec<Complex64>> {
            u.iter()
                .zip(k)
                .map(|(uc, kc)| uc.iter().zip(kc).map(|(x, y)| x + y * a).collect())
                .collect()
        };
        let u = &state.curves;
        let k1 = self.interaction(u)?;
        let mut u2 = axpy(u, 0.5 * dt, &k1);
        self.propagate(&mut u2);
        let k2 = self.interaction(&u2)?;
        let mut eu = u.clone();
        self.propagate(&mut eu);
        let u3 = axpy(&eu, 0.5 * dt, &k2);
        let k3 = self.interaction(&u3)?;
        let mut u4 = axpy(&eu, dt, &k3);
        self.propagate(&mut u4);
        let k4 = self.interaction(&u4)?;

        // E²u + dt/6 (E² k1 + 2E(k2 + k3) + k4)
        let mut acc = axpy(u, dt / 6.0, &k1);
        self.propagate(&mut acc);
        let mid: Vec<Vec<Complex64>> = axpy(&acc, dt / 3.0, &axpy(&k2, 1.0, &k3));
        let mut next = mid;
        self.propagate(&mut next);
        let next = axpy(&next, dt / 6.0, &k4);

        FilamentState::new(state.config.clone(), next, state.time + dt)
    }

    pub fn evolve(
        &self,
        state: &FilamentState,
        steps: usize,
        mut observe: impl FnMut(usize, &FilamentState),
    ) -> Result<FilamentState> {
        let mut cur = state.clone();
        for i in 1..=steps {
            cur = self.step(&cur)?;
            observe(i, &cur);
        }
        Ok(cur)
    }
}

/// One step of the filament system.
pub fn step_filaments(state: &FilamentState, dt: f64) -> Result<FilamentState> {
    FilamentStepper::new(&state.config, state.ns(), dt)?.step(state)
}

/// `a = (-ω)^{-1/2}`, the amplitude of the rotating solution with frequency `ω`.
pub fn rotating_amplitude(omega: f64) -> Result<f64> {
    if !(omega < 0.0) {
        return Err(Error::Precondition(format!("omega = {omega} must be negative")));
    }
    Ok((-omega).powf(-0.5))
}

/// `u(τ, s_m)` as the complex perturbation `x + iy`.
fn perturbation(bp: &BranchPoint, tau: f64, samples: usize) -> Vec<Complex64> {
    (0..samples)
        .map(|m| {
            let [x, y] = bp.v.eval(tau, s_at(m, samples));
            Complex64::new(x, y)
        })
        .collect()
}

/// `w(t, s_m) = a e^{iωt} (1 + u(t/q, s_m))`.
pub fn standing_wave(bp: &BranchPoint, q: i64, t: f64, samples: usize) -> Result<Vec<Complex64>> {
    check_samples(samples)?;
    let a = rotating_amplitude(bp.omega)?;
    let phase = Complex64::from_polar(a, bp.omega * t);
    Ok(perturbation(bp, t / q as f64, samples)
        .into_iter()
        .map(|u| phase * (1.0 + u))
        .collect())
}

/// Filament curves `u_j(t, s_m) = a e^{iωt} a_j (1 + u(t/q, s_m))`, center
/// first.
pub fn reconstruct(
    bp: &BranchPoint,
    bif: &BifurcationPoint,
    cfg: &CentralConfig,
    t: f64,
    samples: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let w = standing_wave(bp, bif.q, t, samples)?;
    Ok(cfg
        .positions_with_center()
        .iter()
        .map(|&aj| w.iter().map(|&x| x * aj).collect())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationSettings {
    pub dt: f64,
    /// Number of periods `2πq` to integrate.
    pub periods: usize,
    pub samples: usize,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            periods: 1,
            samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    pub horizon: f64,
    pub steps: usize,
    pub dt: f64,
    /// `max_s |w(T) - a e^{iωT}(1 + u(0, s))|`.
    pub deviation: f64,
    /// `max_s |w_t - i(w_ss - w/|w|²)|` of the ansatz at `t = 0`.
    pub ansatz_residual: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
}

/// Evolves `w(0, s) = a(1 + u(0, s))` with the scalar integrator over whole
/// periods `2πq` and compares with the rotating-frame prediction.
pub fn validate_standing_wave(
    bp: &BranchPoint,
    bif: &BifurcationPoint,
    settings: ValidationSettings,
) -> Result<ValidationReport> {
    let ns = settings.samples;
    let horizon = 2.0 * PI * bif.q as f64 * settings.periods as f64;
    let (steps, dt) = step_plan(horizon, settings.dt)?;
    let w0 = ScalarWave::new(standing_wave(bp, bif.q, 0.0, ns)?)?;
    let expected = ScalarWave::new(standing_wave(bp, bif.q, horizon, ns)?)?;
    let stepper = PdeStepper::new(ns, dt)?;
    let (m0, e0) = (w0.mass(), w0.energy());
    let (mut mass_drift, mut energy_drift) = (0.0f64, 0.0f64);
    let check_every = (steps / 64).max(1);
    let end = stepper.evolve(&w0, steps, |i, w| {
        if i % check_every == 0 || i == steps {
            mass_drift = mass_drift.max((w.mass() - m0).abs());
            energy_drift = energy_drift.max((w.energy() - e0).abs());
        }
    })?;
    Ok(ValidationReport {
        horizon,
        steps,
        dt,
        deviation: end.max_distance(&expected),
        ansatz_residual: ansatz_residual(bp, bif.q, ns)?,
        mass_drift,
        energy_drift,
    })
}

/// Pointwise residual of the standing-wave ansatz in the scalar equation at
/// `t = 0`, from the exact derivatives of the coefficient series.
pub fn ansatz_residual(bp: &BranchPoint, q: i64, samples: usize) -> Result<f64> {
    check_samples(samples)?;
    let a = rotating_amplitude(bp.omega)?;
    let mut worst: f64 = 0.0;
    for m in 0..samples {
        let [u, ut, uss] = bp.v.eval_with_derivatives(0.0, s_at(m, samples));
        let (u, ut, uss) = (
            Complex64::new(u[0], u[1]),
            Complex64::new(ut[0], ut[1]),
            Complex64::new(uss[0], uss[1]),
        );
        let w = a * (1.0 + u);
        let w_t = a * (Complex64::new(0.0, bp.omega) * (1.0 + u) + ut / q as f64);
        let rhs = Complex64::i() * (a * uss - w / w.norm_sqr());
        worst = worst.max((w_t - rhs).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::central_config::polygon_config;

    /// Around `|w| = 2` every mode is linearly stable (`k² - 2a⁻² > 0` for
    /// `k ≥ 1`); near `|w| = 1` the `k = 1` mode grows.
    fn smooth_wave(ns: usize) -> ScalarWave {
        ScalarWave::from_fn(ns, |s| {
            Complex64::new(2.0 + 0.2 * s.cos(), 0.1 * (2.0 * s).sin()) * Complex64::from_polar(1.0, 0.3 * s.sin())
        })
        .unwrap()
    }

    #[test]
    fn constant_solution_is_exact() {
        let w = ScalarWave::constant(16, Complex64::new(1.0, 0.0)).unwrap();
        let (steps, dt) = step_plan(PI, 1e-4).unwrap();
        let end = PdeStepper::new(16, dt).unwrap().evolve(&w, steps, |_, _| {}).unwrap();
        assert!(end.values.iter().all(|v| (v + 1.0).norm() < 1e-10));

        let w = ScalarWave::constant(8, Complex64::new(2.0, 0.0)).unwrap();
        let end = step_pde(&w, 0.5).unwrap();
        let want = Complex64::from_polar(2.0, -0.5 / 4.0);
        assert!(end.values.iter().all(|v| (v - want).norm() < 1e-15));
    }

    #[test]
    fn singular_data_rejected() {
        assert!(matches!(
            ScalarWave::constant(8, Complex64::default()),
            Err(Error::Singularity { .. })
        ));
        assert!(ScalarWave::new(vec![Complex64::new(1.0, 0.0); 5]).is_err());
    }

    #[test]
    fn mass_and_energy_of_constant() {
        let w = ScalarWave::constant(8, Complex64::new(2.0, 0.0)).unwrap();
        assert!((w.mass() - 8.0 * PI).abs() < 1e-13);
        assert!((w.energy() - 2.0 * PI * 4f64.ln()).abs() < 1e-13);
        // |w_s|² contributes for a phase winding.
        let w = ScalarWave::from_fn(16, |s| Complex64::from_polar(1.0, 2.0 * s)).unwrap();
        assert!((w.energy() - 8.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn pde_conserves_mass_and_energy() {
        let w = smooth_wave(64);
        let (m0, e0) = (w.mass(), w.energy());
        let (steps, dt) = step_plan(2.0 * PI, 1e-4).unwrap();
        let mut drift = (0.0f64, 0.0f64);
        PdeStepper::new(64, dt)
            .unwrap()
            .evolve(&w, steps, |i, w| {
                if i % 500 == 0 {
                    drift.0 = drift.0.max((w.mass() - m0).abs());
                    drift.1 = drift.1.max((w.energy() - e0).abs());
                }
            })
            .unwrap();
        assert!(drift.0 < 1e-8 && drift.1 < 1e-8, "{drift:?}");
    }

    #[test]
    fn homographic_data_stays_homographic() {
        let cfg = polygon_config(3, 2.0).unwrap();
        let w = ScalarWave::constant(16, Complex64::new(1.0, 0.0)).unwrap();
        let state = FilamentState::homographic(cfg.clone(), &w).unwrap();
        let (steps, dt) = step_plan(0.1, 1e-3).unwrap();
        let end = FilamentStepper::new(&cfg, 16, dt).unwrap().evolve(&state, steps, |_, _| {}).unwrap();
        let wend = PdeStepper::new(16, dt).unwrap().evolve(&w, steps, |_, _| {}).unwrap();
        assert!(end.homographic_distance(&wend) < 1e-12);
        assert!(end.curves[0].iter().all(|u| u.norm() < 1e-13));
    }

    #[test]
    fn filament_invariants_are_conserved() {
        let cfg = polygon_config(3, 2.0).unwrap();
        let ns = 32;
        let curves: Vec<Vec<Complex64>> = cfg
            .positions_with_center()
            .iter()
            .enumerate()
            .map(|(j, &a)| {
                (0..ns)
                    .map(|m| {
                        let s = s_at(m, ns);
                        a * (1.0 + 0.05 * (s + j as f64).cos()) + Complex64::new(0.0, 0.03 * s.sin())
                    })
                    .collect()
            })
            .collect();
        let state = FilamentState::new(cfg.clone(), curves, 0.0).unwrap();
        let (l0, q0) = state.invariants();
        let h0 = state.hamiltonian();
        let end = FilamentStepper::new(&cfg, ns, 1e-3).unwrap().evolve(&state, 200, |_, _| {}).unwrap();
        let (l1, q1) = end.invariants();
        assert!((end.hamiltonian() - h0).abs() < 1e-9, "{}", end.hamiltonian() - h0);
        assert!((l1 - l0).norm() < 1e-10, "{}", (l1 - l0).norm());
        assert!((q1 - q0).abs() < 1e-10, "{}", (q1 - q0).abs());
        assert!((end.time - 0.2).abs() < 1e-14);
    }

    #[test]
    fn collision_is_reported() {
        let cfg = polygon_config(2, 1.0).unwrap();
        let ns = 8;
        let mut curves: Vec<Vec<Complex64>> = cfg
            .positions_with_center()
            .iter()
            .map(|&a| vec![a; ns])
            .collect();
        curves[2][3] = curves[1][3] + 1e-7;
        match FilamentState::new(cfg, curves, 0.0) {
            Err(Error::Collision { i, j, distance, .. }) => {
                assert_eq!((i, j), (1, 2));
                assert!(distance < 1e-6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trivial_standing_wave() {
        let bif = crate::spectrum::bifurcation_frequency(2, 1).unwrap();
        let grid = crate::field::Grid2D::for_truncation(4, 4).unwrap();
        let bp = BranchPoint {
            b: 0.0,
            omega: bif.omega0,
            v: crate::field::SymmetricField::zeros(grid),
            residual_norm: 0.0,
            newton_iters: 0,
        };
        let cfg = polygon_config(3, 2.0).unwrap();
        let curves = reconstruct(&bp, &bif, &cfg, 0.7, 16).unwrap();
        let a = rotating_amplitude(bif.omega0).unwrap();
        let rot = Complex64::from_polar(a, bif.omega0 * 0.7);
        for (c, aj) in curves.iter().zip(cfg.positions_with_center()) {
            assert!(c.iter().all(|u| (u - rot * aj).norm() < 1e-15));
        }
        let rep = validate_standing_wave(
            &bp,
            &bif,
            ValidationSettings {
                samples: 16,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.deviation < 1e-10, "{rep:?}");
        assert!(rep.ansatz_residual < 1e-15);
    }
}
