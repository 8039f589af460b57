//! Conventional dynamic-localization analysis of the step-index profile.
//!
//! In a rotating frame that absorbs the oscillating part of β₁(z), the
//! principal-array coupling acquires Fourier factors
//! F_q = Z⁻¹∫₀^Z exp[−iφ(z) − iqωz] dz with φ(z) = ∫₀^z (β₁ − β̄₁) dz′.
//! Keeping only F₀ (the rotating-wave step) reduces the system to a static
//! one with κ₁₂ renormalized by F₀ and the principal propagation constant
//! replaced by the mean β̄₁. Light then decouples wherever F₀ = 0 — the
//! conventional resonance picture, to be contrasted with the exact Floquet
//! treatment, which ties localization to bound-mode formation instead.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::analysis;
use crate::floquet::{self, FloquetError};
use crate::linalg::C64;
use crate::model::{ModulationProfile, SystemConfig};
use crate::propagator::{self, PropagateError};

#[derive(Debug, Error)]
pub enum DynlocError {
    #[error("dynamic-localization analysis requires a step-index profile")]
    NotStepIndex,
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    #[error(transparent)]
    Propagate(#[from] PropagateError),
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
}

/// Parameters of the step profile β₁(z).
#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    pub beta0: f64,
    pub delta: f64,
    pub period: f64,
    pub duty: f64,
}

impl TryFrom<&ModulationProfile> for StepParams {
    type Error = DynlocError;

    fn try_from(profile: &ModulationProfile) -> Result<Self, DynlocError> {
        match *profile {
            ModulationProfile::StepIndex { beta0, delta, period, duty } => {
                Ok(Self { beta0, delta, period, duty })
            }
            _ => Err(DynlocError::NotStepIndex),
        }
    }
}

impl StepParams {
    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// β̄₁ = Z⁻¹∫₀^Z β₁(z) dz = β₀ + δ(Z − Z′)/Z.
    pub fn beta1_mean(&self) -> f64 {
        self.beta0 + self.delta * (self.period - self.duty) / self.period
    }
}

/// Rotating-frame phase φ(z) = ∫₀^z (β₁(z′) − β̄₁) dz′ on one period.
///
/// Piecewise linear and continuous, with φ(0) = φ(Z) = 0: slope
/// −δ(Z−Z′)/Z on [0, Z′] and +δZ′/Z on [Z′, Z].
pub fn rotating_phase(p: &StepParams, z: f64) -> f64 {
    debug_assert!((0.0..=p.period + 1e-12).contains(&z));
    let s1 = -p.delta * (p.period - p.duty) / p.period;
    if z <= p.duty {
        s1 * z
    } else {
        let s2 = p.delta * p.duty / p.period;
        s1 * p.duty + s2 * (z - p.duty)
    }
}

fn segment_integral(slope: f64, qomega: f64, len: f64, phase0: f64) -> C64 {
    // ∫₀^len exp[−i(phase0 + (slope + qω)t)] dt, phase-cancelled sinc form
    let mu = slope + qomega;
    let x = 0.5 * mu * len;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    C64::new(0.0, -(phase0 + x)).exp() * (len * sinc)
}

/// Fourier factor F_q by closed-form integration of the piecewise-linear
/// phase over the two constant segments.
pub fn fourier_factor(p: &StepParams, q: i64) -> C64 {
    let qomega = q as f64 * p.omega();
    let s1 = -p.delta * (p.period - p.duty) / p.period;
    let s2 = p.delta * p.duty / p.period;
    let seg1 = segment_integral(s1, qomega, p.duty, 0.0);
    let phase_at_duty = rotating_phase(p, p.duty) + qomega * p.duty;
    let seg2 = segment_integral(s2, qomega, p.period - p.duty, phase_at_duty);
    (seg1 + seg2) / p.period
}

/// F₀ stripped of its overall phase.
///
/// With the origin shifted to the pulse centre the φ-integral is real;
/// relative to z = 0 that shift contributes exactly
/// exp[iδZ′(Z−Z′)/(2Z)], which is divided back out here. Sign changes of
/// this representative locate the F₀ zeros.
pub fn f0_real_representative(p: &StepParams) -> f64 {
    let theta = p.delta * p.duty * (p.period - p.duty) / (2.0 * p.period);
    (fourier_factor(p, 0) * C64::new(0.0, -theta).exp()).re
}

/// Mean shift and Fourier factors of the rotating-frame expansion.
#[derive(Debug, Clone)]
pub struct RotatingFrameFactors {
    pub beta1_mean: f64,
    factors: BTreeMap<i64, C64>,
}

impl RotatingFrameFactors {
    pub fn compute(p: &StepParams, q_max: i64) -> Self {
        let factors = (-q_max..=q_max).map(|q| (q, fourier_factor(p, q))).collect();
        Self { beta1_mean: p.beta1_mean(), factors }
    }

    pub fn factor(&self, q: i64) -> Option<C64> {
        self.factors.get(&q).copied()
    }

    /// Σ_q |F_q|² over the stored range; tends to 1 (unimodular integrand).
    pub fn parseval_sum(&self) -> f64 {
        self.factors.values().map(|f| f.norm_sqr()).sum()
    }
}

/// Static model of the rotating-wave step: κ₁₂ renormalized by |F₀| and
/// the principal propagation constant replaced by β̄₁.
///
/// The complex phase of F₀ is a gauge on the principal amplitude and drops
/// out of every intensity, so the real config carries the modulus.
pub fn effective_model(config: &SystemConfig) -> Result<SystemConfig, DynlocError> {
    let p = StepParams::try_from(&config.modulation)?;
    let f0 = fourier_factor(&p, 0);
    let mut eff = config.clone();
    eff.modulation = ModulationProfile::None;
    eff.kappa12 = config.kappa12 * f0.norm();
    eff.beta1 = p.beta1_mean();
    Ok(eff)
}

/// Zeros of F₀ over a range of modulation periods, duty ratio held fixed.
///
/// Grid scan for sign changes of the real representative, then bisection
/// to `tol` in Z.
pub fn find_f0_zeros(
    delta: f64,
    beta0: f64,
    duty_ratio: f64,
    z_lo: f64,
    z_hi: f64,
    n_grid: usize,
    tol: f64,
) -> Vec<f64> {
    let params = |z: f64| StepParams { beta0, delta, period: z, duty: duty_ratio * z };
    let g = |z: f64| f0_real_representative(&params(z));
    let mut zeros = Vec::new();
    let h = (z_hi - z_lo) / n_grid as f64;
    let mut prev_z = z_lo;
    let mut prev_g = g(prev_z);
    for k in 1..=n_grid {
        let z = z_lo + k as f64 * h;
        let gz = g(z);
        if prev_g == 0.0 {
            zeros.push(prev_z);
        } else if prev_g * gz < 0.0 {
            let (mut a, mut b) = (prev_z, z);
            let mut ga = prev_g;
            while b - a > tol {
                let m = 0.5 * (a + b);
                let gm = g(m);
                if ga * gm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    ga = gm;
                }
            }
            zeros.push(0.5 * (a + b));
        }
        prev_z = z;
        prev_g = gz;
    }
    zeros
}

/// Side-by-side record of the conventional and exact treatments at one
/// modulation period.
#[derive(Debug, Clone, Serialize)]
pub struct MethodComparison {
    pub z_period: f64,
    pub abs_f0_sq: f64,
    /// Mean |A₁|² of the effective static model over the trailing fifth of the run.
    pub eff_intensity_longz: f64,
    /// Same for the exact propagation.
    pub exact_intensity_longz: f64,
    pub fbm_count: usize,
}

/// Run both methods on one configuration.
pub fn compare_methods(config: &SystemConfig, z_max: f64) -> Result<MethodComparison, DynlocError> {
    let p = StepParams::try_from(&config.modulation)?;
    let f0 = fourier_factor(&p, 0);
    let eff = effective_model(config)?;
    let dz = propagator::default_dz(config);

    let eff_trace = propagator::propagate(&eff, z_max, dz)?;
    let exact_trace = propagator::propagate(config, z_max, dz)?;
    let tail = |t: &propagator::AmplitudeTrace| t.mean_principal_intensity(0.8 * z_max, z_max);

    let spectrum = floquet::solve_spectrum_default(config)?;
    let report = analysis::detect_fbm(&spectrum, config)?;

    Ok(MethodComparison {
        z_period: p.period,
        abs_f0_sq: f0.norm_sqr(),
        eff_intensity_longz: tail(&eff_trace),
        exact_intensity_longz: tail(&exact_trace),
        fbm_count: report.count_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_piecewise;

    fn fig8_params(z: f64) -> StepParams {
        StepParams { beta0: 0.5, delta: 1.0, period: z, duty: 0.4 * z }
    }

    fn fig8_config(l: usize, z: f64) -> SystemConfig {
        let mut cfg = SystemConfig::natural(l);
        cfg.beta = 0.5;
        cfg.kappa12 = 0.5;
        cfg.modulation =
            ModulationProfile::StepIndex { beta0: 0.5, delta: 1.0, period: z, duty: 0.4 * z };
        cfg
    }

    struct Lcg(u64);
    impl Lcg {
        fn next_f64(&mut self, lo: f64, hi: f64) -> f64 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            lo + (hi - lo) * ((self.0 >> 11) as f64 / (1u64 << 53) as f64)
        }
    }

    #[test]
    fn phase_is_closed_and_extremal_at_duty() {
        let p = fig8_params(2.0);
        assert_eq!(rotating_phase(&p, 0.0), 0.0);
        assert!(rotating_phase(&p, p.period).abs() < 1e-14);
        let expect = -p.delta * p.duty * (p.period - p.duty) / p.period;
        assert!((rotating_phase(&p, p.duty) - expect).abs() < 1e-14);
        // δ = 0 → φ ≡ 0
        let p0 = StepParams { delta: 0.0, ..p };
        for &z in &[0.0, 0.5, 1.3, 2.0] {
            assert_eq!(rotating_phase(&p0, z), 0.0);
        }
    }

    #[test]
    fn phase_matches_quadrature() {
        let p = fig8_params(3.0);
        let bbar = p.beta1_mean();
        for &z in &[0.4, 1.2, 2.7] {
            let quad = integrate_piecewise(
                |t| {
                    let b1 = if t <= p.duty { p.beta0 } else { p.beta0 + p.delta };
                    C64::new(b1 - bbar, 0.0)
                },
                0.0,
                z,
                &[p.duty],
                1e-13,
            )
            .re;
            assert!((rotating_phase(&p, z) - quad).abs() < 1e-11);
        }
    }

    #[test]
    fn f_zero_without_modulation() {
        let p = StepParams { beta0: 0.7, delta: 0.0, period: 1.5, duty: 0.6 };
        assert!((fourier_factor(&p, 0) - C64::new(1.0, 0.0)).norm() < 1e-14);
        for q in [-3i64, -1, 1, 4] {
            assert!(fourier_factor(&p, q).norm() < 1e-14);
        }
    }

    #[test]
    fn factors_match_quadrature() {
        let mut rng = Lcg(2024);
        for _ in 0..6 {
            let period = rng.next_f64(0.5, 8.0);
            let p = StepParams {
                beta0: rng.next_f64(-1.0, 1.0),
                delta: rng.next_f64(0.0, 4.0),
                period,
                duty: rng.next_f64(0.05, 0.95) * period,
            };
            for q in -3i64..=3 {
                let closed = fourier_factor(&p, q);
                let quad = integrate_piecewise(
                    |z| {
                        let phi = rotating_phase(&p, z);
                        C64::new(0.0, -(phi + q as f64 * p.omega() * z)).exp()
                    },
                    0.0,
                    p.period,
                    &[p.duty],
                    1e-13,
                ) / p.period;
                assert!(
                    (closed - quad).norm() < 1e-10,
                    "q={q}: closed {closed} quad {quad}"
                );
            }
        }
    }

    #[test]
    fn unimodular_bound_and_parseval() {
        let p = fig8_params(26.0);
        let rf = RotatingFrameFactors::compute(&p, 200);
        for (_, f) in (-200..=200).map(|q| (q, rf.factor(q).unwrap())) {
            assert!(f.norm() <= 1.0 + 1e-12);
        }
        // Σ|F_q|² converges to 1 from below as the range grows
        let coarse = RotatingFrameFactors::compute(&p, 30).parseval_sum();
        let fine = rf.parseval_sum();
        assert!((fine - 1.0).abs() < (coarse - 1.0).abs());
        assert!((fine - 1.0).abs() < 1e-6, "sum {fine}");
    }

    #[test]
    fn real_representative_is_phase_free() {
        let mut rng = Lcg(5);
        for _ in 0..10 {
            let period = rng.next_f64(0.5, 30.0);
            let p = StepParams {
                beta0: rng.next_f64(-1.0, 1.0),
                delta: rng.next_f64(0.0, 3.0),
                period,
                duty: rng.next_f64(0.1, 0.9) * period,
            };
            let f0 = fourier_factor(&p, 0);
            let r = f0_real_representative(&p);
            assert!((r.abs() - f0.norm()).abs() < 1e-12, "imaginary residue survived");
        }
    }

    #[test]
    fn f0_zeros_located_by_bisection() {
        // first zero for δ=1, Z′=0.4Z sits near Z = π/0.12
        let zeros = find_f0_zeros(1.0, 0.5, 0.4, 0.1, 40.0, 800, 1e-8);
        assert!(!zeros.is_empty());
        let z0 = zeros[0];
        let p = fig8_params(z0);
        assert!(fourier_factor(&p, 0).norm() < 1e-6, "|F0| = {}", fourier_factor(&p, 0).norm());
        assert!((z0 - PI / 0.12).abs() < 1e-3, "first zero at {z0}");
    }

    #[test]
    fn effective_model_reduces_to_static_without_step() {
        let cfg = fig8_config(6, 2.0);
        let mut flat = cfg.clone();
        flat.modulation = ModulationProfile::StepIndex { beta0: 0.5, delta: 0.0, period: 2.0, duty: 0.8 };
        let eff = effective_model(&flat).unwrap();
        assert_eq!(eff.modulation, ModulationProfile::None);
        assert!((eff.kappa12 - flat.kappa12).abs() < 1e-14);
        assert!((eff.beta1 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn decoupled_at_f0_zero() {
        let zeros = find_f0_zeros(1.0, 0.5, 0.4, 1.0, 30.0, 600, 1e-8);
        let z0 = zeros[0];
        let cfg = fig8_config(30, z0);
        let eff = effective_model(&cfg).unwrap();
        let trace = propagator::propagate(&eff, 20.0, propagator::default_dz(&eff)).unwrap();
        for k in 0..trace.len() {
            assert!(trace.principal_intensity(k) >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn delta_zero_control_methods_agree() {
        let mut cfg = fig8_config(25, 2.0);
        cfg.modulation = ModulationProfile::StepIndex { beta0: 0.5, delta: 0.0, period: 2.0, duty: 0.8 };
        let cmp = compare_methods(&cfg, 30.0).unwrap();
        assert!((cmp.abs_f0_sq - 1.0).abs() < 1e-12);
        assert!(
            (cmp.eff_intensity_longz - cmp.exact_intensity_longz).abs() < 1e-6,
            "eff {} vs exact {}",
            cmp.eff_intensity_longz,
            cmp.exact_intensity_longz
        );
    }

    #[test]
    fn high_frequency_regime_methods_agree() {
        // ω = 2π/Z ≫ κ: the rotating-wave reduction tracks the exact run
        let cfg = fig8_config(20, 0.3);
        let eff = effective_model(&cfg).unwrap();
        let dz = propagator::default_dz(&cfg);
        let exact = propagator::propagate(&cfg, 10.0, dz).unwrap();
        let approx = propagator::propagate(&eff, 10.0, dz).unwrap();
        for (k, &z) in exact.zgrid.iter().enumerate() {
            let ka = approx.index_near(z);
            let diff = (exact.principal_intensity(k) - approx.principal_intensity(ka)).abs();
            assert!(diff < 0.05, "z={z}: |ΔI| = {diff}");
        }
    }
}
