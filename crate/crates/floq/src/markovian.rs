//! Spectral-filtering approximation (Markovian, weak coupling).
//!
//! Treats the array as a structured reservoir with noise spectrum
//! G(β) = Σ_k |g_k|² δ(β − β_k) and the modulated coupling as a filter
//! D_z(β) = (2π)^{−1/2} ∫₀^z e^{iβz′} κ₁₂(z′) dz′. The principal amplitude
//! then damps as |α(z)| = exp[−R(z)Q(z)/2] with
//! R(z)Q(z) = 2π Σ_k |g_k|² |D_z(β_k − β₁)|². The damping never stops:
//! under this approximation the light always leaks into the array, which
//! is exactly where it departs from the exact Floquet treatment once
//! bound modes form.

use thiserror::Error;

use crate::linalg::C64;
use crate::model::{ModulationProfile, SystemConfig};

#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("spectral filtering requires a harmonic coupling profile")]
    NotHarmonic,
}

/// Parameters of κ₁₂(z) = a·cos(ωz) + b.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicParams {
    pub a: f64,
    pub omega: f64,
    pub b: f64,
}

impl TryFrom<&ModulationProfile> for HarmonicParams {
    type Error = MarkovError;

    fn try_from(profile: &ModulationProfile) -> Result<Self, MarkovError> {
        match *profile {
            ModulationProfile::HarmonicCoupling { a, omega, b } => Ok(Self { a, omega, b }),
            _ => Err(MarkovError::NotHarmonic),
        }
    }
}

/// Discrete reservoir spectrum built from the open-chain array eigenmodes
/// k_j = πj/(L+1): β_k = β + 2κ cos(k)/λ̄ with uniform weights
/// |g_k|² = 1/(λ̄²L).
#[derive(Debug, Clone)]
pub struct NoiseSpectrum {
    pub betas: Vec<f64>,
    pub weight: f64,
}

impl NoiseSpectrum {
    pub fn with_sites(l: usize, beta: f64, kappa: f64, lambdabar: f64) -> Self {
        let betas = (1..=l)
            .map(|j| {
                let k = std::f64::consts::PI * j as f64 / (l + 1) as f64;
                beta + 2.0 * kappa * k.cos() / lambdabar
            })
            .collect();
        Self { betas, weight: 1.0 / (lambdabar * lambdabar * l as f64) }
    }

    pub fn for_config(config: &SystemConfig) -> Self {
        Self::with_sites(config.l, config.beta, config.kappa, config.lambdabar)
    }

    /// Σ_k |g_k|², equal to 1/λ̄² regardless of L.
    pub fn total_weight(&self) -> f64 {
        self.weight * self.betas.len() as f64
    }
}

/// Stable (e^{iμz} − 1)/(iμ) = z·e^{iμz/2}·sinc(μz/2).
fn phase_integral(mu: f64, z: f64) -> C64 {
    let x = 0.5 * mu * z;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    C64::new(0.0, x).exp() * (z * sinc)
}

/// Filter function D_z(β) in closed form: three resonance lines at
/// β = 0 and β = ∓ω from the constant and cosine parts of κ₁₂.
pub fn filter_function(p: &HarmonicParams, beta: f64, z: f64) -> C64 {
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    (phase_integral(beta, z) * p.b
        + (phase_integral(beta + p.omega, z) + phase_integral(beta - p.omega, z)) * (0.5 * p.a))
        * norm
}

/// Q(z) = ∫₀^z κ₁₂(z′)² dz′ in closed form.
pub fn accumulated_coupling(p: &HarmonicParams, z: f64) -> f64 {
    (0.5 * p.a * p.a + p.b * p.b) * z
        + (p.a * p.a / (4.0 * p.omega)) * (2.0 * p.omega * z).sin()
        + (2.0 * p.a * p.b / p.omega) * (p.omega * z).sin()
}

/// R(z)Q(z) = 2π Σ_k |g_k|² |D_z(β_k − β₁)|², the damping exponent.
pub fn damping_exponent(
    spectrum: &NoiseSpectrum,
    p: &HarmonicParams,
    beta1: f64,
    z: f64,
) -> f64 {
    let sum: f64 = spectrum
        .betas
        .iter()
        .map(|&bk| filter_function(p, bk - beta1, z).norm_sqr())
        .sum();
    2.0 * std::f64::consts::PI * spectrum.weight * sum
}

/// Markovian principal intensity |α(z)|² = exp[−R(z)Q(z)].
pub fn markovian_intensity(
    spectrum: &NoiseSpectrum,
    p: &HarmonicParams,
    beta1: f64,
    z: f64,
) -> f64 {
    (-damping_exponent(spectrum, p, beta1, z)).exp()
}
