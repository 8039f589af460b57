//! Fourier-block (extended) Floquet eigenproblem.
//!
//! Expanding the quasistationary modes as u_α(z) = Σ_m e^{imωz} ũ_α(m)
//! turns the Floquet eigenequation into a Hermitian block eigenproblem:
//! block (n, m) holds M̃_{n−m}, plus mλ̄ω on the diagonal blocks. Truncating
//! to |m| ≤ N_F and diagonalizing yields the quasienergies, which repeat
//! with period ω; exactly one member of each replica family is physical
//! per Brillouin zone (−ω/2, ω/2].
//!
//! Instead of extracting eigenvectors for the full extended matrix, the
//! solver computes all eigenvalues, then asks for eigenvectors only inside
//! a width-ω window around the spectral mean — which contains exactly one
//! well-converged member of every replica family. Each retained pair is
//! then re-labelled to its in-zone representative by shifting the harmonic
//! index, the exact replica symmetry of the problem. Whenever the window
//! count disagrees with L+1 the solver falls back to the full dense
//! eigendecomposition and the literal maximum-central-weight selection.

use thiserror::Error;

use crate::linalg::{self, C64, CMatrix};
use crate::model::{self, ModelError, SystemConfig};
use crate::propagator::{self, PropagateError};

/// Retained quasienergies must be stable at this level under truncation
/// growth for a spectrum to count as converged.
pub const CONVERGENCE_TOL: f64 = 1e-8;

/// Quasienergy spacing below which two raw eigenvalues are treated as
/// replicas of the same physical mode.
pub const REPLICA_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FloquetError {
    #[error("configuration is not periodic")]
    NotPeriodic,
    #[error("n_harmonics must be >= 1")]
    BadTruncation,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Propagate(#[from] Box<PropagateError>),
    #[error("physical-mode selection found {found} modes, expected {expected}")]
    Selection { expected: usize, found: usize },
    #[error(
        "quasienergies not converged at N_F = {n_harmonics} (max shift {delta:.3e}); \
         increase the truncation"
    )]
    Convergence { n_harmonics: usize, delta: f64 },
}

/// Fold a quasienergy into the first Brillouin zone (−ω/2, ω/2].
pub fn fold_quasienergy(eps: f64, omega: f64) -> f64 {
    fold_with_shift(eps, omega).0
}

/// Fold and report the integer k with eps − kω ∈ (−ω/2, ω/2].
pub fn fold_with_shift(eps: f64, omega: f64) -> (f64, i64) {
    let mut k = (eps / omega).round();
    let mut f = eps - k * omega;
    if f <= -0.5 * omega {
        f += omega;
        k -= 1.0;
    } else if f > 0.5 * omega {
        f -= omega;
        k += 1.0;
    }
    (f, k as i64)
}

/// Solved quasienergy spectrum: the L+1 physical eigenpairs plus the raw
/// eigenvalue list of the truncated extended matrix.
#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    pub omega: f64,
    pub lambdabar: f64,
    pub n_harmonics: usize,
    dim: usize,
    /// Physical quasienergies in (−ω/2, ω/2], ascending.
    pub quasienergies: Vec<f64>,
    /// Fourier components per mode, harmonic-major: block m + N_F holds ũ(m).
    modes: Vec<Vec<C64>>,
    /// Every eigenvalue of the extended matrix (divided by λ̄), ascending.
    pub raw_eigenvalues: Vec<f64>,
}

impl FloquetSpectrum {
    /// Number of waveguides, L + 1.
    pub fn n_sites(&self) -> usize {
        self.dim
    }

    pub fn n_modes(&self) -> usize {
        self.quasienergies.len()
    }

    /// Fourier component ũ_α(m) as a site vector; zero outside |m| ≤ N_F.
    pub fn mode_fourier(&self, alpha: usize, m: i64) -> Option<&[C64]> {
        let nf = self.n_harmonics as i64;
        if m < -nf || m > nf {
            return None;
        }
        let b = (m + nf) as usize;
        Some(&self.modes[alpha][b * self.dim..(b + 1) * self.dim])
    }

    /// u_α(z) = Σ_m e^{imωz} ũ_α(m); exactly Z-periodic by construction.
    pub fn mode_profile(&self, alpha: usize, z: f64) -> Vec<C64> {
        let nf = self.n_harmonics as i64;
        let mut u = vec![C64::new(0.0, 0.0); self.dim];
        for m in -nf..=nf {
            let phase = C64::new(0.0, m as f64 * self.omega * z).exp();
            let comp = self.mode_fourier(alpha, m).unwrap();
            for (uj, &cj) in u.iter_mut().zip(comp) {
                *uj += phase * cj;
            }
        }
        u
    }

    /// Analytic ∂_z u_α(z) from the harmonic expansion.
    pub fn mode_profile_derivative(&self, alpha: usize, z: f64) -> Vec<C64> {
        let nf = self.n_harmonics as i64;
        let mut du = vec![C64::new(0.0, 0.0); self.dim];
        for m in -nf..=nf {
            let factor =
                C64::new(0.0, m as f64 * self.omega) * C64::new(0.0, m as f64 * self.omega * z).exp();
            let comp = self.mode_fourier(alpha, m).unwrap();
            for (dj, &cj) in du.iter_mut().zip(comp) {
                *dj += factor * cj;
            }
        }
        du
    }

    /// Principal-waveguide component u_α(z)[1] only.
    pub fn principal_profile(&self, alpha: usize, z: f64) -> C64 {
        let nf = self.n_harmonics as i64;
        let mut u = C64::new(0.0, 0.0);
        for m in -nf..=nf {
            let phase = C64::new(0.0, m as f64 * self.omega * z).exp();
            u += phase * self.mode_fourier(alpha, m).unwrap()[0];
        }
        u
    }

    pub fn mode_z0(&self, alpha: usize) -> Vec<C64> {
        self.mode_profile(alpha, 0.0)
    }

    /// Σ_m ‖ũ_α(m)‖², which is 1 for a normalized mode.
    pub fn mode_norm_sqr(&self, alpha: usize) -> f64 {
        self.modes[alpha].iter().map(|c| c.norm_sqr()).sum()
    }

    /// Principal-waveguide weight w₁ = Σ_m |ũ_α(m)[1]|².
    pub fn principal_weight(&self, alpha: usize) -> f64 {
        let nf = self.n_harmonics as i64;
        (-nf..=nf)
            .map(|m| self.mode_fourier(alpha, m).unwrap()[0].norm_sqr())
            .sum()
    }

    /// Weight carried by the central harmonic, ‖ũ_α(0)‖².
    pub fn central_weight(&self, alpha: usize) -> f64 {
        self.mode_fourier(alpha, 0)
            .unwrap()
            .iter()
            .map(|c| c.norm_sqr())
            .sum()
    }

    /// Conjugate pairing of u_α(0) with the initial condition A(0) = e₁.
    pub fn initial_overlap(&self, alpha: usize) -> C64 {
        self.mode_z0(alpha)[0].conj()
    }

    /// Extended-space inner product between retained modes.
    pub fn mode_inner(&self, alpha: usize, beta: usize) -> C64 {
        linalg::conj_dot(&self.modes[alpha], &self.modes[beta])
    }
}

/// Default truncation: enough harmonics to cover the spectral support of
/// M(z) plus an eight-harmonic safety margin.
pub fn default_n_harmonics(config: &SystemConfig) -> Result<usize, FloquetError> {
    let omega = config.omega().ok_or(FloquetError::NotPeriodic)?;
    let lb = config.lambdabar;
    let (beta1_max, a_abs, b_abs, delta_abs) = match config.modulation {
        model::ModulationProfile::None => unreachable!("omega() returned Some"),
        model::ModulationProfile::HarmonicCoupling { a, b, .. } => {
            ((lb * config.beta1).abs(), a.abs(), b.abs(), 0.0)
        }
        model::ModulationProfile::StepIndex { beta0, delta, .. } => {
            let m = (lb * beta0).abs().max((lb * (beta0 + delta)).abs());
            (m, 0.0, 0.0, (lb * delta).abs())
        }
    };
    let span = beta1_max + a_abs + b_abs + delta_abs + 4.0 * config.kappa;
    Ok((span / (lb * omega)).ceil() as usize + 8)
}

/// Extended Hermitian matrix of the truncated eigenproblem,
/// size (2 N_F + 1)(L + 1).
pub fn build_extended_matrix(
    config: &SystemConfig,
    n_harmonics: usize,
) -> Result<CMatrix, FloquetError> {
    if n_harmonics < 1 {
        return Err(FloquetError::BadTruncation);
    }
    let omega = config.omega().ok_or(FloquetError::NotPeriodic)?;
    let nf = n_harmonics as i64;
    let n1 = config.dim();
    let nblocks = 2 * n_harmonics + 1;
    let dim = nblocks * n1;
    let lb = config.lambdabar;

    // cache the distinct Fourier blocks q ∈ [−2N_F, 2N_F]
    let mut blocks = Vec::with_capacity(4 * n_harmonics + 1);
    for q in -2 * nf..=2 * nf {
        blocks.push(model::fourier_block(config, q)?);
    }
    let block = |q: i64| &blocks[(q + 2 * nf) as usize];

    let mut h = CMatrix::zeros(dim, dim);
    for bn in 0..nblocks {
        for bm in 0..nblocks {
            let q = bn as i64 - bm as i64;
            let blk = block(q);
            let (r0, c0) = (bn * n1, bm * n1);
            for i in 0..n1 {
                let d = blk.entry(i, i);
                if d != C64::new(0.0, 0.0) {
                    h.add_to(r0 + i, c0 + i, d);
                }
                if i + 1 < n1 {
                    let up = blk.entry(i, i + 1);
                    if up != C64::new(0.0, 0.0) {
                        h.add_to(r0 + i, c0 + i + 1, up);
                    }
                    let lo = blk.entry(i + 1, i);
                    if lo != C64::new(0.0, 0.0) {
                        h.add_to(r0 + i + 1, c0 + i, lo);
                    }
                }
            }
        }
        let m = bn as i64 - nf;
        let shift = C64::new(m as f64 * lb * omega, 0.0);
        for i in 0..n1 {
            h.add_to(bn * n1 + i, bn * n1 + i, shift);
        }
    }
    Ok(h)
}

/// Pick, from the raw eigenvalue list, the window (vl, vu] of width λ̄ω
/// centred near the spectral mean. The offset keeps crafted symmetric
/// spectra from landing eigenvalues exactly on the window edges.
fn selection_window(raw: &[f64], lb_omega: f64) -> (f64, f64) {
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let center = mean + 0.0137 * lb_omega;
    (center - 0.5 * lb_omega, center + 0.5 * lb_omega)
}

/// Shift an extended eigenvector by `k` harmonics (the replica symmetry)
/// and renormalize; components pushed outside the truncation are dropped.
fn shift_mode(vec: &[C64], n1: usize, n_harmonics: usize, k: i64) -> Vec<C64> {
    let nf = n_harmonics as i64;
    let nblocks = 2 * n_harmonics + 1;
    let mut out = vec![C64::new(0.0, 0.0); nblocks * n1];
    for m in -nf..=nf {
        let src = m + k;
        if src < -nf || src > nf {
            continue;
        }
        let bs = ((src + nf) as usize) * n1;
        let bd = ((m + nf) as usize) * n1;
        out[bd..bd + n1].copy_from_slice(&vec[bs..bs + n1]);
    }
    let norm = linalg::norm2(&out);
    if norm > 0.0 {
        let inv = C64::new(1.0 / norm, 0.0);
        for v in &mut out {
            *v *= inv;
        }
    }
    out
}

fn spectrum_from_pairs(
    config: &SystemConfig,
    omega: f64,
    n_harmonics: usize,
    raw_eps: Vec<f64>,
    pairs: Vec<(f64, Vec<C64>)>,
) -> FloquetSpectrum {
    let n1 = config.dim();
    let mut canonical: Vec<(f64, Vec<C64>)> = pairs
        .into_iter()
        .map(|(eps, vec)| {
            let (folded, k) = fold_with_shift(eps, omega);
            (folded, shift_mode(&vec, n1, n_harmonics, k))
        })
        .collect();
    canonical.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (quasienergies, modes): (Vec<f64>, Vec<Vec<C64>>) = canonical.into_iter().unzip();
    FloquetSpectrum {
        omega,
        lambdabar: config.lambdabar,
        n_harmonics,
        dim: n1,
        quasienergies,
        modes,
        raw_eigenvalues: raw_eps,
    }
}

/// Full-decomposition fallback: group the raw eigenvalues into replica
/// families by folded value and keep the member with the largest
/// central-harmonic weight from each family.
fn solve_full_fallback(
    config: &SystemConfig,
    omega: f64,
    n_harmonics: usize,
) -> Result<FloquetSpectrum, FloquetError> {
    let n1 = config.dim();
    let lb = config.lambdabar;
    let h = build_extended_matrix(config, n_harmonics)?;
    let (w, v) = linalg::eigh(h)?;
    let raw_eps: Vec<f64> = w.iter().map(|x| x / lb).collect();

    let mut order: Vec<usize> = (0..raw_eps.len()).collect();
    let folded: Vec<f64> = raw_eps.iter().map(|&e| fold_quasienergy(e, omega)).collect();
    order.sort_by(|&a, &b| folded[a].total_cmp(&folded[b]));

    let central_weight = |idx: usize| -> f64 {
        let col = v.col(idx);
        let b0 = n_harmonics * n1;
        col[b0..b0 + n1].iter().map(|c| c.norm_sqr()).sum()
    };

    let mut picks: Vec<(f64, usize)> = Vec::with_capacity(n1);
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && folded[order[j]] - folded[order[i]] < REPLICA_TOL {
            j += 1;
        }
        let best = order[i..j]
            .iter()
            .copied()
            .max_by(|&a, &b| central_weight(a).total_cmp(&central_weight(b)))
            .unwrap();
        picks.push((raw_eps[best], best));
        i = j;
    }
    if picks.len() != n1 {
        return Err(FloquetError::Selection { expected: n1, found: picks.len() });
    }
    let pairs = picks
        .into_iter()
        .map(|(eps, idx)| (eps, v.col(idx).to_vec()))
        .collect();
    Ok(spectrum_from_pairs(config, omega, n_harmonics, raw_eps, pairs))
}

/// Diagonalize the extended matrix and retain the L+1 physical eigenpairs.
pub fn solve_spectrum(
    config: &SystemConfig,
    n_harmonics: usize,
) -> Result<FloquetSpectrum, FloquetError> {
    let omega = config.omega().ok_or(FloquetError::NotPeriodic)?;
    let n1 = config.dim();
    let lb = config.lambdabar;

    let raw = linalg::eigh_values(build_extended_matrix(config, n_harmonics)?)?;
    let (vl, vu) = selection_window(&raw, lb * omega);
    let count = raw.iter().filter(|&&x| x > vl && x <= vu).count();
    if count == n1 {
        let h = build_extended_matrix(config, n_harmonics)?;
        match linalg::eigh_window(h, vl, vu, count) {
            Ok((w, vecs)) => {
                let raw_eps: Vec<f64> = raw.iter().map(|x| x / lb).collect();
                let pairs = w
                    .iter()
                    .enumerate()
                    .map(|(j, &wj)| (wj / lb, vecs.col(j).to_vec()))
                    .collect();
                return Ok(spectrum_from_pairs(config, omega, n_harmonics, raw_eps, pairs));
            }
            Err(linalg::LinalgError::WindowMismatch { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    solve_full_fallback(config, omega, n_harmonics)
}

/// Solve at the default truncation.
pub fn solve_spectrum_default(config: &SystemConfig) -> Result<FloquetSpectrum, FloquetError> {
    solve_spectrum(config, default_n_harmonics(config)?)
}

/// Folded physical quasienergies only (no eigenvectors), ascending.
pub fn solve_quasienergies(
    config: &SystemConfig,
    n_harmonics: usize,
) -> Result<Vec<f64>, FloquetError> {
    let omega = config.omega().ok_or(FloquetError::NotPeriodic)?;
    let n1 = config.dim();
    let lb = config.lambdabar;
    let raw = linalg::eigh_values(build_extended_matrix(config, n_harmonics)?)?;
    let (vl, vu) = selection_window(&raw, lb * omega);
    let mut eps: Vec<f64> = raw
        .iter()
        .filter(|&&x| x > vl && x <= vu)
        .map(|&x| fold_quasienergy(x / lb, omega))
        .collect();
    if eps.len() != n1 {
        return Err(FloquetError::Selection { expected: n1, found: eps.len() });
    }
    eps.sort_by(f64::total_cmp);
    Ok(eps)
}

/// Solve with the default truncation, verifying that growing the basis by
/// five harmonics leaves every retained quasienergy within
/// [`CONVERGENCE_TOL`]; the truncation is doubled until the check passes.
pub fn solve_spectrum_converged(config: &SystemConfig) -> Result<FloquetSpectrum, FloquetError> {
    let base = default_n_harmonics(config)?;
    let mut nf = base;
    loop {
        let here = solve_quasienergies(config, nf)?;
        let grown = solve_quasienergies(config, nf + 5)?;
        let delta = here
            .iter()
            .zip(&grown)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if delta < CONVERGENCE_TOL {
            return solve_spectrum(config, nf);
        }
        if nf >= 4 * base {
            return Err(FloquetError::Convergence { n_harmonics: nf, delta });
        }
        nf *= 2;
    }
}

/// Quasienergies and z = 0 mode profiles obtained from the one-period
/// propagator instead of the extended matrix.
///
/// Independent of the Fourier-block route; used for cross-validation and
/// as a cheap pre-scan in parameter sweeps.
#[derive(Debug, Clone)]
pub struct MonodromyModes {
    pub omega: f64,
    pub period: f64,
    /// Folded quasienergies, ascending.
    pub quasienergies: Vec<f64>,
    /// Matching u_α(0) columns, each of unit norm.
    pub modes_z0: CMatrix,
    /// Period-averaged principal weights (1/Z)∫|u_α(z)[1]|²dz / ‖u_α(0)‖².
    pub principal_weights: Vec<f64>,
}

pub fn monodromy_modes(config: &SystemConfig, dz: f64) -> Result<MonodromyModes, FloquetError> {
    let omega = config.omega().ok_or(FloquetError::NotPeriodic)?;
    let period = config.period().ok_or(FloquetError::NotPeriodic)?;
    let mono = propagator::monodromy(config, dz).map_err(Box::new)?;
    let (vals, vecs) = linalg::eig_general(mono.matrix)?;
    let n1 = config.dim();

    let mut order: Vec<usize> = (0..n1).collect();
    let eps: Vec<f64> = vals
        .iter()
        .map(|lambda| fold_quasienergy(-lambda.arg() / period, omega))
        .collect();
    order.sort_by(|&a, &b| eps[a].total_cmp(&eps[b]));

    let mut modes = CMatrix::zeros(n1, n1);
    for (dst, &src) in order.iter().enumerate() {
        let norm = linalg::norm2(vecs.col(src));
        let inv = C64::new(1.0 / norm, 0.0);
        for i in 0..n1 {
            modes.set(i, dst, vecs.at(i, src) * inv);
        }
    }
    let quasienergies: Vec<f64> = order.iter().map(|&i| eps[i]).collect();

    // period-averaged principal weight: propagate the whole mode basis over
    // one period, accumulating |row 1|² at every step
    let nsteps = (period / dz.min(period)).ceil().max(8.0) as usize;
    let h = period / nsteps as f64;
    let mut state = modes.clone();
    let mut w1 = vec![0.0_f64; n1];
    for k in 0..nsteps {
        for (alpha, w) in w1.iter_mut().enumerate() {
            *w += state.at(0, alpha).norm_sqr();
        }
        let z0 = k as f64 * h;
        let z1 = if k + 1 == nsteps { period } else { (k + 1) as f64 * h };
        state = propagator::advance_matrix_over(config, z0, z1, state);
    }
    for w in &mut w1 {
        *w /= nsteps as f64;
    }

    Ok(MonodromyModes { omega, period, quasienergies, modes_z0: modes, principal_weights: w1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModulationProfile;
    use crate::propagator::default_dz;
    use std::f64::consts::PI;

    fn fig2_small(l: usize, a: f64) -> SystemConfig {
        let mut cfg = SystemConfig::natural(l);
        cfg.beta = 0.2;
        cfg.beta1 = 6.5;
        cfg.modulation = ModulationProfile::HarmonicCoupling { a, omega: 8.0, b: 0.6 };
        cfg
    }

    #[test]
    fn fold_maps_into_half_open_zone() {
        let w = 8.0;
        assert_eq!(fold_quasienergy(0.0, w), 0.0);
        assert_eq!(fold_quasienergy(4.0, w), 4.0); // edge folds to +ω/2
        assert_eq!(fold_quasienergy(-4.0, w), 4.0);
        assert!((fold_quasienergy(6.5, w) + 1.5).abs() < 1e-12);
        assert!((fold_quasienergy(-9.7, w) + 1.7).abs() < 1e-12);
        let (f, k) = fold_with_shift(17.3, w);
        assert!((f - 1.3).abs() < 1e-12);
        assert_eq!(k, 2);
    }

    #[test]
    fn static_embedding_is_block_diagonal() {
        let mut cfg = SystemConfig::natural(2);
        cfg.beta = 0.3;
        cfg.kappa12 = 0.7;
        let cfg = cfg.embed_static(5.0);
        let h = build_extended_matrix(&cfg, 1).unwrap();
        let n1 = 3;
        // diag(M − ω, M, M + ω)
        let m0 = model::fourier_block(&cfg, 0).unwrap().to_dense();
        for b in 0..3 {
            let shift = (b as f64 - 1.0) * 5.0;
            for i in 0..n1 {
                for j in 0..n1 {
                    let expect = m0.at(i, j)
                        + if i == j { C64::new(shift, 0.0) } else { C64::new(0.0, 0.0) };
                    assert!((h.at(b * n1 + i, b * n1 + j) - expect).norm() < 1e-14);
                }
            }
        }
        // off-diagonal blocks vanish
        assert_eq!(h.at(0, n1), C64::new(0.0, 0.0));
        assert_eq!(h.at(n1, 2 * n1), C64::new(0.0, 0.0));
    }

    #[test]
    fn extended_matrix_is_hermitian_for_step_profile() {
        let mut cfg = SystemConfig::natural(6);
        cfg.beta = 0.5;
        cfg.kappa12 = 0.5;
        cfg.modulation =
            ModulationProfile::StepIndex { beta0: 0.5, delta: 1.0, period: 0.25 * PI, duty: 0.1 * PI };
        let h = build_extended_matrix(&cfg, 6).unwrap();
        assert!(h.hermitian_defect() < 1e-12);
    }

    #[test]
    fn static_spectrum_matches_folded_stationary_levels() {
        let mut cfg = SystemConfig::natural(8);
        cfg.beta = 0.3;
        cfg.beta1 = 1.1;
        cfg.kappa12 = 0.8;
        let omega = 5.0;
        let periodic = cfg.embed_static(omega);
        let spec = solve_spectrum(&periodic, 6).unwrap();
        let m = model::coupling_at(&cfg, 0.0).to_dense();
        let (w, _) = linalg::eigh(m).unwrap();
        let mut expect: Vec<f64> = w.iter().map(|&x| fold_quasienergy(x, omega)).collect();
        expect.sort_by(f64::total_cmp);
        assert_eq!(spec.n_modes(), 9);
        for (a, b) in spec.quasienergies.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        // modes of a static system are constant in z
        let u0 = spec.mode_profile(0, 0.0);
        let u1 = spec.mode_profile(0, 0.37);
        for (x, y) in u0.iter().zip(&u1) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn modes_are_periodic_and_normalized() {
        let cfg = fig2_small(10, 3.0);
        let spec = solve_spectrum_default(&cfg).unwrap();
        let period = cfg.period().unwrap();
        for alpha in 0..spec.n_modes() {
            assert!((spec.mode_norm_sqr(alpha) - 1.0).abs() < 1e-12);
            let u0 = spec.mode_profile(alpha, 0.0);
            let uz = spec.mode_profile(alpha, period);
            for (x, y) in u0.iter().zip(&uz) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn floquet_residual_vanishes() {
        // ‖(M(z) − iλ̄∂_z) u − λ̄ε u‖ small at sampled z, both profiles
        let mut step = SystemConfig::natural(8);
        step.beta = 0.5;
        step.kappa12 = 0.5;
        step.modulation =
            ModulationProfile::StepIndex { beta0: 0.5, delta: 1.0, period: 0.25 * PI, duty: 0.1 * PI };
        let residual = |cfg: &SystemConfig, spec: &FloquetSpectrum| -> f64 {
            let mut worst = 0.0_f64;
            // segment midpoints of the step profile, away from its jumps
            for alpha in [0usize, spec.n_modes() / 2, spec.n_modes() - 1] {
                for &z in &[0.157, 0.55] {
                    let u = spec.mode_profile(alpha, z);
                    let du = spec.mode_profile_derivative(alpha, z);
                    let mu = model::coupling_at(cfg, z).mul_vec(&u);
                    let eps = spec.quasienergies[alpha];
                    for j in 0..u.len() {
                        let r = mu[j] - C64::new(0.0, cfg.lambdabar) * du[j]
                            - C64::new(cfg.lambdabar * eps, 0.0) * u[j];
                        worst = worst.max(r.norm());
                    }
                }
            }
            worst
        };
        // harmonic profile: the expansion is spectrally exact
        let cfg = fig2_small(8, 3.0);
        let spec = solve_spectrum_default(&cfg).unwrap();
        assert!(residual(&cfg, &spec) < 1e-6, "harmonic residual {}", residual(&cfg, &spec));
        // step profile: pointwise convergence is Gibbs-limited O(1/N_F) at
        // fixed z; check the level and that refinement shrinks it
        let spec_lo = solve_spectrum_default(&step).unwrap();
        let r_lo = residual(&step, &spec_lo);
        let spec_hi = solve_spectrum(&step, spec_lo.n_harmonics * 3).unwrap();
        let r_hi = residual(&step, &spec_hi);
        assert!(r_lo < 5e-3, "step residual {r_lo} at default truncation");
        assert!(r_hi < 0.65 * r_lo, "no refinement gain: {r_lo} -> {r_hi}");
    }

    #[test]
    fn replica_symmetry_of_raw_spectrum() {
        let cfg = fig2_small(6, 2.0);
        let spec = solve_spectrum_default(&cfg).unwrap();
        let omega = spec.omega;
        // every physical quasienergy reappears shifted by ±ω in the raw list
        for &eps in &spec.quasienergies {
            for shift in [-1.0, 1.0] {
                let target = eps + shift * omega;
                let hit = spec
                    .raw_eigenvalues
                    .iter()
                    .any(|&x| (x - target).abs() < 1e-8);
                assert!(hit, "missing replica of {eps} at {target}");
            }
        }
    }

    #[test]
    fn retained_modes_orthonormal_and_z0_spans() {
        let cfg = fig2_small(7, 3.0);
        let spec = solve_spectrum_default(&cfg).unwrap();
        let n = spec.n_modes();
        for a in 0..n {
            for b in a..n {
                let g = spec.mode_inner(a, b);
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (g - C64::new(expect, 0.0)).norm() < 1e-8,
                    "gram({a},{b}) = {g}"
                );
            }
        }
        // z = 0 profiles are orthonormal too (monodromy eigenvectors), hence span
        let mut gram_defect = 0.0_f64;
        for a in 0..n {
            let ua = spec.mode_z0(a);
            for b in a..n {
                let ub = spec.mode_z0(b);
                let g = linalg::conj_dot(&ua, &ub);
                let expect = if a == b { 1.0 } else { 0.0 };
                gram_defect = gram_defect.max((g - C64::new(expect, 0.0)).norm());
            }
        }
        assert!(gram_defect < 1e-7, "z0 gram defect {gram_defect}");
    }

    #[test]
    fn truncation_convergence_small_case() {
        let cfg = fig2_small(6, 3.0);
        let nf = default_n_harmonics(&cfg).unwrap();
        let a = solve_quasienergies(&cfg, nf).unwrap();
        let b = solve_quasienergies(&cfg, nf + 5).unwrap();
        let delta = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(delta < CONVERGENCE_TOL, "delta {delta}");
        assert!(solve_spectrum_converged(&cfg).is_ok());
    }

    #[test]
    fn monodromy_eigenphases_match_extended_solver() {
        let cfg = fig2_small(9, 3.0);
        let spec = solve_spectrum_default(&cfg).unwrap();
        let mono = propagator::monodromy(&cfg, default_dz(&cfg)).unwrap();
        let eps_mono = mono.folded_quasienergies().unwrap();
        for (a, b) in spec.quasienergies.iter().zip(&eps_mono) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn monodromy_modes_agree_with_extended_route() {
        let cfg = fig2_small(9, 3.0);
        let spec = solve_spectrum_default(&cfg).unwrap();
        let mm = monodromy_modes(&cfg, default_dz(&cfg)).unwrap();
        for (a, b) in spec.quasienergies.iter().zip(&mm.quasienergies) {
            assert!((a - b).abs() < 1e-6);
        }
        // principal weights agree between the two routes
        for alpha in 0..spec.n_modes() {
            let d = (spec.principal_weight(alpha) - mm.principal_weights[alpha]).abs();
            assert!(d < 1e-4, "alpha={alpha}: w1 mismatch {d}");
        }
    }

    #[test]
    fn rejects_static_and_bad_truncation() {
        let cfg = SystemConfig::natural(3);
        assert!(matches!(
            build_extended_matrix(&cfg, 4),
            Err(FloquetError::NotPeriodic)
        ));
        let cfg = cfg.embed_static(3.0);
        assert!(matches!(
            build_extended_matrix(&cfg, 0),
            Err(FloquetError::BadTruncation)
        ));
    }
}
