//! Integration of the propagation equation iλ̄ dA/dz = M(z) A.
//!
//! A fixed-step classical fourth-order Runge–Kutta scheme keeps traces
//! deterministic and reproducible. Steps are forced to split at the
//! discontinuities of a step-index profile, where the coefficient matrix
//! jumps; inside each smooth piece the integrand is evaluated on whichever
//! branch the piece midpoint selects, so no stage ever straddles a jump.
//! For step profiles an exact path built from per-segment matrix
//! exponentials is provided alongside the generic integrator.

use crate::linalg::{self, C64, CMatrix};
use crate::model::{coupling_at, CouplingMatrix, ModulationProfile, SystemConfig};

use thiserror::Error;

/// Hard cap on the accumulated norm defect before a run is rejected as
/// under-resolved.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

const STEPS_PER_PERIOD: f64 = 400.0;
const DZ_CAP: f64 = 0.005;

#[derive(Debug, Error)]
pub enum PropagateError {
    #[error("invalid run parameters: {0}")]
    Invalid(String),
    #[error("norm drift {drift:.3e} at z = {z:.6} exceeds {NORM_DRIFT_LIMIT:.0e}; dz too coarse")]
    ExcessiveNormDrift { z: f64, drift: f64 },
    #[error("operation requires a periodic profile")]
    NotPeriodic,
    #[error("exact segment propagation requires a step-index profile")]
    NotStepIndex,
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Sampled complex amplitudes A(z) on an ascending z-grid.
#[derive(Debug, Clone)]
pub struct AmplitudeTrace {
    pub zgrid: Vec<f64>,
    pub amplitudes: Vec<Vec<C64>>,
    pub config_hash: String,
}

impl AmplitudeTrace {
    pub fn len(&self) -> usize {
        self.zgrid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zgrid.is_empty()
    }

    /// |A_j(z_k)|²
    pub fn intensity(&self, k: usize, site: usize) -> f64 {
        self.amplitudes[k][site].norm_sqr()
    }

    /// |A₁(z_k)|², the central observable.
    pub fn principal_intensity(&self, k: usize) -> f64 {
        self.intensity(k, 0)
    }

    /// Largest deviation of Σ_j |A_j|² from 1 over the whole trace.
    pub fn max_norm_defect(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| (a.iter().map(|x| x.norm_sqr()).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Index of the grid point nearest to z.
    pub fn index_near(&self, z: f64) -> usize {
        if self.zgrid.len() < 2 {
            return 0;
        }
        let dz = self.zgrid[1] - self.zgrid[0];
        ((z / dz).round() as usize).min(self.zgrid.len() - 1)
    }

    /// Mean principal intensity over z ∈ [z_lo, z_hi].
    pub fn mean_principal_intensity(&self, z_lo: f64, z_hi: f64) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (k, &z) in self.zgrid.iter().enumerate() {
            if z >= z_lo && z <= z_hi {
                sum += self.principal_intensity(k);
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

/// One-period propagator U(Z) mapping A(0) to A(Z).
#[derive(Debug, Clone)]
pub struct MonodromyMatrix {
    pub matrix: CMatrix,
    pub period: f64,
    pub lambdabar: f64,
}

impl MonodromyMatrix {
    pub fn unitarity_defect(&self) -> f64 {
        self.matrix.unitarity_defect()
    }

    /// Quasienergies from the eigenphases, folded into (−ω/2, ω/2].
    pub fn folded_quasienergies(&self) -> Result<Vec<f64>, PropagateError> {
        let omega = 2.0 * std::f64::consts::PI / self.period;
        let (vals, _) = linalg::eig_general(self.matrix.clone())?;
        let mut eps: Vec<f64> = vals
            .iter()
            .map(|lambda| crate::floquet::fold_quasienergy(-lambda.arg() / self.period, omega))
            .collect();
        eps.sort_by(f64::total_cmp);
        Ok(eps)
    }
}

/// Default integration step: min(Z/400, 0.005λ̄), resolving the fastest
/// modulation used in practice with several hundred steps per period.
pub fn default_dz(config: &SystemConfig) -> f64 {
    match config.period() {
        Some(z) => (z / STEPS_PER_PERIOD).min(DZ_CAP * config.lambdabar),
        None => DZ_CAP * config.lambdabar,
    }
}

/// Positions of profile discontinuities strictly inside (z0, z1).
fn jumps_between(config: &SystemConfig, z0: f64, z1: f64, out: &mut Vec<f64>) {
    out.clear();
    if let ModulationProfile::StepIndex { period, duty, .. } = config.modulation {
        let mut n = (z0 / period).floor();
        if n < 0.0 {
            n = 0.0;
        }
        loop {
            let base = n * period;
            if base > z1 {
                break;
            }
            for cand in [base, base + duty] {
                if cand > z0 + 1e-13 && cand < z1 - 1e-13 {
                    out.push(cand);
                }
            }
            n += 1.0;
        }
        out.sort_by(f64::total_cmp);
    }
}

trait Rk4State: Clone {
    fn apply(m: &CouplingMatrix, x: &Self) -> Self;
    fn axpy(&mut self, c: C64, x: &Self);
    fn scaled(&self, c: C64) -> Self;
}

impl Rk4State for Vec<C64> {
    fn apply(m: &CouplingMatrix, x: &Self) -> Self {
        m.mul_vec(x)
    }

    fn axpy(&mut self, c: C64, x: &Self) {
        for (a, b) in self.iter_mut().zip(x) {
            *a += c * b;
        }
    }

    fn scaled(&self, c: C64) -> Self {
        self.iter().map(|v| v * c).collect()
    }
}

impl Rk4State for CMatrix {
    fn apply(m: &CouplingMatrix, x: &Self) -> Self {
        m.mul_mat(x)
    }

    fn axpy(&mut self, c: C64, x: &Self) {
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                self.add_to(i, j, c * x.at(i, j));
            }
        }
    }

    fn scaled(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }
}

/// One RK4 step of iλ̄ dX/dz = M(z) X over [za, za+h].
///
/// For step profiles the matrix is constant on the piece and is evaluated at
/// the midpoint, which also selects the correct branch when `za` sits exactly
/// on a discontinuity.
fn rk4_piece<S: Rk4State>(config: &SystemConfig, za: f64, h: f64, x: &S) -> S {
    let minus_i_over_lb = C64::new(0.0, -1.0 / config.lambdabar);
    let is_step = matches!(config.modulation, ModulationProfile::StepIndex { .. });
    let m_mid = coupling_at(config, za + 0.5 * h);
    let m_a;
    let m_b;
    let (ma, mm, mb) = if is_step {
        (&m_mid, &m_mid, &m_mid)
    } else {
        m_a = coupling_at(config, za);
        m_b = coupling_at(config, za + h);
        (&m_a, &m_mid, &m_b)
    };
    let hc = C64::new(h, 0.0);
    let k1 = S::apply(ma, x).scaled(minus_i_over_lb);
    let mut x2 = x.clone();
    x2.axpy(hc * 0.5, &k1);
    let k2 = S::apply(mm, &x2).scaled(minus_i_over_lb);
    let mut x3 = x.clone();
    x3.axpy(hc * 0.5, &k2);
    let k3 = S::apply(mm, &x3).scaled(minus_i_over_lb);
    let mut x4 = x.clone();
    x4.axpy(hc, &k3);
    let k4 = S::apply(mb, &x4).scaled(minus_i_over_lb);

    let mut out = x.clone();
    out.axpy(hc / 6.0, &k1);
    out.axpy(hc / 3.0, &k2);
    out.axpy(hc / 3.0, &k3);
    out.axpy(hc / 6.0, &k4);
    out
}

/// Advance state from z_k to z_{k+1}, splitting at interior jumps.
fn advance<S: Rk4State>(config: &SystemConfig, z0: f64, z1: f64, x: S, jumps: &mut Vec<f64>) -> S {
    jumps_between(config, z0, z1, jumps);
    let mut state = x;
    let mut zc = z0;
    for k in 0..jumps.len() {
        let zj = jumps[k];
        state = rk4_piece(config, zc, zj - zc, &state);
        zc = zj;
    }
    rk4_piece(config, zc, z1 - zc, &state)
}

/// Advance a matrix-valued state from z0 to z1 under the same stepping
/// rules as the trace integrator. Used by the monodromy-based mode analysis.
pub(crate) fn advance_matrix_over(
    config: &SystemConfig,
    z0: f64,
    z1: f64,
    state: CMatrix,
) -> CMatrix {
    let mut jumps = Vec::new();
    advance(config, z0, z1, state, &mut jumps)
}

fn check_run_params(z_max: f64, dz: f64) -> Result<usize, PropagateError> {
    if !(z_max > 0.0 && z_max.is_finite()) {
        return Err(PropagateError::Invalid("z_max must be positive".into()));
    }
    if !(dz > 0.0 && dz <= z_max) {
        return Err(PropagateError::Invalid("dz must satisfy 0 < dz <= z_max".into()));
    }
    Ok((z_max / dz + 1e-9).floor() as usize)
}

/// Integrate from A(0) = (1, 0, …, 0)ᵀ, sampling at multiples of dz.
pub fn propagate(
    config: &SystemConfig,
    z_max: f64,
    dz: f64,
) -> Result<AmplitudeTrace, PropagateError> {
    let nsteps = check_run_params(z_max, dz)?;
    let n = config.dim();
    let mut state = vec![C64::new(0.0, 0.0); n];
    state[0] = C64::new(1.0, 0.0);

    let mut zgrid = Vec::with_capacity(nsteps + 1);
    let mut amplitudes = Vec::with_capacity(nsteps + 1);
    zgrid.push(0.0);
    amplitudes.push(state.clone());

    let mut jumps = Vec::new();
    for k in 0..nsteps {
        let z0 = k as f64 * dz;
        let z1 = (k + 1) as f64 * dz;
        state = advance(config, z0, z1, state, &mut jumps);
        let drift = (state.iter().map(|x| x.norm_sqr()).sum::<f64>() - 1.0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(PropagateError::ExcessiveNormDrift { z: z1, drift });
        }
        zgrid.push(z1);
        amplitudes.push(state.clone());
    }

    Ok(AmplitudeTrace { zgrid, amplitudes, config_hash: config.config_hash() })
}

/// One-period propagator by integrating every basis vector at once.
pub fn monodromy(config: &SystemConfig, dz: f64) -> Result<MonodromyMatrix, PropagateError> {
    let period = config.period().ok_or(PropagateError::NotPeriodic)?;
    let nsteps = check_run_params(period, dz.min(period))?;
    // land exactly on Z: distribute the remainder over uniform steps
    let h = period / nsteps.max(1) as f64;
    let mut u = CMatrix::identity(config.dim());
    let mut jumps = Vec::new();
    for k in 0..nsteps {
        let z0 = k as f64 * h;
        let z1 = if k + 1 == nsteps { period } else { (k + 1) as f64 * h };
        u = advance(config, z0, z1, u, &mut jumps);
    }
    Ok(MonodromyMatrix { matrix: u, period, lambdabar: config.lambdabar })
}

/// Branch matrices of a step profile: (M with β₀, M with β₀+δ).
fn step_branch_matrices(config: &SystemConfig) -> Result<(CMatrix, CMatrix), PropagateError> {
    match config.modulation {
        ModulationProfile::StepIndex { duty, period, .. } => {
            let lo = coupling_at(config, 0.5 * duty).to_dense();
            let hi = coupling_at(config, 0.5 * (duty + period)).to_dense();
            Ok((lo, hi))
        }
        _ => Err(PropagateError::NotStepIndex),
    }
}

/// Exact one-period propagator of a step profile: the ordered product of
/// the two constant-segment matrix exponentials.
pub fn step_exact_monodromy(config: &SystemConfig) -> Result<MonodromyMatrix, PropagateError> {
    let (period, duty) = match config.modulation {
        ModulationProfile::StepIndex { period, duty, .. } => (period, duty),
        _ => return Err(PropagateError::NotStepIndex),
    };
    let (lo, hi) = step_branch_matrices(config)?;
    let f = |tau: f64| C64::new(0.0, -tau / config.lambdabar);
    let e_lo = linalg::expm_hermitian(&lo, f(duty))?;
    let e_hi = linalg::expm_hermitian(&hi, f(period - duty))?;
    Ok(MonodromyMatrix { matrix: e_hi.matmul(&e_lo), period, lambdabar: config.lambdabar })
}

/// Exact trace for a step profile via per-segment spectral propagation.
///
/// Reference implementation against which the generic integrator is checked;
/// error is limited by the two dense eigendecompositions.
pub fn propagate_step_exact(
    config: &SystemConfig,
    z_max: f64,
    dz: f64,
) -> Result<AmplitudeTrace, PropagateError> {
    let (period, duty) = match config.modulation {
        ModulationProfile::StepIndex { period, duty, .. } => (period, duty),
        _ => return Err(PropagateError::NotStepIndex),
    };
    let nsteps = check_run_params(z_max, dz)?;
    let (lo, hi) = step_branch_matrices(config)?;
    let (w_lo, v_lo) = linalg::eigh(lo)?;
    let (w_hi, v_hi) = linalg::eigh(hi)?;
    let vt_lo = v_lo.adjoint();
    let vt_hi = v_hi.adjoint();
    let n = config.dim();

    // amplitude at the start of the current segment, in site basis
    let mut seg_start_z = 0.0_f64;
    let mut seg_is_lo = true;
    let mut a_seg = vec![C64::new(0.0, 0.0); n];
    a_seg[0] = C64::new(1.0, 0.0);
    let mut coeff = vt_lo.mul_vec(&a_seg);

    let mut zgrid = Vec::with_capacity(nsteps + 1);
    let mut amplitudes = Vec::with_capacity(nsteps + 1);

    let eval = |coeff: &[C64], w: &[f64], v: &CMatrix, tau: f64, lb: f64| -> Vec<C64> {
        let phased: Vec<C64> = coeff
            .iter()
            .zip(w)
            .map(|(c, &wk)| c * C64::new(0.0, -wk * tau / lb).exp())
            .collect();
        v.mul_vec(&phased)
    };

    // ordered segment boundaries after z: nZ and nZ + Z′
    let next_boundary = |z: f64| -> f64 {
        let base = (z / period).floor() * period;
        for cand in [base + duty, base + period, base + period + duty] {
            if cand > z + 1e-13 {
                return cand;
            }
        }
        base + 2.0 * period
    };

    for k in 0..=nsteps {
        let z = k as f64 * dz;
        // roll the segment start forward past any boundaries before z
        loop {
            let nb = next_boundary(seg_start_z);
            if nb >= z - 1e-13 {
                break;
            }
            let tau = nb - seg_start_z;
            let (w, v) = if seg_is_lo { (&w_lo, &v_lo) } else { (&w_hi, &v_hi) };
            a_seg = eval(&coeff, w, v, tau, config.lambdabar);
            seg_start_z = nb;
            seg_is_lo = !seg_is_lo;
            let vt = if seg_is_lo { &vt_lo } else { &vt_hi };
            coeff = vt.mul_vec(&a_seg);
        }
        let tau = z - seg_start_z;
        let (w, v) = if seg_is_lo { (&w_lo, &v_lo) } else { (&w_hi, &v_hi) };
        zgrid.push(z);
        amplitudes.push(eval(&coeff, w, v, tau, config.lambdabar));
    }

    Ok(AmplitudeTrace { zgrid, amplitudes, config_hash: config.config_hash() })
}
