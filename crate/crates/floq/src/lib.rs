//! Light propagation in a waveguide array with one periodically modulated
//! waveguide.
//!
//! A principal waveguide is side-coupled to a chain of L identical guides
//! and modulated along the propagation direction, either harmonically in
//! its coupling strength or stepwise in its propagation constant. The crate
//! provides:
//!
//! - [`model`]: configurations, the tridiagonal coefficient matrix M(z),
//!   its Fourier blocks, and the array band edges;
//! - [`propagator`]: deterministic RK4 integration of iλ̄ dA/dz = M(z)A,
//!   one-period (monodromy) propagators, and an exact segment-exponential
//!   path for step profiles;
//! - [`floquet`]: the truncated Fourier-block eigenproblem, quasienergies
//!   folded into (−ω/2, ω/2], and quasimode reconstruction;
//! - [`analysis`]: bound-mode detection in the quasienergy gap, the gap
//!   criterion ω > 4κ/λ̄, and the asymptotic principal intensity;
//! - [`markovian`]: the weak-coupling spectral-filtering approximation,
//!   for contrast with the exact treatment;
//! - [`dynloc`]: the rotating-frame dynamic-localization analysis of the
//!   step profile, likewise for contrast;
//! - [`config`] and [`sweep`]: config-file ingestion and deterministic
//!   parameter-sweep orchestration with CSV/JSON export.

pub mod analysis;
pub mod config;
pub mod dynloc;
pub mod floquet;
pub mod linalg;
pub mod markovian;
pub mod model;
pub mod propagator;
pub mod quadrature;
pub mod sweep;

pub use linalg::C64;
pub use model::{ModulationProfile, SystemConfig};
