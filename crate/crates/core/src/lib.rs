//! Bloch bands, Dirac points and two-scale nonlinear Dirac dynamics for honeycomb lattice
//! potentials.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); concrete double-precision
//! aliases are exported below.

pub mod bloch;
pub mod corrector;
pub mod dirac2d;
pub mod effcoef;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod nls;
pub mod potential;
pub mod profile;
pub mod scalar;
pub mod spectral;
pub mod twoscale;

pub use error::{Error, Result};
pub use scalar::Real;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type LatticeGeometry64 = lattice::LatticeGeometry<f64>;
pub type LatticeGeometry32 = lattice::LatticeGeometry<f32>;
pub type FourierPotential64 = potential::FourierPotential<f64>;
pub type DiracPointData64 = bloch::DiracPointData<f64>;
pub type BlochSolution64 = bloch::BlochSolution<f64>;
pub type EffectiveCoefficients64 = effcoef::EffectiveCoefficients<f64>;
pub type SpinorField64 = dirac2d::SpinorField<f64>;
pub type SpinorField32 = dirac2d::SpinorField<f32>;
pub type ProfileBasis64 = corrector::ProfileBasis<f64>;
pub type WkbField64 = corrector::WkbField<f64>;
pub type TwoScaleNls64 = nls::TwoScaleNls<f64>;
pub type TwoScaleNls32 = nls::TwoScaleNls<f32>;
