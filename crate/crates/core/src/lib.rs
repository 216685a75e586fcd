//! Steady states and spectral stability of the 1D viscous shock tube.

pub mod contours;
pub mod feasibility;
pub mod linear;
pub mod local;
pub mod ode;
pub mod polytropic;
pub mod scalar;
pub mod spectral;
pub mod steady;

pub use scalar::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
