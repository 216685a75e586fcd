//! The local model: a gas law with a convex entropy whose whole-line
//! shocks can be unstable, together with the steady and spectral studies
//! built on truncations of those shocks.

mod eos;
mod interval;
mod profile;
mod shock;
mod studies;

use thiserror::Error;

use crate::contours::ContourError;
use crate::ode::OdeError;
use crate::spectral::EvansError;

pub use eos::{eos, eos_partials, sound_speed, temperature_from_entropy, EosPartials, EosState};
pub use interval::{
    backward_shooting, local_d0, local_evans, shoot_config, shooting_jacobian, truncate, IntervalProfile,
    ShootingJacobian,
};
pub use profile::{
    continue_profiles, local_profile_rhs, whole_line_profile, Phase, ProfileConfig, WholeLineProfile,
};
pub use shock::{
    continue_in_entropy, lax_shocks_for_entropy, rankine_hugoniot, rankine_hugoniot_entropy, ContinuationStep,
    LocalParams, ShockData, ThermoState,
};
pub use studies::{
    hopf_scan, nullcline_grid, nullcline_nonuniqueness, standing_shock_experiment, standing_shock_for, HopfConfig,
    HopfReport, NullclineConfig, NullclineReport, Separation, StandingShockRow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalError {
    #[error("state outside the equation-of-state domain (ρ = {rho}, T = {t}); need ρ > 0, T > 1")]
    Domain { rho: f64, t: f64 },
    #[error("viscosity and conductivity must be positive and finite")]
    InvalidParams,
    #[error("Newton iteration did not converge")]
    NoConvergence,
    #[error("{count} distinct shocks reachable from the seed set")]
    MultipleBranches { count: usize },
    #[error("continuation stalled after S₋ = {last_good}")]
    ContinuationStall { last_good: f64 },
    #[error("shock has no jump")]
    TrivialShock,
    #[error("profile did not reach the end states within half-width {half_width}")]
    ProfileNotConverged { half_width: f64 },
    #[error("interval [{xl}, {xr}] is empty or leaves the profile's domain")]
    OutOfDomain { xl: f64, xr: f64 },
    #[error("found {found} nullcline intersections, need two")]
    FewerThanTwoIntersections { found: usize },
    #[error("invalid study configuration: {0}")]
    Invalid(&'static str),
    #[error(transparent)]
    Solver(#[from] OdeError),
    #[error(transparent)]
    Evans(#[from] EvansError),
    #[error(transparent)]
    Contour(#[from] ContourError),
}

/// Damped Newton for two unknowns with a forward-difference Jacobian.
/// `f` returns `None` outside its domain, which halves the step.
pub(crate) fn newton2<F>(f: F, x0: [f64; 2], tol: f64, max_iter: usize) -> Option<[f64; 2]>
where
    F: Fn([f64; 2]) -> Option<[f64; 2]>,
{
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let mut x = x0;
    let mut r = f(x)?;
    for _ in 0..max_iter {
        if norm(r) <= tol {
            return Some(x);
        }
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let h = 1e-7 * (1.0 + x[j].abs());
            let mut xp = x;
            xp[j] += h;
            let rp = f(xp).or_else(|| {
                xp[j] = x[j] - h;
                f(xp).map(|v| [-v[0], -v[1]]).map(|v| [v[0] + 2.0 * r[0], v[1] + 2.0 * r[1]])
            })?;
            jac[0][j] = (rp[0] - r[0]) / h;
            jac[1][j] = (rp[1] - r[1]) / h;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = [(r[0] * jac[1][1] - r[1] * jac[0][1]) / det, (jac[0][0] * r[1] - jac[1][0] * r[0]) / det];
        let mut t = 1.0;
        loop {
            let xn = [x[0] - t * dx[0], x[1] - t * dx[1]];
            if let Some(rn) = f(xn) {
                if norm(rn) < norm(r) || t < 1e-3 {
                    x = xn;
                    r = rn;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-6 {
                return None;
            }
        }
    }
    (norm(r) <= tol).then_some(x)
}
