//! The local-model equation of state in `(ρ, T)`, `T > 1`.
//!
//! Derived from `ē(τ, S) = e^S/τ + S + τ²/2` with `τ = 1/ρ`, `T = ē_S` and
//! `p = −ē_τ`.

use serde::Serialize;

use super::LocalError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EosState {
    pub p: f64,
    pub e: f64,
    /// Entropy `S = ln((T − 1)/ρ)`.
    pub s: f64,
}

/// First and second partials of `p` and `e` in `(ρ, T)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EosPartials {
    pub p: f64,
    pub e: f64,
    pub p_rho: f64,
    pub p_t: f64,
    pub p_rho_rho: f64,
    pub p_rho_t: f64,
    pub p_t_t: f64,
    pub e_rho: f64,
    pub e_t: f64,
    pub e_rho_rho: f64,
    pub e_rho_t: f64,
    pub e_t_t: f64,
}

fn check(rho: f64, t: f64) -> Result<(), LocalError> {
    if rho > 0.0 && t > 1.0 && rho.is_finite() && t.is_finite() {
        Ok(())
    } else {
        Err(LocalError::Domain { rho, t })
    }
}

#[inline]
pub(crate) fn pressure(rho: f64, t: f64) -> f64 {
    rho * (t - 1.0) - 1.0 / rho
}

#[inline]
pub(crate) fn energy(rho: f64, t: f64) -> f64 {
    t - 1.0 + ((t - 1.0) / rho).ln() + 0.5 / (rho * rho)
}

pub fn eos(rho: f64, t: f64) -> Result<EosState, LocalError> {
    check(rho, t)?;
    Ok(EosState { p: pressure(rho, t), e: energy(rho, t), s: ((t - 1.0) / rho).ln() })
}

pub fn eos_partials(rho: f64, t: f64) -> Result<EosPartials, LocalError> {
    check(rho, t)?;
    Ok(partials_unchecked(rho, t))
}

pub(crate) fn partials_unchecked(rho: f64, t: f64) -> EosPartials {
    let (r2, tm) = (rho * rho, t - 1.0);
    EosPartials {
        p: pressure(rho, t),
        e: energy(rho, t),
        p_rho: tm + 1.0 / r2,
        p_t: rho,
        p_rho_rho: -2.0 / (r2 * rho),
        p_rho_t: 1.0,
        p_t_t: 0.0,
        e_rho: -1.0 / rho - 1.0 / (r2 * rho),
        e_t: 1.0 + 1.0 / tm,
        e_rho_rho: 1.0 / r2 + 3.0 / (r2 * r2),
        e_rho_t: 0.0,
        e_t_t: -1.0 / (tm * tm),
    }
}

/// Isentropic sound speed, `c² = ∂p/∂ρ|_S = 2(T − 1) + 1/ρ²`.
pub fn sound_speed(rho: f64, t: f64) -> Result<f64, LocalError> {
    check(rho, t)?;
    Ok((2.0 * (t - 1.0) + 1.0 / (rho * rho)).sqrt())
}

/// Temperature with the given entropy at density `rho`.
pub fn temperature_from_entropy(rho: f64, s: f64) -> f64 {
    1.0 + rho * s.exp()
}
