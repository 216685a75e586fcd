//! Rankine–Hugoniot end states of a local-model shock and continuation in
//! the left entropy.

use serde::{Deserialize, Serialize};

use super::eos::{eos, partials_unchecked, sound_speed, temperature_from_entropy};
use super::{newton2, LocalError};

/// Viscosity and heat conductivity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalParams {
    pub alpha: f64,
    pub kappa: f64,
}

impl Default for LocalParams {
    fn default() -> Self {
        Self { alpha: 1.0, kappa: 1.0 }
    }
}

impl LocalParams {
    pub fn new(alpha: f64, kappa: f64) -> Result<Self, LocalError> {
        if alpha > 0.0 && kappa > 0.0 && alpha.is_finite() && kappa.is_finite() {
            Ok(Self { alpha, kappa })
        } else {
            Err(LocalError::InvalidParams)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoState {
    pub rho: f64,
    pub u: f64,
    pub t: f64,
}

impl ThermoState {
    pub fn new(rho: f64, u: f64, t: f64) -> Result<Self, LocalError> {
        eos(rho, t)?;
        if !(u > 0.0) {
            return Err(LocalError::Domain { rho, t });
        }
        Ok(Self { rho, u, t })
    }

    pub fn entropy(&self) -> f64 {
        ((self.t - 1.0) / self.rho).ln()
    }

    pub fn sound_speed(&self) -> f64 {
        sound_speed(self.rho, self.t).unwrap_or(f64::NAN)
    }

    /// Mass, momentum and energy fluxes `(m, m u + p, m (e + u²/2) + p u)`.
    pub fn fluxes(&self) -> [f64; 3] {
        let q = partials_unchecked(self.rho, self.t);
        let m = self.rho * self.u;
        [m, m * self.u + q.p, m * (q.e + 0.5 * self.u * self.u) + q.p * self.u]
    }
}

/// End states of a steady shock with their common fluxes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShockData {
    pub left: ThermoState,
    pub right: ThermoState,
    pub m: f64,
    /// Momentum and energy fluxes, the integration constants of the profile.
    pub c1: f64,
    pub c2: f64,
}

impl ShockData {
    /// Fluxes are taken from the right state.
    pub fn from_states(left: ThermoState, right: ThermoState) -> Self {
        let [m, c1, c2] = right.fluxes();
        Self { left, right, m, c1, c2 }
    }

    /// Largest flux mismatch between the end states, relative to `1 + |flux|`.
    pub fn flux_residual(&self) -> f64 {
        let (a, b) = (self.left.fluxes(), self.right.fluxes());
        (0..3).map(|i| (a[i] - b[i]).abs() / (1.0 + b[i].abs())).fold(0.0, f64::max)
    }

    /// `u₋ > c₋` and `u₊ < c₊`: a compressive Lax shock.
    pub fn is_lax(&self) -> bool {
        self.left.u > self.left.sound_speed() && self.right.u < self.right.sound_speed()
    }

    pub fn jump(&self) -> f64 {
        (self.left.u - self.right.u).abs()
    }
}

const RH_TOL: f64 = 1e-12;
const RH_ITERATIONS: usize = 50;

/// Left state `(u₋, T₋)` sharing the right state's fluxes, by Newton from `seed`.
pub fn rankine_hugoniot(right: ThermoState, seed: (f64, f64)) -> Result<ShockData, LocalError> {
    ThermoState::new(right.rho, right.u, right.t)?;
    let [m, c1, c2] = right.fluxes();
    let residual = |z: [f64; 2]| -> Option<[f64; 2]> {
        let [u, t] = z;
        if !(u > 0.0 && t > 1.0) {
            return None;
        }
        let q = partials_unchecked(m / u, t);
        Some([(m * u + q.p - c1) / (1.0 + c1.abs()), (m * (q.e + 0.5 * u * u) + q.p * u - c2) / (1.0 + c2.abs())])
    };
    let [u, t] = newton2(residual, [seed.0, seed.1], RH_TOL, RH_ITERATIONS).ok_or(LocalError::NoConvergence)?;
    let left = ThermoState::new(m / u, u, t)?;
    Ok(ShockData::from_states(left, right))
}

/// Shock with right density and temperature fixed and left entropy `s_minus`;
/// unknowns `(u₊, u₋)`, seeded by `seed`.
pub fn rankine_hugoniot_entropy(
    s_minus: f64,
    rho_plus: f64,
    t_plus: f64,
    seed: (f64, f64),
) -> Result<ShockData, LocalError> {
    eos(rho_plus, t_plus)?;
    let states = |z: [f64; 2]| -> Option<(ThermoState, ThermoState)> {
        let [up, um] = z;
        if !(up > 0.0 && um > 0.0) {
            return None;
        }
        let rm = rho_plus * up / um;
        let tm = temperature_from_entropy(rm, s_minus);
        Some((ThermoState { rho: rm, u: um, t: tm }, ThermoState { rho: rho_plus, u: up, t: t_plus }))
    };
    let residual = |z: [f64; 2]| -> Option<[f64; 2]> {
        let (l, r) = states(z)?;
        if !(l.t > 1.0) {
            return None;
        }
        let (a, b) = (l.fluxes(), r.fluxes());
        Some([(a[1] - b[1]) / (1.0 + b[1].abs()), (a[2] - b[2]) / (1.0 + b[2].abs())])
    };
    let z = newton2(residual, [seed.0, seed.1], RH_TOL, RH_ITERATIONS).ok_or(LocalError::NoConvergence)?;
    let (l, r) = states(z).ok_or(LocalError::NoConvergence)?;
    Ok(ShockData::from_states(l, r))
}

/// Every distinct Lax shock reachable from a grid of seeds.
pub fn lax_shocks_for_entropy(s_minus: f64, rho_plus: f64, t_plus: f64) -> Vec<ShockData> {
    let mut found: Vec<ShockData> = Vec::new();
    for i in 0..12 {
        let up = 0.25 * 1.25f64.powi(i);
        for j in 1..=16 {
            let um = up * 1.3f64.powi(j);
            if let Ok(s) = rankine_hugoniot_entropy(s_minus, rho_plus, t_plus, (up, um)) {
                let distinct = !found.iter().any(|f| (f.right.u - s.right.u).abs() < 1e-8 * (1.0 + s.right.u));
                if s.is_lax() && s.jump() > 1e-3 * s.right.u && distinct {
                    found.push(s);
                }
            }
        }
    }
    found.sort_by(|a, b| a.right.u.total_cmp(&b.right.u));
    found
}

/// One continuation step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContinuationStep {
    pub s_minus: f64,
    pub shock: ShockData,
}

/// Continues the Lax shock with right state `(rho_plus, t_plus)` over
/// `steps + 1` evenly spaced left entropies from `start` to `target`, each
/// step seeded by the previous one. Grid points before the first genuine
/// shock (for instance `S₋ ≥ S₊`, where only the trivial state satisfies
/// the jump conditions) are skipped.
pub fn continue_in_entropy(
    start: f64,
    target: f64,
    steps: usize,
    rho_plus: f64,
    t_plus: f64,
) -> Result<Vec<ContinuationStep>, LocalError> {
    let steps = steps.max(1);
    let mut out: Vec<ContinuationStep> = Vec::new();
    for k in 0..=steps {
        let s = start + (target - start) * k as f64 / steps as f64;
        let next = match out.last() {
            None => {
                let all = lax_shocks_for_entropy(s, rho_plus, t_plus);
                match all.len() {
                    0 => continue,
                    1 => all[0],
                    n => return Err(LocalError::MultipleBranches { count: n }),
                }
            }
            Some(prev) => {
                let seed = (prev.shock.right.u, prev.shock.left.u);
                match rankine_hugoniot_entropy(s, rho_plus, t_plus, seed) {
                    Ok(sh) if sh.is_lax() => sh,
                    _ => return Err(LocalError::ContinuationStall { last_good: prev.s_minus }),
                }
            }
        };
        out.push(ContinuationStep { s_minus: s, shock: next });
    }
    if out.is_empty() {
        return Err(LocalError::NoConvergence);
    }
    Ok(out)
}
