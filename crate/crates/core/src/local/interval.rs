//! Local-model profiles on a finite interval `[x_L, x_R]`, as backgrounds
//! for the Evans function and as a backward shooting map in the flux
//! constants.

use num_complex::Complex64;
use serde::Serialize;

use super::eos::partials_unchecked;
use super::profile::{rhs_unchecked, WholeLineProfile};
use super::shock::LocalParams;
use super::LocalError;
use crate::ode::{integrate_rk45, IntegratorConfig, Trajectory};
use crate::spectral::{evans, Background, BackgroundPoint, EvansConfig, EvansValue};

const SHOOT_RTOL: f64 = 1e-12;
const SHOOT_ATOL: f64 = 1e-13;

/// Integrator settings for profile shots at the given tolerances.
pub fn shoot_config(rtol: f64, atol: f64) -> IntegratorConfig {
    let mut c = IntegratorConfig::default().with_tolerances(rtol, atol);
    c.h_init = 1e-3;
    c.h_max = 0.25;
    c.blowup_threshold = 1e6;
    c
}

/// A steady local-model solution on `[xl, xr]` with flux constants `(m, c1, c2)`.
#[derive(Clone, Debug)]
pub struct IntervalProfile {
    pub xl: f64,
    pub xr: f64,
    pub m: f64,
    pub c1: f64,
    pub c2: f64,
    pub params: LocalParams,
    /// `(u, T)` at `x_L` and `x_R`.
    pub left: [f64; 2],
    pub right: [f64; 2],
    /// Distance between `left` and the whole-line value at `x_L` when the
    /// interval came from [`truncate`]; zero otherwise.
    pub boundary_mismatch: f64,
    traj: Trajectory,
}

impl IntervalProfile {
    /// Integrates backward from the right data `(u, T)(x_R)`.
    pub fn shoot(
        xl: f64,
        xr: f64,
        right: [f64; 2],
        m: f64,
        c: [f64; 2],
        params: &LocalParams,
    ) -> Result<Self, LocalError> {
        Self::shoot_with(xl, xr, right, m, c, params, &shoot_config(SHOOT_RTOL, SHOOT_ATOL))
    }

    pub fn shoot_with(
        xl: f64,
        xr: f64,
        right: [f64; 2],
        m: f64,
        c: [f64; 2],
        params: &LocalParams,
        cfg: &IntegratorConfig,
    ) -> Result<Self, LocalError> {
        if !(xl < xr) || !xl.is_finite() || !xr.is_finite() {
            return Err(LocalError::OutOfDomain { xl, xr });
        }
        if !(right[0] > 0.0 && right[1] > 1.0) {
            return Err(LocalError::Domain { rho: m / right[0], t: right[1] });
        }
        let p = *params;
        let f = move |_x: f64, y: &[f64], dy: &mut [f64]| {
            let d = rhs_unchecked(y[0], y[1], m, c[0], c[1], &p);
            dy[0] = d[0];
            dy[1] = d[1];
        };
        let traj = integrate_rk45(f, xr, xl, &right, cfg, &[])?;
        let y = traj.last();
        if !traj.reached_end() || !(y[0] > 0.0 && y[1] > 1.0) {
            return Err(LocalError::Domain { rho: m / y[0], t: y[1] });
        }
        Ok(Self {
            xl,
            xr,
            m,
            c1: c[0],
            c2: c[1],
            params: p,
            left: [y[0], y[1]],
            right,
            boundary_mismatch: 0.0,
            traj,
        })
    }

    pub fn state(&self, x: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        self.traj.eval_into(x.clamp(self.xl, self.xr), &mut out);
        out
    }

    pub fn slopes(&self, x: f64) -> [f64; 2] {
        let [u, t] = self.state(x);
        rhs_unchecked(u, t, self.m, self.c1, self.c2, &self.params)
    }

    /// Samples `(x, u, T)` on `n` evenly spaced points.
    pub fn sample(&self, n: usize) -> Vec<[f64; 3]> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let x = self.xl + (self.xr - self.xl) * i as f64 / (n - 1) as f64;
                let [u, t] = self.state(x);
                [x, u, t]
            })
            .collect()
    }
}

/// The piece of a whole-line profile on `[xl, xr]`, re-integrated from its
/// right boundary value.
pub fn truncate(profile: &WholeLineProfile, xl: f64, xr: f64) -> Result<IntervalProfile, LocalError> {
    let l = profile.half_width;
    if !(xl < xr && xl >= -l && xr <= l) {
        return Err(LocalError::OutOfDomain { xl, xr });
    }
    let s = &profile.shock;
    let mut iv = IntervalProfile::shoot(xl, xr, profile.state(xr), s.m, [s.c1, s.c2], &profile.params)?;
    let want = profile.state(xl);
    iv.boundary_mismatch = (iv.left[0] - want[0]).abs().max((iv.left[1] - want[1]).abs());
    Ok(iv)
}

impl Background for IntervalProfile {
    fn span(&self) -> (f64, f64) {
        (self.xl, self.xr)
    }

    fn mass_flux(&self) -> f64 {
        self.m
    }

    fn viscosity(&self) -> f64 {
        self.params.alpha
    }

    fn conductivity(&self) -> f64 {
        self.params.kappa
    }

    fn point(&self, x: f64) -> BackgroundPoint {
        let [u, t] = self.state(x);
        let [du, dt] = rhs_unchecked(u, t, self.m, self.c1, self.c2, &self.params);
        let rho = self.m / u;
        let drho = -rho * du / u;
        let q = partials_unchecked(rho, t);
        BackgroundPoint {
            rho,
            u,
            theta: t,
            drho,
            du,
            dtheta: dt,
            p: q.p,
            p_rho: q.p_rho,
            p_theta: q.p_t,
            dp_rho: q.p_rho_rho * drho + q.p_rho_t * dt,
            dp_theta: q.p_rho_t * drho + q.p_t_t * dt,
            e_rho: q.e_rho,
            e_theta: q.e_t,
            de_rho: q.e_rho_rho * drho + q.e_rho_t * dt,
            de_theta: q.e_rho_t * drho + q.e_t_t * dt,
        }
    }
}

/// Evans function with the Wronskian taken at `x = 0` (clamped into the
/// interval) unless `cfg` names another matching point.
pub fn local_evans(iv: &IntervalProfile, lambda: Complex64, cfg: &EvansConfig) -> Result<EvansValue, LocalError> {
    let mut c = *cfg;
    c.matching = Some(cfg.matching.unwrap_or(0.0).clamp(iv.xl, iv.xr));
    Ok(evans(iv, lambda, &c)?)
}

pub fn local_d0(iv: &IntervalProfile, cfg: &EvansConfig) -> Result<EvansValue, LocalError> {
    local_evans(iv, Complex64::new(0.0, 0.0), cfg)
}

/// `(u, T)(x_L)` of the solution with the interval's right data and flux
/// constants `c`.
pub fn backward_shooting(iv: &IntervalProfile, c: [f64; 2]) -> Result<[f64; 2], LocalError> {
    Ok(IntervalProfile::shoot(iv.xl, iv.xr, iv.right, iv.m, c, &iv.params)?.left)
}

pub(crate) fn backward_shooting_with(
    iv: &IntervalProfile,
    c: [f64; 2],
    cfg: &IntegratorConfig,
) -> Result<[f64; 2], LocalError> {
    Ok(IntervalProfile::shoot_with(iv.xl, iv.xr, iv.right, iv.m, c, &iv.params, cfg)?.left)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShootingJacobian {
    /// `∂(u, T)(x_L) / ∂(c1, c2)` by central differences.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    pub step: f64,
}

/// Jacobian of [`backward_shooting`] at the interval's own constants.
pub fn shooting_jacobian(iv: &IntervalProfile, rel_step: f64) -> Result<ShootingJacobian, LocalError> {
    let c = [iv.c1, iv.c2];
    let mut jac = [[0.0; 2]; 2];
    let mut step = 0.0;
    for j in 0..2 {
        let h = rel_step * (1.0 + c[j].abs());
        step = f64::max(step, h);
        let (mut cp, mut cm) = (c, c);
        cp[j] += h;
        cm[j] -= h;
        let (a, b) = (backward_shooting(iv, cp)?, backward_shooting(iv, cm)?);
        for i in 0..2 {
            jac[i][j] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    Ok(ShootingJacobian { jac, det: jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0], step })
}
