//! Whole-line viscous shock profiles of the local model.
//!
//! The right end state is a saddle of the steady system and the left one a
//! repelling node, so the connection is the one-dimensional stable manifold
//! of the right state. It is traced backward in `x` from a point `δ` along
//! the stable eigenvector; beyond that point the profile is the linear tail
//! `z₊ + δ v e^{μ(x − x₀)}`.

use serde::{Deserialize, Serialize};

use super::eos::partials_unchecked;
use super::shock::{continue_in_entropy, LocalParams, ShockData};
use super::LocalError;
use crate::ode::{integrate_rk45, Direction, EventSpec, IntegratorConfig, Trajectory};

/// `(u', T')` of the steady system with mass flux `m` and flux constants `c1`, `c2`.
pub fn local_profile_rhs(
    u: f64,
    t: f64,
    m: f64,
    c1: f64,
    c2: f64,
    params: &LocalParams,
) -> Result<[f64; 2], LocalError> {
    if !(u > 0.0 && t > 1.0 && (m / u).is_finite()) {
        return Err(LocalError::Domain { rho: m / u, t });
    }
    Ok(rhs_unchecked(u, t, m, c1, c2, params))
}

#[inline]
pub(crate) fn rhs_unchecked(u: f64, t: f64, m: f64, c1: f64, c2: f64, params: &LocalParams) -> [f64; 2] {
    let q = partials_unchecked(m / u, t);
    [(m * u + q.p - c1) / params.alpha, (m * (q.e - 0.5 * u * u) + c1 * u - c2) / params.kappa]
}

/// Jacobian of [`local_profile_rhs`] in `(u, T)`.
pub(crate) fn rhs_jacobian(u: f64, t: f64, m: f64, c1: f64, params: &LocalParams) -> [[f64; 2]; 2] {
    let rho = m / u;
    let q = partials_unchecked(rho, t);
    let drho = -rho / u;
    [
        [(m + q.p_rho * drho) / params.alpha, q.p_t / params.alpha],
        [(m * (q.e_rho * drho - u) + c1) / params.kappa, m * q.e_t / params.kappa],
    ]
}

/// Which component's midpoint is pinned to `x = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Velocity,
    /// Puts the steep thermal front at the origin.
    #[default]
    Temperature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    /// Largest allowed distance to the end states at `x = ±L`.
    pub end_tol: f64,
    /// Offset from the right rest point where the backward run starts.
    pub delta: f64,
    pub rtol: f64,
    pub atol: f64,
    pub phase: Phase,
    /// Start `L` here; it is doubled until both end defects pass.
    pub min_half_width: f64,
    pub max_half_width: f64,
    /// Position of the backward run's start before re-centering. Has no
    /// effect on the result beyond rounding.
    pub anchor: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            end_tol: 1e-6,
            delta: 1e-7,
            rtol: 1e-12,
            atol: 1e-13,
            phase: Phase::Temperature,
            min_half_width: 1.0,
            max_half_width: 4096.0,
            anchor: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WholeLineProfile {
    pub shock: ShockData,
    pub params: LocalParams,
    pub config: ProfileConfig,
    /// Half-width `L` of the domain `[−L, L]`.
    pub half_width: f64,
    /// `|z(−L) − z₋|` and `|z(L) − z₊|` (max norm).
    pub defect_left: f64,
    pub defect_right: f64,
    /// Backward trajectory in its own coordinate; profile `x = x_run − shift`.
    traj: Trajectory,
    shift: f64,
    /// Start of the linear tail (profile coordinate), its offset vector and rate.
    tail_x: f64,
    tail_dz: [f64; 2],
    tail_mu: f64,
}

impl WholeLineProfile {
    /// `(u, T)` at `x`; left of the computed range the left end state.
    pub fn state(&self, x: f64) -> [f64; 2] {
        let r = self.shock.right;
        if x >= self.tail_x {
            let g = (self.tail_mu * (x - self.tail_x)).exp();
            return [r.u + self.tail_dz[0] * g, r.t + self.tail_dz[1] * g];
        }
        let xr = x + self.shift;
        if xr <= self.traj.last_x() {
            let l = self.shock.left;
            return [l.u, l.t];
        }
        let mut out = [0.0; 2];
        self.traj.eval_into(xr, &mut out);
        out
    }

    pub fn slopes(&self, x: f64) -> [f64; 2] {
        let [u, t] = self.state(x);
        let s = &self.shock;
        rhs_unchecked(u, t, s.m, s.c1, s.c2, &self.params)
    }

    /// Leftmost point actually integrated.
    pub fn computed_left(&self) -> f64 {
        self.traj.last_x() - self.shift
    }

    /// Samples `(x, u, T)` on `n` evenly spaced points of `[a, b]`.
    pub fn sample(&self, a: f64, b: f64, n: usize) -> Vec<[f64; 3]> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let x = a + (b - a) * i as f64 / (n - 1) as f64;
                let [u, t] = self.state(x);
                [x, u, t]
            })
            .collect()
    }

    /// Largest `|z' − f(z)|` on `n` points of `[−L, L]`, from the dense output.
    pub fn rhs_defect(&self, n: usize) -> f64 {
        let s = &self.shock;
        let l = self.half_width;
        let mut worst = 0.0f64;
        let mut d = [0.0; 2];
        for i in 0..n {
            let x = -l + 2.0 * l * (i as f64 + 0.5) / n as f64;
            let [u, t] = self.state(x);
            let f = rhs_unchecked(u, t, s.m, s.c1, s.c2, &self.params);
            if x >= self.tail_x {
                let g = self.tail_mu * (self.tail_mu * (x - self.tail_x)).exp();
                d = [self.tail_dz[0] * g, self.tail_dz[1] * g];
            } else if x + self.shift > self.traj.last_x() {
                self.traj.deriv_into(x + self.shift, &mut d);
            } else {
                d = [0.0, 0.0];
            }
            let scale = 1.0 + f[0].abs().max(f[1].abs());
            worst = worst.max((d[0] - f[0]).abs().max((d[1] - f[1]).abs()) / scale);
        }
        worst
    }

    /// Momentum and energy fluxes `m u + p − α u'` and
    /// `m(e + u²/2) + p u − α u u' − κ T'`, which are constant along the profile.
    pub fn fluxes(&self, x: f64) -> [f64; 2] {
        let [u, t] = self.state(x);
        let [du, dt] = self.slopes(x);
        let m = self.shock.m;
        let q = partials_unchecked(m / u, t);
        let (a, k) = (self.params.alpha, self.params.kappa);
        [m * u + q.p - a * du, m * (q.e + 0.5 * u * u) + q.p * u - a * u * du - k * dt]
    }
}

fn stable_direction(shock: &ShockData, params: &LocalParams) -> Result<(f64, [f64; 2]), LocalError> {
    let r = shock.right;
    let j = rhs_jacobian(r.u, r.t, shock.m, shock.c1, params);
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if !(det < 0.0) {
        // not a saddle: no one-dimensional connection to follow
        return Err(LocalError::TrivialShock);
    }
    let mu = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
    // (J − μ) v = 0, using whichever row is better conditioned
    let v = if j[0][1].abs() + (j[0][0] - mu).abs() >= j[1][0].abs() + (j[1][1] - mu).abs() {
        [j[0][1], mu - j[0][0]]
    } else {
        [mu - j[1][1], j[1][0]]
    };
    let n = v[0].hypot(v[1]);
    // orient toward the left state (larger u)
    let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    Ok((mu, [s * v[0] / n, s * v[1] / n]))
}

/// Whole-line profile of a Lax shock, centered by `cfg.phase`.
pub fn whole_line_profile(
    shock: &ShockData,
    params: &LocalParams,
    cfg: &ProfileConfig,
) -> Result<WholeLineProfile, LocalError> {
    if shock.jump() <= 1e-12 * (1.0 + shock.right.u) {
        return Err(LocalError::TrivialShock);
    }
    let (mu, v) = stable_direction(shock, params)?;
    let (l, r) = (shock.left, shock.right);
    let delta = cfg.delta * (l.u - r.u).abs().max((l.t - r.t).abs());
    let z0 = [r.u + delta * v[0], r.t + delta * v[1]];
    let (m, c1, c2) = (shock.m, shock.c1, shock.c2);
    let p = *params;
    let f = move |_x: f64, y: &[f64], dy: &mut [f64]| {
        let d = rhs_unchecked(y[0], y[1], m, c1, c2, &p);
        dy[0] = d[0];
        dy[1] = d[1];
    };
    let mut icfg = IntegratorConfig::default().with_tolerances(cfg.rtol, cfg.atol);
    icfg.h_init = 1e-3;
    icfg.h_max = 0.5;
    icfg.blowup_threshold = 1e6 * (1.0 + l.u.max(l.t));
    // stop once the left state is reached to well below the end tolerance
    let target = 1e-3 * cfg.end_tol;
    let (lu, lt) = (l.u, l.t);
    let arrive = EventSpec::new(
        move |_x, y: &[f64]| (y[0] - lu).abs().max((y[1] - lt).abs()) - target,
        Direction::Decreasing,
        true,
    );
    let span = cfg.max_half_width * 2.0;
    let traj = integrate_rk45(f, cfg.anchor, cfg.anchor - span, &z0, &icfg, &[arrive])?;
    if traj.events.is_empty() {
        return Err(LocalError::ProfileNotConverged { half_width: cfg.max_half_width });
    }

    // phase: midpoint crossing of the chosen component, located on the
    // dense output by bisection between bracketing steps
    let (k, mid) = match cfg.phase {
        Phase::Velocity => (0, 0.5 * (l.u + r.u)),
        Phase::Temperature => (1, 0.5 * (l.t + r.t)),
    };
    let g = |y: &[f64]| y[k] - mid;
    let i = traj
        .ys
        .windows(2)
        .position(|w| g(&w[0]) * g(&w[1]) <= 0.0)
        .ok_or(LocalError::ProfileNotConverged { half_width: cfg.max_half_width })?;
    let (mut a, mut b) = (traj.xs[i], traj.xs[i + 1]);
    let ga = g(&traj.ys[i]);
    let mut buf = [0.0; 2];
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        traj.eval_into(c, &mut buf);
        if g(&buf) * ga > 0.0 {
            a = c;
        } else {
            b = c;
        }
        if (a - b).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    let shift = 0.5 * (a + b);
    let tail_x = cfg.anchor - shift;
    let left_end = traj.last_x() - shift;

    let mut prof = WholeLineProfile {
        shock: *shock,
        params: *params,
        config: *cfg,
        half_width: cfg.min_half_width.max(1e-3),
        defect_left: f64::INFINITY,
        defect_right: f64::INFINITY,
        traj,
        shift,
        tail_x,
        tail_dz: [delta * v[0], delta * v[1]],
        tail_mu: mu,
    };
    loop {
        let half = prof.half_width;
        let [ul, tl] = prof.state(-half);
        let [ur, tr] = prof.state(half);
        prof.defect_left = if -half <= left_end { target } else { (ul - l.u).abs().max((tl - l.t).abs()) };
        prof.defect_right = (ur - r.u).abs().max((tr - r.t).abs());
        if prof.defect_left <= cfg.end_tol && prof.defect_right <= cfg.end_tol {
            return Ok(prof);
        }
        if half >= cfg.max_half_width {
            return Err(LocalError::ProfileNotConverged { half_width: half });
        }
        prof.half_width = (2.0 * half).min(cfg.max_half_width);
    }
}

/// Profiles along an entropy continuation (see [`continue_in_entropy`]),
/// one per accepted step. A step whose profile fails stalls the run.
pub fn continue_profiles(
    start: f64,
    target: f64,
    steps: usize,
    rho_plus: f64,
    t_plus: f64,
    params: &LocalParams,
    cfg: &ProfileConfig,
) -> Result<Vec<(f64, WholeLineProfile)>, LocalError> {
    let shocks = continue_in_entropy(start, target, steps, rho_plus, t_plus)?;
    let mut out: Vec<(f64, WholeLineProfile)> = Vec::with_capacity(shocks.len());
    for st in shocks {
        match whole_line_profile(&st.shock, params, cfg) {
            Ok(p) => out.push((st.s_minus, p)),
            Err(_) => {
                let last_good = out.last().map_or(start, |p| p.0);
                return Err(LocalError::ContinuationStall { last_good });
            }
        }
    }
    Ok(out)
}
