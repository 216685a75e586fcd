//! The shooting map `Ψ(c) = (u, e)(1)`, its Jacobian, and Newton solves for
//! prescribed outflow data.
//!
//! `dΨ` comes from the variational equations integrated alongside the
//! profile, so each evaluation is one 6-dimensional explicit run.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feasibility::GridSpec;
use crate::ode::{integrate_rk45, Direction, EventSpec, IntegratorConfig, OdeError, Termination};
use crate::polytropic::{constant_constants, rhs_unchecked, GasParams, IntegrationConstants};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteadyError {
    #[error("constants ({c1}, {c2}) are not feasible")]
    InfeasibleConstant { c1: f64, c2: f64 },
    #[error("target must have positive u1 and e1")]
    InvalidTarget,
    #[error("no root found from {seeds} seeds")]
    NotFound { seeds: usize },
    #[error("integrator failure: {0}")]
    Solver(#[from] OdeError),
}

/// Prescribed outflow values at `x = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataTarget {
    pub u1: f64,
    pub e1: f64,
}

impl DataTarget {
    pub fn new(u1: f64, e1: f64) -> Result<Self, SteadyError> {
        if u1 > 0.0 && e1 > 0.0 && u1.is_finite() && e1.is_finite() {
            Ok(Self { u1, e1 })
        } else {
            Err(SteadyError::InvalidTarget)
        }
    }
}

/// Integration settings for shooting; tighter than classification because
/// Newton needs `Ψ` accurate well below the root tolerance.
pub fn shooting_config() -> IntegratorConfig {
    IntegratorConfig::default().with_tolerances(1e-12, 1e-14)
}

/// How far short of `x = 1` an `e` crossing may sit and still count as the
/// boundary extension `Ψ = (u(1), 0)`.
const BOUNDARY_SLACK: f64 = 1e-9;

pub type Mat2 = [[f64; 2]; 2];

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Evaluates `Ψ(c)` and, with `variations`, `dΨ(c)` (columns `∂/∂c1`, `∂/∂c2`).
fn shoot(
    c: IntegrationConstants,
    p: &GasParams,
    cfg: &IntegratorConfig,
    variations: bool,
) -> Result<([f64; 2], Mat2), SteadyError> {
    let (ka, kn) = (p.u0 / p.alpha, p.u0 / p.nu);
    let pp = *p;
    let rhs = move |_x: f64, y: &[f64], dy: &mut [f64]| {
        let (u, e) = (y[0], y[1]);
        if u == 0.0 {
            dy.iter_mut().for_each(|d| *d = f64::NAN);
            return;
        }
        let [f0, f1] = rhs_unchecked(u, e, c, &pp);
        dy[0] = f0;
        dy[1] = f1;
        if y.len() > 2 {
            let j = [[ka * (1.0 - pp.gamma * e / (u * u)), ka * pp.gamma / u], [-kn * (c.c1 + u), kn]];
            let forcing = [[ka, -kn * u], [0.0, kn]];
            for k in 0..2 {
                let (du, de) = (y[2 + 2 * k], y[3 + 2 * k]);
                dy[2 + 2 * k] = j[0][0] * du + j[0][1] * de + forcing[k][0];
                dy[3 + 2 * k] = j[1][0] * du + j[1][1] * de + forcing[k][1];
            }
        }
    };
    let mut y0 = vec![p.u0, p.e0];
    if variations {
        y0.extend([0.0; 4]);
    }
    let events = [
        EventSpec::component(1, 0.0, Direction::Decreasing, true),
        EventSpec::component(0, 0.0, Direction::Decreasing, true),
    ];
    let mut cfg = *cfg;
    cfg.h_max = cfg.h_max.min(1.0 / 200.0);
    let traj = integrate_rk45(rhs, 0.0, 1.0, &y0, &cfg, &events)?;
    let y = traj.last();
    let jac = if variations { [[y[2], y[4]], [y[3], y[5]]] } else { [[0.0; 2]; 2] };
    match traj.termination {
        Termination::ReachedEnd => Ok(([y[0], y[1]], jac)),
        Termination::Event { which: 0, x } if x >= 1.0 - BOUNDARY_SLACK && y[0] > 0.0 => {
            Ok(([y[0], 0.0], jac))
        }
        _ => Err(SteadyError::InfeasibleConstant { c1: c.c1, c2: c.c2 }),
    }
}

/// `Ψ(c) = (u(1), e(1))`. Constants whose `e` reaches zero exactly at
/// `x = 1` give the boundary value `(u(1), 0)`.
pub fn psi(c: IntegrationConstants, p: &GasParams, cfg: &IntegratorConfig) -> Result<[f64; 2], SteadyError> {
    shoot(c, p, cfg, false).map(|r| r.0)
}

/// `dΨ(c)`; `m[i][j] = ∂Ψ_i/∂c_j`.
pub fn dpsi(c: IntegrationConstants, p: &GasParams, cfg: &IntegratorConfig) -> Result<Mat2, SteadyError> {
    shoot(c, p, cfg, true).map(|r| r.1)
}

pub fn psi_and_dpsi(
    c: IntegrationConstants,
    p: &GasParams,
    cfg: &IntegratorConfig,
) -> Result<([f64; 2], Mat2), SteadyError> {
    shoot(c, p, cfg, true)
}

/// Multistart and Newton settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedPolicy {
    /// Seeds form an `n × n` grid of offsets in `[−half_width, half_width]²` about `c*`.
    pub half_width: f64,
    pub n: usize,
    /// Newton runs started, best-ranked seeds first; `0` means all feasible seeds.
    pub max_starts: usize,
    pub max_iterations: usize,
    pub tol: f64,
    pub cfg: IntegratorConfig,
}

impl Default for SeedPolicy {
    fn default() -> Self {
        Self { half_width: 50.0, n: 9, max_starts: 0, max_iterations: 60, tol: 1e-8, cfg: shooting_config() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub c: IntegrationConstants,
    /// `‖Ψ(c) − target‖₂` on re-integration.
    pub residual: f64,
    pub det_dpsi: f64,
    pub newton_iterations: usize,
    pub seeds_tried: usize,
    /// Distinct converged roots over all starts, in seed-rank order.
    pub roots: Vec<IntegrationConstants>,
    pub seconds: f64,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;

struct NewtonRun {
    c: IntegrationConstants,
    det: f64,
    iterations: usize,
    /// First-order distance bound to the exact root, `‖dΨ⁻¹‖ ‖Ψ(c) − target‖`.
    radius: f64,
}

const POLISH_STEPS: usize = 4;

fn newton_step(jac: &Mat2, f: [f64; 2]) -> Option<(f64, f64)> {
    let det = det2(jac);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some((-(jac[1][1] * f[0] - jac[0][1] * f[1]) / det, -(-jac[1][0] * f[0] + jac[0][0] * f[1]) / det))
}

fn inverse_norm(jac: &Mat2) -> f64 {
    let frob = jac.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    frob / det2(jac).abs()
}

/// Full Newton steps past the tolerance while the residual keeps dropping,
/// so near-singular roots are pinned down before they are compared.
fn polish(
    mut c: IntegrationConstants,
    mut jac: Mat2,
    mut f: [f64; 2],
    target: [f64; 2],
    p: &GasParams,
    cfg: &IntegratorConfig,
) -> (IntegrationConstants, Mat2, f64) {
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    for _ in 0..POLISH_STEPS {
        let Some((d1, d2)) = newton_step(&jac, f) else { break };
        let trial = c.offset(d1, d2);
        match psi_and_dpsi(trial, p, cfg) {
            Ok((ps, jt)) if norm([ps[0] - target[0], ps[1] - target[1]]) < norm(f) => {
                (c, jac, f) = (trial, jt, [ps[0] - target[0], ps[1] - target[1]]);
            }
            _ => break,
        }
    }
    (c, jac, norm(f))
}

fn newton(
    start: IntegrationConstants,
    target: [f64; 2],
    p: &GasParams,
    policy: &SeedPolicy,
) -> Option<NewtonRun> {
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    let mut c = start;
    let (psi0, mut jac) = psi_and_dpsi(c, p, &policy.cfg).ok()?;
    let mut f = [psi0[0] - target[0], psi0[1] - target[1]];
    for it in 0..=policy.max_iterations {
        let fnorm = norm(f);
        if fnorm <= policy.tol {
            let (c, jac, fnorm) = polish(c, jac, f, target, p, &policy.cfg);
            return Some(NewtonRun { c, det: det2(&jac), iterations: it, radius: inverse_norm(&jac) * fnorm });
        }
        if it == policy.max_iterations {
            break;
        }
        let (d1, d2) = newton_step(&jac, f)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = c.offset(t * d1, t * d2);
            // infeasible trial points are treated like a failed decrease
            if let Ok((ps, jt)) = psi_and_dpsi(trial, p, &policy.cfg) {
                let ft = [ps[0] - target[0], ps[1] - target[1]];
                if norm(ft) <= (1.0 - ARMIJO * t) * fnorm {
                    c = trial;
                    jac = jt;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    None
}

/// Two converged runs are one root when they are closer than either the
/// fixed tolerance or their combined error radii.
fn same_root(a: &NewtonRun, b: &NewtonRun) -> bool {
    let d = a.c.dist(b.c);
    d <= 1e-6 * (1.0 + a.c.c1.abs().max(a.c.c2.abs())) || d <= a.radius + b.radius
}

/// Damped Newton on `Ψ(c) = target` from a ranked grid of feasible seeds.
///
/// Every selected seed is run (in parallel); the reported root is the one
/// reached from the best-ranked seed, and `roots` lists all distinct roots.
pub fn solve_for_data(target: DataTarget, p: &GasParams, policy: &SeedPolicy) -> Result<SolveReport, SteadyError> {
    let start = Instant::now();
    DataTarget::new(target.u1, target.e1)?;
    let t = [target.u1, target.e1];
    let centre = constant_constants(p);
    let grid = GridSpec::square(policy.half_width, policy.n);
    let offsets: Vec<(f64, f64)> = grid
        .dc1
        .values()
        .into_iter()
        .flat_map(|a| grid.dc2.values().into_iter().map(move |b| (a, b)))
        .collect();
    let mut seeds: Vec<(f64, IntegrationConstants)> = offsets
        .par_iter()
        .filter_map(|&(a, b)| {
            let c = centre.offset(a, b);
            psi(c, p, &policy.cfg).ok().map(|v| ((v[0] - t[0]).hypot(v[1] - t[1]), c))
        })
        .collect();
    seeds.sort_by(|x, y| x.0.total_cmp(&y.0));
    if policy.max_starts > 0 {
        seeds.truncate(policy.max_starts);
    }
    let runs: Vec<Option<NewtonRun>> = seeds.par_iter().map(|&(_, c)| newton(c, t, p, policy)).collect();
    let seeds_tried = runs.len();
    let mut distinct: Vec<&NewtonRun> = Vec::new();
    for r in runs.iter().flatten() {
        if !distinct.iter().any(|q| same_root(q, r)) {
            distinct.push(r);
        }
    }
    let roots = distinct.iter().map(|r| r.c).collect();
    let best = runs.into_iter().flatten().next().ok_or(SteadyError::NotFound { seeds: seeds_tried })?;
    // certificate: fresh integration at the reported root
    let v = psi(best.c, p, &policy.cfg)?;
    Ok(SolveReport {
        c: best.c,
        residual: (v[0] - t[0]).hypot(v[1] - t[1]),
        det_dpsi: best.det,
        newton_iterations: best.iterations,
        seeds_tried,
        roots,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DetCell {
    pub c: IntegrationConstants,
    /// `None` where `c` is infeasible.
    pub det: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DetScan {
    pub params: GasParams,
    pub cells: Vec<DetCell>,
    pub feasible: usize,
    pub min_abs: f64,
    pub sign_constant: bool,
    /// Sign of `det dΨ` over the feasible cells when it is constant.
    pub sign: Option<i8>,
}

/// `det dΨ` over a grid of offsets from `c*`; infeasible cells are skipped.
pub fn det_dpsi_scan(grid: &GridSpec, p: &GasParams, cfg: &IntegratorConfig) -> DetScan {
    let centre = constant_constants(p);
    let offsets: Vec<(f64, f64)> = grid
        .dc1
        .values()
        .into_iter()
        .flat_map(|a| grid.dc2.values().into_iter().map(move |b| (a, b)))
        .collect();
    let cells: Vec<DetCell> = offsets
        .par_iter()
        .map(|&(a, b)| {
            let c = centre.offset(a, b);
            DetCell { c, det: dpsi(c, p, cfg).ok().map(|m| det2(&m)) }
        })
        .collect();
    let dets: Vec<f64> = cells.iter().filter_map(|c| c.det).collect();
    let min_abs = dets.iter().map(|d| d.abs()).fold(f64::INFINITY, f64::min);
    let pos = dets.iter().all(|&d| d > 0.0);
    let neg = dets.iter().all(|&d| d < 0.0);
    let sign_constant = !dets.is_empty() && (pos || neg);
    let sign = sign_constant.then_some(if pos { 1 } else { -1 });
    DetScan { params: *p, cells, feasible: dets.len(), min_abs, sign_constant, sign }
}
