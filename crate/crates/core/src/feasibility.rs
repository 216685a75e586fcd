//! The feasible set of integration constants and the ways a trajectory can
//! leave it.
//!
//! A constant pair is feasible when the profile stays positive on all of
//! `[0, 1]`. Failures are sorted into three strata. `ENegative`: the
//! energy crosses zero and the run continues to `x = 1`. `UNegative`: the
//! velocity reaches zero while the energy is still positive, which includes
//! running into the singular corner `(u, e) = (0, 0)`. `Blowup`: the energy
//! goes negative at positive velocity and the velocity then collapses
//! (`Γe/u → −∞`), or the norm or step size signals a singularity elsewhere.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::{IntegratorConfig, OdeError, Termination};
use crate::polytropic::{
    constant_constants, integrate_profile, solve_profile, GasParams, IntegrationConstants, Method,
    ProfileFailure,
};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum FeasibilityClass<T = f64> {
    Feasible,
    ENegative { x: T },
    UNegative { x: T },
    Blowup { x: T },
}

impl<T: Real> FeasibilityClass<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityClass::Feasible)
    }

    pub fn label(&self) -> &'static str {
        match self {
            FeasibilityClass::Feasible => "feasible",
            FeasibilityClass::ENegative { .. } => "e_negative",
            FeasibilityClass::UNegative { .. } => "u_negative",
            FeasibilityClass::Blowup { .. } => "blowup",
        }
    }

    pub fn x_star(&self) -> Option<T> {
        match *self {
            FeasibilityClass::Feasible => None,
            FeasibilityClass::ENegative { x }
            | FeasibilityClass::UNegative { x }
            | FeasibilityClass::Blowup { x } => Some(x),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeasibilityError {
    #[error("integrator failure: {0}")]
    IntegratorFailure(OdeError),
    #[error("both ray endpoints classify the same way")]
    NoSignChange,
    #[error("invalid parameters")]
    InvalidParams,
}

/// Integration settings used for classification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions<T = f64> {
    pub cfg: IntegratorConfig<T>,
    pub method: Method,
}

impl<T: Real> Default for ClassifyOptions<T> {
    fn default() -> Self {
        Self { cfg: IntegratorConfig::default(), method: Method::Stiff }
    }
}

pub fn classify<T: Real>(
    c: IntegrationConstants<T>,
    params: &GasParams<T>,
    opts: &ClassifyOptions<T>,
) -> Result<FeasibilityClass<T>, FeasibilityError> {
    params.validate().map_err(|_| FeasibilityError::InvalidParams)?;
    let traj = match integrate_profile(c, params, &opts.cfg, opts.method, false) {
        Ok(t) => t,
        Err(ProfileFailure::Solver(OdeError::NewtonDivergence { x })) => {
            return Ok(FeasibilityClass::Blowup { x: T::lit(x) })
        }
        Err(ProfileFailure::Solver(e)) => return Err(FeasibilityError::IntegratorFailure(e)),
        Err(_) => unreachable!("raw integration reports failures through termination"),
    };
    // events[0] is e ↓ 0 (non-terminal), events[1] is u ↓ 0
    let first_e = traj.events.iter().find(|h| h.which == 0);
    // Trajectories running into the singular corner (u, e) → (0, 0) reach
    // both zeros together; an e crossing there is rounding, not a sign change
    // of e at positive u.
    let corner = T::lit(CORNER_REL) * params.u0;
    let e_first_at_positive_u = first_e.is_some_and(|h| h.y[0] > corner);
    let near_corner = |y: &[T]| y[0].abs() <= corner && y[1].abs() <= corner;
    Ok(match traj.termination {
        Termination::ReachedEnd => match first_e {
            Some(h) => FeasibilityClass::ENegative { x: h.x },
            None => FeasibilityClass::Feasible,
        },
        Termination::Event { x, .. } => {
            if e_first_at_positive_u {
                FeasibilityClass::Blowup { x }
            } else {
                FeasibilityClass::UNegative { x }
            }
        }
        Termination::Blowup { x } | Termination::MinStep { x } => {
            if !e_first_at_positive_u && near_corner(traj.last()) {
                FeasibilityClass::UNegative { x }
            } else {
                FeasibilityClass::Blowup { x }
            }
        }
    })
}

/// Distance to `(0, 0)`, relative to `u0`, below which a simultaneous
/// approach of both zeros counts as the velocity reaching zero.
const CORNER_REL: f64 = 1e-6;

/// Evenly spaced axis `lo..=hi` with `n` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.n)
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Offsets `Δc` from the constant-solution constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dc1: Axis,
    pub dc2: Axis,
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self { dc1: Axis::new(-half_width, half_width, n), dc2: Axis::new(-half_width, half_width, n) }
    }

    pub fn is_empty(&self) -> bool {
        self.dc1.n == 0 || self.dc2.n == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanCell {
    pub c: IntegrationConstants,
    pub class: Result<FeasibilityClass, String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub params: GasParams,
    pub center: IntegrationConstants,
    pub dc1: Vec<f64>,
    pub dc2: Vec<f64>,
    /// Row-major: `cells[i * dc2.len() + j]` is `(dc1[i], dc2[j])`.
    pub cells: Vec<ScanCell>,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StratumCounts {
    pub feasible: usize,
    pub e_negative: usize,
    pub u_negative: usize,
    pub blowup: usize,
    pub failed: usize,
}

impl ScanResult {
    pub fn cell(&self, i: usize, j: usize) -> &ScanCell {
        &self.cells[i * self.dc2.len() + j]
    }

    pub fn counts(&self) -> StratumCounts {
        let mut s = StratumCounts::default();
        for cell in &self.cells {
            match &cell.class {
                Ok(FeasibilityClass::Feasible) => s.feasible += 1,
                Ok(FeasibilityClass::ENegative { .. }) => s.e_negative += 1,
                Ok(FeasibilityClass::UNegative { .. }) => s.u_negative += 1,
                Ok(FeasibilityClass::Blowup { .. }) => s.blowup += 1,
                Err(_) => s.failed += 1,
            }
        }
        s
    }
}

/// Classifies every grid cell; cells are independent and evaluated in parallel.
pub fn scan(grid: &GridSpec, params: &GasParams, opts: &ClassifyOptions) -> ScanResult {
    let start = Instant::now();
    let center = constant_constants(params);
    let dc1 = grid.dc1.values();
    let dc2 = grid.dc2.values();
    let pairs: Vec<(f64, f64)> =
        dc1.iter().flat_map(|&a| dc2.iter().map(move |&b| (a, b))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(a, b)| {
            let c = center.offset(a, b);
            ScanCell { c, class: classify(c, params, opts).map_err(|e| e.to_string()) }
        })
        .collect();
    ScanResult { params: *params, center, dc1, dc2, cells, seconds: start.elapsed().as_secs_f64() }
}

/// A point of the feasible-set boundary with its `e(1) = 0` certificate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundaryPoint {
    /// Last feasible constant on the ray.
    pub c: IntegrationConstants,
    /// First infeasible constant on the ray.
    pub c_outside: IntegrationConstants,
    pub u1: f64,
    pub e1: f64,
    pub min_u: f64,
    pub min_e: f64,
}

/// Bisects the segment `inside → outside` to the feasibility switch.
pub fn trace_boundary(
    inside: IntegrationConstants,
    outside: IntegrationConstants,
    params: &GasParams,
    opts: &ClassifyOptions,
    tol: f64,
) -> Result<BoundaryPoint, FeasibilityError> {
    let at = |t: f64| {
        IntegrationConstants::new(
            inside.c1 + t * (outside.c1 - inside.c1),
            inside.c2 + t * (outside.c2 - inside.c2),
        )
    };
    let f0 = classify(inside, params, opts)?.is_feasible();
    let f1 = classify(outside, params, opts)?.is_feasible();
    if f0 == f1 {
        return Err(FeasibilityError::NoSignChange);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let len = inside.dist(outside);
    while (hi - lo) * len > tol {
        let mid = 0.5 * (lo + hi);
        if classify(at(mid), params, opts)?.is_feasible() == f0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (cin, cout) = if f0 { (at(lo), at(hi)) } else { (at(hi), at(lo)) };
    // the certificate comes from the explicit pair, which resolves the
    // defect far better than the stiff scheme at equal cost
    let sol = solve_profile(cin, params, &opts.cfg, Method::Rk45).map_err(|f| match f {
        ProfileFailure::Solver(e) => FeasibilityError::IntegratorFailure(e),
        _ => FeasibilityError::NoSignChange,
    })?;
    let [u1, e1] = sol.endpoint();
    let min_u = sol.trajectory.ys.iter().map(|y| y[0]).fold(f64::INFINITY, f64::min);
    let min_e = sol.trajectory.ys.iter().map(|y| y[1]).fold(f64::INFINITY, f64::min);
    Ok(BoundaryPoint { c: cin, c_outside: cout, u1, e1, min_u, min_e })
}

/// Traces up to `count` boundary points on rays from `c*` towards the square
/// of half-width `radius`, trying `4 * count` evenly spaced directions.
pub fn trace_boundary_rays(
    params: &GasParams,
    opts: &ClassifyOptions,
    count: usize,
    radius: f64,
    tol: f64,
) -> Vec<BoundaryPoint> {
    let center = constant_constants(params);
    let tries = 4 * count.max(1);
    let found: Vec<Option<BoundaryPoint>> = (0..tries)
        .into_par_iter()
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / tries as f64;
            let (s, c) = th.sin_cos();
            let scale = radius / s.abs().max(c.abs());
            let outside = center.offset(scale * c, scale * s);
            trace_boundary(center, outside, params, opts, tol).ok()
        })
        .collect();
    found.into_iter().flatten().take(count).collect()
}
