//! Adaptive sampling of an analytic function along a closed contour and the
//! winding number of its image.
//!
//! Values travel in log form (`ln D`), so only ratios of consecutive samples
//! are ever formed and huge Evans values cannot overflow.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::EvansError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContourError {
    #[error("D vanishes on the contour near λ = {lambda}; perturb the radius by ±1%")]
    OnContourZero { lambda: Complex64 },
    #[error("refinement budget of {budget} evaluations exceeded")]
    RefinementBudgetExceeded { budget: usize },
    #[error("argument jump of {jump} rad between consecutive samples")]
    AmbiguousUnwrap { jump: f64 },
    #[error("invalid contour: {0}")]
    Invalid(&'static str),
    #[error(transparent)]
    Evaluation(#[from] EvansError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContourKind {
    /// Boundary of `{|λ| ≤ R, Re λ ≥ 0}`: the right half circle, then the
    /// segment of the imaginary axis.
    Semicircle { radius: f64 },
    Circle { radius: f64, center: Complex64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourSpec {
    pub kind: ContourKind,
    /// Sample only the upper half and reflect; valid when `D(λ̄) = conj D(λ)`
    /// and the contour is symmetric about the real axis.
    pub symmetric: bool,
    pub arc_points: usize,
    pub diameter_points: usize,
    /// Largest allowed `|D_{i+1} − D_i| / max(|D_i|, |D_{i+1}|)`.
    pub max_rel_change: f64,
    pub budget: usize,
    /// `|D|` relative to its larger neighbour below which a sample counts as
    /// a zero on the contour.
    pub zero_floor: f64,
}

impl Default for ContourSpec {
    fn default() -> Self {
        Self {
            kind: ContourKind::Semicircle { radius: 100.0 },
            symmetric: false,
            arc_points: 64,
            diameter_points: 33,
            max_rel_change: 0.2,
            budget: 20_000,
            zero_floor: 1e-14,
        }
    }
}

impl ContourSpec {
    pub fn semicircle(radius: f64) -> Self {
        Self { kind: ContourKind::Semicircle { radius }, ..Default::default() }
    }

    pub fn circle(radius: f64, center: Complex64) -> Self {
        Self { kind: ContourKind::Circle { radius, center }, ..Default::default() }
    }

    pub fn with_symmetry(mut self, on: bool) -> Self {
        self.symmetric = on;
        self
    }

    pub fn validate(&self) -> Result<(), ContourError> {
        let r = match self.kind {
            ContourKind::Semicircle { radius } => radius,
            ContourKind::Circle { radius, center } => {
                if self.symmetric && center.im != 0.0 {
                    return Err(ContourError::Invalid("symmetric circle must be centred on the real axis"));
                }
                radius
            }
        };
        if !(r > 0.0 && r.is_finite()) {
            return Err(ContourError::Invalid("radius must be positive"));
        }
        if self.arc_points < 4 || self.diameter_points < 2 {
            return Err(ContourError::Invalid("initial mesh too coarse"));
        }
        if !(self.max_rel_change > 0.0 && self.max_rel_change < 1.0) {
            return Err(ContourError::Invalid("max_rel_change must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Parameter range `[0, end]` of the full contour.
    fn end(&self) -> f64 {
        match self.kind {
            ContourKind::Semicircle { .. } => 2.0,
            ContourKind::Circle { .. } => 1.0,
        }
    }

    /// Point at parameter `s`. Semicircle: `s ∈ [0, 1]` is the arc from `−iR`
    /// through `R` to `iR`, `s ∈ [1, 2]` the segment from `iR` to `−iR`.
    /// Circle: `s ∈ [0, 1]` counter-clockwise from `center + R`.
    pub fn point(&self, s: f64) -> Complex64 {
        match self.kind {
            ContourKind::Semicircle { radius } => {
                if s <= 1.0 {
                    Complex64::from_polar(radius, -FRAC_PI_2 + PI * s)
                } else {
                    Complex64::new(0.0, radius * (1.0 - 2.0 * (s - 1.0)))
                }
            }
            ContourKind::Circle { radius, center } => center + Complex64::from_polar(radius, 2.0 * PI * s),
        }
    }

    /// Initial parameters covering the sampled part of the contour, endpoints included.
    fn initial_mesh(&self) -> Vec<f64> {
        let lin = |a: f64, b: f64, n: usize| (0..n).map(move |k| a + (b - a) * k as f64 / (n - 1) as f64);
        match (self.kind, self.symmetric) {
            (ContourKind::Semicircle { .. }, false) => {
                let mut v: Vec<f64> = lin(0.0, 1.0, self.arc_points).collect();
                v.extend(lin(1.0, 2.0, self.diameter_points).skip(1));
                v
            }
            // upper half: from R (s = 1/2) to iR, then down to 0 (s = 3/2)
            (ContourKind::Semicircle { .. }, true) => {
                let mut v: Vec<f64> = lin(0.5, 1.0, self.arc_points / 2 + 1).collect();
                v.extend(lin(1.0, 1.5, self.diameter_points / 2 + 1).skip(1));
                v
            }
            (ContourKind::Circle { .. }, false) => lin(0.0, 1.0, self.arc_points).collect(),
            (ContourKind::Circle { .. }, true) => lin(0.0, 0.5, self.arc_points / 2 + 1).collect(),
        }
    }

    /// Maps a parameter on the sampled upper half to its mirror image.
    fn mirror(&self, s: f64) -> f64 {
        match self.kind {
            ContourKind::Semicircle { .. } => {
                if s <= 1.0 {
                    1.0 - s
                } else {
                    3.0 - s
                }
            }
            ContourKind::Circle { .. } => 1.0 - s,
        }
    }
}

/// Ordered samples of `D` around a closed contour; the last sample repeats the first.
#[derive(Clone, Debug, Serialize)]
pub struct ContourTrace {
    pub spec: ContourSpec,
    pub s: Vec<f64>,
    pub lambda: Vec<Complex64>,
    /// `ln D` at each sample.
    pub log_d: Vec<Complex64>,
    pub max_rel_change: f64,
    pub evaluations: usize,
}

impl ContourTrace {
    pub fn values(&self) -> Vec<Complex64> {
        self.log_d.iter().map(|l| l.exp()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindingReport {
    pub winding: i64,
    pub total_arg_change: f64,
    /// `|total − 2π · winding|`.
    pub closure_defect: f64,
    pub max_step: f64,
}

/// `|D₂ − D₁| / max(|D₁|, |D₂|)` from the logs.
fn rel_change(l1: Complex64, l2: Complex64) -> f64 {
    let r = (l2 - l1).exp();
    (r - 1.0).norm() / r.norm().max(1.0)
}

/// Argument of `D₂ / D₁` in `(−π, π]`.
fn arg_step(l1: Complex64, l2: Complex64) -> f64 {
    let d = l2.im - l1.im;
    d - 2.0 * PI * ((d + PI) / (2.0 * PI)).floor()
}

/// Samples `log_d(λ)` along the contour, bisecting parameter intervals until
/// every consecutive pair satisfies the relative-change rule.
pub fn adaptive_trace<F>(spec: &ContourSpec, log_d: F) -> Result<ContourTrace, ContourError>
where
    F: Fn(Complex64) -> Result<Complex64, EvansError> + Sync,
{
    spec.validate()?;
    let eval = |ss: &[f64]| -> Result<Vec<Complex64>, ContourError> {
        ss.par_iter().map(|&s| log_d(spec.point(s)).map_err(ContourError::from)).collect()
    };
    let mut s = spec.initial_mesh();
    let mut vals = eval(&s)?;
    let mut evaluations = s.len();
    // a sample far below both neighbours is a zero the mesh happened to hit;
    // the scale is local because Evans functions span many decades on a contour
    let zero_check = |vals: &[Complex64], s: &[f64]| -> Result<(), ContourError> {
        let floor = spec.zero_floor.ln();
        for i in 0..vals.len() {
            let lo = if i > 0 { vals[i - 1].re } else { f64::NEG_INFINITY };
            let hi = if i + 1 < vals.len() { vals[i + 1].re } else { f64::NEG_INFINITY };
            if !(vals[i].re > lo.max(hi) + floor) {
                return Err(ContourError::OnContourZero { lambda: spec.point(s[i]) });
            }
        }
        Ok(())
    };
    loop {
        zero_check(&vals, &s)?;
        let bad: Vec<usize> =
            (0..s.len() - 1).filter(|&i| rel_change(vals[i], vals[i + 1]) > spec.max_rel_change).collect();
        if bad.is_empty() {
            break;
        }
        if evaluations + bad.len() > spec.budget {
            return Err(ContourError::RefinementBudgetExceeded { budget: spec.budget });
        }
        let mids: Vec<f64> = bad.iter().map(|&i| 0.5 * (s[i] + s[i + 1])).collect();
        if mids.iter().zip(&bad).any(|(m, &i)| *m <= s[i] || *m >= s[i + 1]) {
            // parameter resolution exhausted: D jumps, so the contour passes through a zero
            return Err(ContourError::OnContourZero { lambda: spec.point(mids[0]) });
        }
        let new = eval(&mids)?;
        evaluations += mids.len();
        let mut ns = Vec::with_capacity(s.len() + mids.len());
        let mut nv = Vec::with_capacity(s.len() + mids.len());
        let mut k = 0;
        for i in 0..s.len() {
            ns.push(s[i]);
            nv.push(vals[i]);
            if k < bad.len() && bad[k] == i {
                ns.push(mids[k]);
                nv.push(new[k]);
                k += 1;
            }
        }
        s = ns;
        vals = nv;
    }

    // assemble the closed full-contour trace
    let (s, vals): (Vec<f64>, Vec<Complex64>) = if spec.symmetric {
        // the sampled half starts and ends on the real axis; its mirror image
        // carries the conjugate values
        let mut pairs: Vec<(f64, Complex64)> = s.iter().copied().zip(vals.iter().copied()).collect();
        pairs.extend(s.iter().zip(&vals).map(|(&t, v)| (spec.mirror(t), v.conj())));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.dedup_by(|a, b| a.0 == b.0);
        if pairs.last().unwrap().0 < spec.end() {
            let first = pairs[0].1;
            pairs.push((spec.end(), first));
        }
        pairs.into_iter().unzip()
    } else {
        // the mesh already ends on the starting point
        let mut vv = vals;
        let n = vv.len();
        vv[n - 1] = vv[0];
        (s, vv)
    };
    let mut lambda: Vec<Complex64> = s.iter().map(|&t| spec.point(t)).collect();
    // closure is exact, not up to rounding of the parametrization
    let n = lambda.len();
    lambda[n - 1] = lambda[0];
    let max_rel_change = vals.windows(2).map(|w| rel_change(w[0], w[1])).fold(0.0, f64::max);
    Ok(ContourTrace { spec: *spec, s, lambda, log_d: vals, max_rel_change, evaluations })
}

/// Winding number of the image by phase accumulation.
pub fn winding_number(trace: &ContourTrace) -> Result<WindingReport, ContourError> {
    let mut total = 0.0;
    let mut max_step = 0.0f64;
    for w in trace.log_d.windows(2) {
        let d = arg_step(w[0], w[1]);
        max_step = max_step.max(d.abs());
        total += d;
    }
    if max_step > FRAC_PI_2 {
        return Err(ContourError::AmbiguousUnwrap { jump: max_step });
    }
    let winding = (total / (2.0 * PI)).round();
    Ok(WindingReport {
        winding: winding as i64,
        total_arg_change: total,
        closure_defect: (total - 2.0 * PI * winding).abs(),
        max_step,
    })
}

/// [`adaptive_trace`] followed by [`winding_number`].
pub fn winding<F>(spec: &ContourSpec, log_d: F) -> Result<(ContourTrace, WindingReport), ContourError>
where
    F: Fn(Complex64) -> Result<Complex64, EvansError> + Sync,
{
    let trace = adaptive_trace(spec, log_d)?;
    let report = winding_number(&trace)?;
    Ok((trace, report))
}
