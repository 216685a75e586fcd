//! Studies on truncated local-model shocks: two steady solutions with the
//! same boundary data, small-eigenvalue scans near the origin, and the
//! standing-shock limit of `D(0)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interval::{backward_shooting_with, local_evans, shoot_config, truncate, IntervalProfile};
use super::profile::WholeLineProfile;
use super::{newton2, LocalError};
use crate::contours::{winding, ContourError, ContourSpec, ContourTrace, WindingReport};
use crate::spectral::{evans, Background, EvansConfig, EvansError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NullclineConfig {
    pub xl: f64,
    pub xr: f64,
    /// Step in `c2` while marching along `M1 = 0`.
    pub c2_step: f64,
    /// Steps taken on each side of the reference constants.
    pub max_steps: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Samples used for the separation metric.
    pub samples: usize,
}

impl Default for NullclineConfig {
    fn default() -> Self {
        Self { xl: -33.17, xr: 2.9, c2_step: 2.5e-3, max_steps: 200, rtol: 1e-12, atol: 1e-13, samples: 4001 }
    }
}

impl NullclineConfig {
    fn validate(&self) -> Result<(), LocalError> {
        let ok = self.xl < self.xr
            && self.c2_step > 0.0
            && self.max_steps > 0
            && self.rtol > 0.0
            && self.atol > 0.0
            && self.samples >= 2;
        ok.then_some(()).ok_or(LocalError::Invalid("nullcline configuration"))
    }
}

/// `max |a − b| / TV(a)` for one profile component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Separation {
    pub max_difference: f64,
    pub total_variation: [f64; 2],
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NullclineReport {
    pub reference: [f64; 2],
    /// Left data `(u_L*, T_L*)` of the reference profile.
    pub target: [f64; 2],
    /// Every refined root of `(M1, M2)`, in order along the `M1 = 0` curve.
    pub intersections: Vec<[f64; 2]>,
    /// `(c1, c2, M2)` along the traced `M1 = 0` curve.
    pub curve: Vec<[f64; 3]>,
    /// The reference root and the nearest other root.
    pub pair: [[f64; 2]; 2],
    /// Signs of `D(0)` for the two profiles of `pair`.
    pub d0_signs: [i8; 2],
    pub separation_u: Separation,
    /// Temperature is the component with total variation of order one; the
    /// headline metric.
    pub separation_t: Separation,
}

/// `(M1, M2)` at `c`: left data of the backward shot minus the target.
fn m_map(iv: &IntervalProfile, c: [f64; 2], cfg: &NullclineConfig) -> Option<[f64; 2]> {
    let l = backward_shooting_with(iv, c, &shoot_config(cfg.rtol, cfg.atol)).ok()?;
    Some([l[0] - iv.left[0], l[1] - iv.left[1]])
}

/// `c1` with `M1(c1, c2) = 0`, by secant from `guess`.
fn solve_m1(iv: &IntervalProfile, c2: f64, guess: f64, cfg: &NullclineConfig) -> Option<(f64, f64)> {
    let scale = 1.0 + iv.left[0].abs();
    let f = |c1: f64| m_map(iv, [c1, c2], cfg);
    let mut a = guess;
    let mut fa = f(a)?;
    let mut b = a + 1e-7 * (1.0 + a.abs());
    for _ in 0..50 {
        let fb = f(b)?;
        if fb[0].abs() <= 1e-12 * scale {
            return Some((b, fb[1]));
        }
        if fb[0] == fa[0] {
            return None;
        }
        let next = b - fb[0] * (b - a) / (fb[0] - fa[0]);
        (a, fa, b) = (b, fb, next);
    }
    None
}

fn separation(a: &[[f64; 3]], b: &[[f64; 3]], k: usize) -> Separation {
    let max_difference = a.iter().zip(b).map(|(p, q)| (p[k] - q[k]).abs()).fold(0.0, f64::max);
    let tv = |s: &[[f64; 3]]| s.windows(2).map(|w| (w[1][k] - w[0][k]).abs()).sum::<f64>();
    let total_variation = [tv(a), tv(b)];
    Separation { max_difference, total_variation, ratio: max_difference / total_variation[0] }
}

/// Two distinct steady solutions with the same boundary data, found as
/// intersections of the zero sets of `M1`, `M2`.
///
/// The `M1 = 0` curve is traced by marching in `c2` (it is a graph over
/// `c2` since `∂M1/∂c1` dominates), sign changes of `M2` along it are
/// bracketed, and each is polished by Newton on `(M1, M2)`.
pub fn nullcline_nonuniqueness(
    profile: &WholeLineProfile,
    cfg: &NullclineConfig,
    evans_cfg: &EvansConfig,
) -> Result<NullclineReport, LocalError> {
    cfg.validate()?;
    let iv = truncate(profile, cfg.xl, cfg.xr)?;
    let reference = [iv.c1, iv.c2];

    let march = |dir: f64| -> Vec<[f64; 3]> {
        let mut pts = vec![[reference[0], reference[1], 0.0]];
        for k in 1..=cfg.max_steps {
            let c2 = reference[1] + dir * cfg.c2_step * k as f64;
            let n = pts.len();
            let guess = if n >= 2 { 2.0 * pts[n - 1][0] - pts[n - 2][0] } else { pts[0][0] };
            match solve_m1(&iv, c2, guess, cfg) {
                Some((c1, m2)) => pts.push([c1, c2, m2]),
                None => break,
            }
        }
        pts
    };
    let (down, up) = rayon::join(|| march(-1.0), || march(1.0));
    let mut curve: Vec<[f64; 3]> = down.into_iter().rev().collect();
    curve.extend(up.into_iter().skip(1));

    let scale = [1.0 + iv.left[0].abs(), 1.0 + iv.left[1].abs()];
    let residual = |c: [f64; 2]| m_map(&iv, c, cfg).map(|m| [m[0] / scale[0], m[1] / scale[1]]);
    let mut intersections: Vec<[f64; 2]> = Vec::new();
    for w in curve.windows(2) {
        let (p, q) = (w[0], w[1]);
        let root = if p[2] == 0.0 {
            Some([p[0], p[1]])
        } else if p[2] * q[2] < 0.0 {
            let t = p[2] / (p[2] - q[2]);
            let seed = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            newton2(residual, seed, 1e-13, 30)
        } else {
            None
        };
        if let Some(r) = root {
            let tol = 0.25 * cfg.c2_step;
            if !intersections.iter().any(|s| (s[0] - r[0]).abs() < tol && (s[1] - r[1]).abs() < tol) {
                intersections.push(r);
            }
        }
    }
    if intersections.len() < 2 {
        return Err(LocalError::FewerThanTwoIntersections { found: intersections.len() });
    }

    let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let hat = *intersections
        .iter()
        .min_by(|a, b| dist(**a, reference).total_cmp(&dist(**b, reference)))
        .expect("nonempty");
    let tilde = *intersections
        .iter()
        .filter(|r| dist(**r, hat) > 0.0)
        .min_by(|a, b| dist(**a, hat).total_cmp(&dist(**b, hat)))
        .expect("two roots");

    let icfg = shoot_config(cfg.rtol, cfg.atol);
    let shoot = |c: [f64; 2]| IntervalProfile::shoot_with(iv.xl, iv.xr, iv.right, iv.m, c, &iv.params, &icfg);
    let (ph, pt) = (shoot(hat)?, shoot(tilde)?);
    let (sh, st) = (ph.sample(cfg.samples), pt.sample(cfg.samples));
    let d0 = |p: &IntervalProfile| local_evans(p, Complex64::new(0.0, 0.0), evans_cfg).map(|v| v.sign());
    Ok(NullclineReport {
        reference,
        target: iv.left,
        intersections,
        curve,
        pair: [hat, tilde],
        d0_signs: [d0(&ph)?, d0(&pt)?],
        separation_u: separation(&sh, &st, 1),
        separation_t: separation(&sh, &st, 2),
    })
}

/// `(c1, c2, M1, M2)` on an `n1 × n2` grid; cells whose shot fails carry NaN.
pub fn nullcline_grid(
    profile: &WholeLineProfile,
    cfg: &NullclineConfig,
    c1_range: [f64; 2],
    c2_range: [f64; 2],
    n: [usize; 2],
) -> Result<Vec<[f64; 4]>, LocalError> {
    cfg.validate()?;
    if n[0] < 2 || n[1] < 2 {
        return Err(LocalError::Invalid("grid needs at least two points per axis"));
    }
    let iv = truncate(profile, cfg.xl, cfg.xr)?;
    let at = |r: [f64; 2], i: usize, k: usize| r[0] + (r[1] - r[0]) * i as f64 / (k - 1) as f64;
    Ok((0..n[0] * n[1])
        .into_par_iter()
        .map(|idx| {
            let c = [at(c1_range, idx / n[1], n[0]), at(c2_range, idx % n[1], n[1])];
            let m = m_map(&iv, c, cfg).unwrap_or([f64::NAN; 2]);
            [c[0], c[1], m[0], m[1]]
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HopfConfig {
    pub radius: f64,
    /// Log-spaced real samples on `[real_min, radius]`.
    pub real_samples: usize,
    pub real_min: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for HopfConfig {
    fn default() -> Self {
        Self { radius: 1e-3, real_samples: 200, real_min: 1e-8, rtol: 1e-12, atol: 1e-14 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HopfReport {
    pub d0_sign: i8,
    /// `(λ, sign D(λ))` on the real segment.
    pub real_samples: Vec<(f64, i8)>,
    pub real_axis_zero_free: bool,
    /// Radius actually used (after any retry off an on-contour zero).
    pub radius: f64,
    pub winding: WindingReport,
    pub trace: ContourTrace,
}

/// Real-axis sign scan and winding number on the boundary of the small
/// right half-disc. The Wronskian is taken at `x = 0`, clamped into the
/// background's span.
pub fn hopf_scan(bg: &dyn Background, cfg: &HopfConfig) -> Result<HopfReport, LocalError> {
    if !(cfg.radius > 0.0 && cfg.real_min > 0.0 && cfg.real_min < cfg.radius && cfg.real_samples >= 2) {
        return Err(LocalError::Invalid("hopf configuration"));
    }
    let (xl, xr) = bg.span();
    let ecfg = EvansConfig { rtol: cfg.rtol, atol: cfg.atol, matching: Some(0f64.clamp(xl, xr)), ..EvansConfig::default() };
    let eval = |l: Complex64| -> Result<Complex64, EvansError> { evans(bg, l, &ecfg).map(|v| v.log) };
    let d0_sign = evans(bg, Complex64::new(0.0, 0.0), &ecfg)?.sign();
    let (a, b) = (cfg.real_min.ln(), cfg.radius.ln());
    let n = cfg.real_samples;
    let real_samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let l = (a + (b - a) * i as f64 / (n - 1) as f64).exp();
            evans(bg, Complex64::new(l, 0.0), &ecfg).map(|v| (l, v.sign()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let real_axis_zero_free = real_samples.iter().all(|s| s.1 == d0_sign && s.1 != 0);

    let mut last = None;
    for r in [cfg.radius, 1.1 * cfg.radius, 0.9 * cfg.radius] {
        match winding(&ContourSpec::semicircle(r).with_symmetry(true), eval) {
            Ok((trace, winding)) => {
                return Ok(HopfReport { d0_sign, real_samples, real_axis_zero_free, radius: r, winding, trace });
            }
            Err(e @ ContourError::OnContourZero { .. }) => last = Some(e),
            Err(e) => return Err(e.into()),
        }
    }
    Err(last.expect("three attempts").into())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StandingShockRow {
    pub eps: f64,
    /// `[x_L, x_R] = [−1/(2ε), 1/(2ε)]` in profile coordinates.
    pub xl: f64,
    pub xr: f64,
    /// `ln |D^ε(0)|` on the unit interval with viscosities scaled by `ε`.
    pub log_abs_d0: f64,
    pub sign: i8,
}

impl StandingShockRow {
    pub fn d0(&self) -> f64 {
        self.sign as f64 * self.log_abs_d0.exp()
    }
}

/// `D^ε(0)` of the piece `[−1/(2ε), 1/(2ε)]` of a steady solution, read on
/// the unit interval. Rescaling `y = εx` maps the piece to a unit-interval
/// steady solution with viscosity and conductivity multiplied by `ε`; the
/// two unit-slope solutions pick up a factor `ε` each, so
/// `D^ε(0) = ε² D(0)`.
pub fn standing_shock_experiment<F>(
    piece: F,
    eps: &[f64],
    cfg: &EvansConfig,
) -> Result<Vec<StandingShockRow>, LocalError>
where
    F: Fn(f64, f64) -> Result<IntervalProfile, LocalError> + Sync,
{
    if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(LocalError::Invalid("ε must be positive"));
    }
    eps.par_iter()
        .map(|&e| {
            let (xl, xr) = (-0.5 / e, 0.5 / e);
            let iv = piece(xl, xr)?;
            let v = local_evans(&iv, Complex64::new(0.0, 0.0), cfg)?;
            Ok(StandingShockRow { eps: e, xl, xr, log_abs_d0: v.log.re + 2.0 * e.ln(), sign: v.sign() })
        })
        .collect()
}

/// [`standing_shock_experiment`] on pieces of a whole-line profile.
pub fn standing_shock_for(
    profile: &WholeLineProfile,
    eps: &[f64],
    cfg: &EvansConfig,
) -> Result<Vec<StandingShockRow>, LocalError> {
    standing_shock_experiment(|xl, xr| truncate(profile, xl, xr), eps, cfg)
}
