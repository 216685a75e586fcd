use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frame::drury;
use super::{trace, Background};
use crate::ode::{integrate_rk45, IntegratorConfig, OdeError};
use crate::polytropic::ProfileSolution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvansError {
    #[error("frame lost orthonormality (drift {drift:e})")]
    FrameDegeneracy { drift: f64 },
    #[error("D(0) vanishes to working precision")]
    ZeroD0,
    #[error("sign of D(λ) did not settle for large real λ")]
    NoLimit,
    #[error("integrator failure: {0}")]
    Solver(#[from] OdeError),
}

/// Which multiple of the Evans function a value is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Wronskian at the matching point carried to the right end by Abel's
    /// formula: the determinant of the `(u, θ)` block at `x_right` of the
    /// solutions launched from the left boundary.
    Abel,
    /// Two-sided Wronskian at the matching point, radial factors included.
    TwoSided,
    /// Orthonormal-frame determinant only; adequate for winding numbers.
    WindingOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvansConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Matching point; `None` means the midpoint of the background's span.
    pub matching: Option<f64>,
    pub normalization: Normalization,
}

impl Default for EvansConfig {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, matching: None, normalization: Normalization::Abel }
    }
}

impl EvansConfig {
    fn integrator(&self) -> IntegratorConfig {
        let mut c = IntegratorConfig::default().with_tolerances(self.rtol, self.atol);
        c.h_init = 1e-4;
        c
    }
}

/// An Evans function value kept in log form, since radial factors overflow
/// doubles on long intervals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvansValue {
    pub lambda: Complex64,
    /// Natural log of the value (branch irrelevant; `exp` is what matters).
    pub log: Complex64,
    pub normalization: Normalization,
    pub matching: f64,
    /// `|det [Q_left Q_right]|` of the orthonormal frames: how far the two
    /// subspaces are from intersecting, independent of normalization.
    pub frame_det: f64,
    pub max_drift: f64,
}

impl EvansValue {
    pub fn value(&self) -> Complex64 {
        self.log.exp()
    }

    /// Sign of the real part, via the phase so that huge magnitudes are fine.
    pub fn sign(&self) -> i8 {
        let c = self.log.im.cos();
        if c > 0.0 {
            1
        } else if c < 0.0 {
            -1
        } else {
            0
        }
    }

    /// `|Im D| / |D|`.
    pub fn imag_ratio(&self) -> f64 {
        self.log.im.sin().abs()
    }

    pub fn negated(mut self) -> Self {
        self.log += Complex64::new(0.0, std::f64::consts::PI);
        self
    }
}

const LEFT_KERNEL: [[f64; 5]; 2] = [[0.0, 0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0, 1.0]];
const RIGHT_KERNEL: [[f64; 5]; 3] =
    [[1.0, 0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0, 1.0]];

/// Determinant of a 5 × 5 complex matrix given by columns, in log form.
fn log_det(cols: &[[Complex64; 5]]) -> Complex64 {
    let mut m: Vec<[Complex64; 5]> = (0..5).map(|i| std::array::from_fn(|j| cols[j][i])).collect();
    let mut log = Complex64::new(0.0, 0.0);
    for k in 0..5 {
        let p = (k..5).max_by(|&a, &b| m[a][k].norm().total_cmp(&m[b][k].norm())).unwrap();
        if m[p][k].norm() == 0.0 {
            return Complex64::new(f64::NEG_INFINITY, 0.0);
        }
        if p != k {
            m.swap(p, k);
            log += Complex64::new(0.0, std::f64::consts::PI);
        }
        let piv = m[k][k];
        log += piv.ln();
        for i in k + 1..5 {
            let f = m[i][k] / piv;
            for j in k..5 {
                let v = m[k][j];
                m[i][j] -= f * v;
            }
        }
    }
    log
}

/// `∫_{a}^{b} tr A(x; λ) dx`.
fn trace_integral(bg: &dyn Background, lambda: Complex64, a: f64, b: f64, cfg: &IntegratorConfig) -> Result<Complex64, OdeError> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let f = |x: f64, _y: &[f64], dy: &mut [f64]| {
        let t = trace(bg, x, lambda);
        dy[0] = t.re;
        dy[1] = t.im;
    };
    let traj = integrate_rk45(f, a, b, &[0.0, 0.0], cfg, &[])?;
    let y = traj.last();
    Ok(Complex64::new(y[0], y[1]))
}

/// Evans function by two-sided shooting with continuous orthogonalization.
///
/// Left frame: the boundary kernel `{e4, e5}` (ρ = u = θ = 0) at `x_left`;
/// right frame: `{e1, e4, e5}` (u = θ = 0) at `x_right`; both carried to
/// the matching point.
pub fn evans(bg: &dyn Background, lambda: Complex64, cfg: &EvansConfig) -> Result<EvansValue, EvansError> {
    let (xl, xr) = bg.span();
    let xm = cfg.matching.unwrap_or(0.5 * (xl + xr));
    let icfg = cfg.integrator();
    let left = drury(bg, lambda, &LEFT_KERNEL, xl, xm, &icfg)?;
    let right = drury(bg, lambda, &RIGHT_KERNEL, xr, xm, &icfg)?;
    let cols: Vec<[Complex64; 5]> = left.q.iter().chain(right.q.iter()).copied().collect();
    let ld = log_det(&cols);
    let mut log = ld;
    match cfg.normalization {
        Normalization::WindingOnly => {}
        Normalization::TwoSided => log += left.log_radial + right.log_radial,
        Normalization::Abel => {
            log += left.log_radial + right.log_radial + trace_integral(bg, lambda, xm, xr, &icfg)?;
        }
    }
    Ok(EvansValue {
        lambda,
        log,
        normalization: cfg.normalization,
        matching: xm,
        frame_det: ld.re.exp(),
        max_drift: left.max_drift.max(right.max_drift),
    })
}

/// `D(0)` from the zero-frequency system: the variations of the profile
/// launched with unit initial slopes `(u', e')(0) = (1, 0)` and `(0, 1)`,
/// combined into the endpoint determinant.
pub fn d0_direct(profile: &ProfileSolution, cfg: &IntegratorConfig) -> Result<f64, EvansError> {
    let p = profile.params;
    let (ka, kn) = (p.u0 / p.alpha, p.u0 / p.nu);
    // constant variations giving the two unit initial slopes
    let seeds = [(p.alpha / p.u0, p.alpha), (0.0, p.nu / p.u0)];
    let mut ends = [[0.0; 2]; 2];
    for (k, &(d1, d2)) in seeds.iter().enumerate() {
        let f = |x: f64, y: &[f64], dy: &mut [f64]| {
            let [uh, eh, duh, _] = profile.with_slopes(x);
            let (u, e) = (y[0], y[1]);
            dy[0] = ka * (d1 + (1.0 - p.gamma * eh / (uh * uh)) * u + p.gamma / uh * e);
            dy[1] = kn * (d2 - d1 * uh - duh / ka * u + e + p.gamma * eh / uh * u);
        };
        let mut c = *cfg;
        c.h_max = c.h_max.min(1.0 / 200.0);
        let traj = integrate_rk45(f, 0.0, 1.0, &[0.0, 0.0], &c, &[])?;
        ends[k] = [traj.last()[0], traj.last()[1]];
    }
    Ok(ends[0][0] * ends[1][1] - ends[1][0] * ends[0][1])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityIndex {
    /// `+1`: even number of positive real roots; `−1`: odd.
    pub mu: i8,
    pub sign_d0: i8,
    pub sign_infinity: i8,
    /// `(λ, sign D(λ))` for every large-λ sample used.
    pub samples: Vec<(f64, i8)>,
}

const LAMBDA0: f64 = 10.0;
const MAX_DOUBLINGS: u32 = 12;
const SETTLE: usize = 3;
const ZERO_D0: f64 = 1e-12;

/// `μ = sgn D(0) · lim sgn D(λ)` as `λ → +∞` along the reals.
pub fn stability_index(bg: &dyn Background, cfg: &EvansConfig) -> Result<StabilityIndex, EvansError> {
    stability_index_with(|l| evans(bg, Complex64::new(l, 0.0), cfg))
}

/// [`stability_index`] for any evaluator of `D` on the real line.
pub fn stability_index_with<F>(mut d: F) -> Result<StabilityIndex, EvansError>
where
    F: FnMut(f64) -> Result<EvansValue, EvansError>,
{
    let d0 = d(0.0)?;
    if d0.frame_det < ZERO_D0 || d0.sign() == 0 {
        return Err(EvansError::ZeroD0);
    }
    let mut samples = Vec::new();
    for k in 0..=MAX_DOUBLINGS {
        let l = LAMBDA0 * 2f64.powi(k as i32);
        samples.push((l, d(l)?.sign()));
        if samples.len() >= SETTLE {
            let tail = &samples[samples.len() - SETTLE..];
            if tail.iter().all(|s| s.1 == tail[0].1 && s.1 != 0) {
                let s = tail[0].1;
                return Ok(StabilityIndex { mu: d0.sign() * s, sign_d0: d0.sign(), sign_infinity: s, samples });
            }
        }
    }
    Err(EvansError::NoLimit)
}
