//! Continuous orthogonalization of a solution frame.
//!
//! An orthonormal frame `Q` (5 × k) follows `Q' = (I − QQ*) A Q`, which keeps
//! its span equal to that of the true solutions while discarding growth. The
//! growth goes to the radial factor `γ' = tr(Q* A Q)`, so that
//! `exp(γ) · (Q₁ ∧ … ∧ Q_k)` is the wedge of the true solutions.

use num_complex::Complex64;

use super::{assemble, Background, CMat5};
use crate::ode::{integrate_rk45_hooked, IntegratorConfig};

use super::evans::EvansError;

/// Re-orthonormalize at least this often (accepted steps).
const REORTH_EVERY: usize = 20;
/// ... and whenever `‖Q*Q − I‖` exceeds this.
const REORTH_DRIFT: f64 = 1e-10;
/// Drift beyond this means the frame lost rank between checks.
const DEGENERATE_DRIFT: f64 = 1e-6;
const RETRIES: usize = 2;

#[derive(Clone, Debug)]
pub struct FrameResult {
    /// Columns of the final orthonormal frame.
    pub q: Vec<[Complex64; 5]>,
    /// Accumulated `∫ tr(Q* A Q)` plus the log-determinants of the
    /// re-orthonormalizations.
    pub log_radial: Complex64,
    /// Largest `max |Q*Q − I|` seen before any re-orthonormalization.
    pub max_drift: f64,
    pub reorthonormalizations: usize,
    pub steps: usize,
}

fn unpack(y: &[f64], k: usize) -> Vec<[Complex64; 5]> {
    (0..k)
        .map(|j| std::array::from_fn(|i| Complex64::new(y[2 * (5 * j + i)], y[2 * (5 * j + i) + 1])))
        .collect()
}

fn pack(q: &[[Complex64; 5]], y: &mut [f64]) {
    for (j, col) in q.iter().enumerate() {
        for i in 0..5 {
            y[2 * (5 * j + i)] = col[i].re;
            y[2 * (5 * j + i) + 1] = col[i].im;
        }
    }
}

fn dot(a: &[Complex64; 5], b: &[Complex64; 5]) -> Complex64 {
    (0..5).map(|i| a[i].conj() * b[i]).sum()
}

/// `max |Q*Q − I|` over entries.
pub(crate) fn drift(q: &[[Complex64; 5]]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..q.len() {
        for j in 0..q.len() {
            let g = dot(&q[i], &q[j]) - if i == j { 1.0 } else { 0.0 };
            worst = worst.max(g.norm());
        }
    }
    worst
}

/// Modified Gram–Schmidt in place; returns `ln det R`.
pub(crate) fn mgs(q: &mut [[Complex64; 5]]) -> f64 {
    let mut logdet = 0.0;
    for j in 0..q.len() {
        for i in 0..j {
            let r = dot(&q[i], &q[j]);
            let qi = q[i];
            for (v, w) in q[j].iter_mut().zip(qi.iter()) {
                *v -= r * w;
            }
        }
        let n = q[j].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for v in q[j].iter_mut() {
            *v /= n;
        }
        logdet += n.ln();
    }
    logdet
}

fn frame_rhs(a: &CMat5, q: &[[Complex64; 5]], dq: &mut [[Complex64; 5]]) -> Complex64 {
    let k = q.len();
    let aq: Vec<[Complex64; 5]> = q
        .iter()
        .map(|col| std::array::from_fn(|i| (0..5).map(|l| a[i][l] * col[l]).sum()))
        .collect();
    let mut tr = Complex64::new(0.0, 0.0);
    for j in 0..k {
        dq[j] = aq[j];
        for i in 0..k {
            let mij = dot(&q[i], &aq[j]);
            if i == j {
                tr += mij;
            }
            for l in 0..5 {
                dq[j][l] -= q[i][l] * mij;
            }
        }
    }
    tr
}

/// Carries the frame spanned by `init` (orthonormal columns) from `x0` to `x1`.
pub fn drury(
    bg: &dyn Background,
    lambda: Complex64,
    init: &[[f64; 5]],
    x0: f64,
    x1: f64,
    cfg: &IntegratorConfig,
) -> Result<FrameResult, EvansError> {
    let mut cfg = *cfg;
    let mut last_drift = 0.0;
    for _ in 0..=RETRIES {
        match drury_once(bg, lambda, init, x0, x1, &cfg)? {
            Ok(r) => return Ok(r),
            Err(d) => last_drift = d,
        }
        cfg = cfg.with_tolerances(cfg.rtol * 0.1, cfg.atol * 0.1);
        cfg.h_max *= 0.5;
    }
    Err(EvansError::FrameDegeneracy { drift: last_drift })
}

fn drury_once(
    bg: &dyn Background,
    lambda: Complex64,
    init: &[[f64; 5]],
    x0: f64,
    x1: f64,
    cfg: &IntegratorConfig,
) -> Result<Result<FrameResult, f64>, EvansError> {
    let k = init.len();
    let n = 2 * 5 * k + 2;
    let mut q0: Vec<[Complex64; 5]> = init.iter().map(|c| c.map(|v| Complex64::new(v, 0.0))).collect();
    let mut log0 = mgs(&mut q0);
    if x0 == x1 {
        return Ok(Ok(FrameResult {
            q: q0,
            log_radial: Complex64::new(log0, 0.0),
            max_drift: 0.0,
            reorthonormalizations: 0,
            steps: 0,
        }));
    }
    let mut y0 = vec![0.0; n];
    pack(&q0, &mut y0);

    let rhs = |x: f64, y: &[f64], dy: &mut [f64]| {
        let q = unpack(y, k);
        let a = assemble(bg, x, lambda);
        let mut dq = vec![[Complex64::new(0.0, 0.0); 5]; k];
        let tr = frame_rhs(&a, &q, &mut dq);
        pack(&dq, dy);
        dy[n - 2] = tr.re;
        dy[n - 1] = tr.im;
    };
    let mut max_drift = 0.0f64;
    let mut reorth = 0usize;
    let mut hook = |step: usize, _x: f64, y: &mut [f64]| {
        let mut q = unpack(y, k);
        let d = drift(&q);
        max_drift = max_drift.max(d);
        if step % REORTH_EVERY == 0 || d > REORTH_DRIFT {
            y[n - 2] += mgs(&mut q);
            pack(&q, y);
            reorth += 1;
            true
        } else {
            false
        }
    };
    let traj = integrate_rk45_hooked(rhs, x0, x1, &y0, cfg, &mut hook)?;
    if max_drift > DEGENERATE_DRIFT {
        return Ok(Err(max_drift));
    }
    let y = traj.last();
    let mut q = unpack(y, k);
    // final cleanup so the matching determinant sees an orthonormal frame
    log0 += mgs(&mut q);
    Ok(Ok(FrameResult {
        q,
        log_radial: Complex64::new(y[n - 2] + log0, y[n - 1]),
        max_drift,
        reorthonormalizations: reorth,
        steps: traj.stats.accepted,
    }))
}
