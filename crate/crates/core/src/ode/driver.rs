use super::{
    all_finite, EventHit, EventSpec, IntegratorConfig, OdeError, Segment, Stats, Termination,
    Trajectory,
};
use crate::scalar::Real;

pub(super) enum Attempt<T> {
    Done { y1: Vec<T>, err: T, seg: Segment<T> },
    /// A stage produced non-finite values.
    NonFinite,
    /// The implicit solve did not converge.
    Newton,
}

pub(super) trait Scheme<T: Real> {
    /// Order of the error estimator plus one.
    fn err_order(&self) -> T;
    fn attempt(&mut self, x: T, y: &[T], h: T) -> Attempt<T>;
    fn accepted(&mut self);
    /// The state was changed from outside after an accepted step; cached
    /// slopes must be recomputed. Returns `false` on a non-finite slope.
    fn restart(&mut self, x: T, y: &[T]) -> bool;
    fn rhs_evals(&self) -> usize;
}

/// Called after every accepted step with the step count, `x` and a mutable
/// state; returns `true` when it modified the state.
pub type StepHook<'a, T> = &'a mut dyn FnMut(usize, T, &mut [T]) -> bool;

const SAFETY: f64 = 0.9;
const GROW_MAX: f64 = 5.0;
const SHRINK_MIN: f64 = 0.2;
const PI_BETA: f64 = 0.04;
const EVENT_REL_WIDTH: f64 = 1e-12;

pub(super) fn run<T: Real, S: Scheme<T>>(
    scheme: &mut S,
    a: T,
    b: T,
    y0: &[T],
    cfg: &IntegratorConfig<T>,
    events: &[EventSpec<'_, T>],
    mut hook: Option<StepHook<'_, T>>,
) -> Result<Trajectory<T>, OdeError> {
    cfg.validate()?;
    if a == b {
        return Err(OdeError::EmptySpan);
    }
    if !all_finite(y0) {
        return Err(OdeError::NonFiniteRhs { x: a.to_f64_lossy() });
    }
    let dir = if b > a { T::one() } else { -T::one() };
    let span = (b - a).abs();
    let event_tol = T::lit(EVENT_REL_WIDTH) * span;
    let mut x = a;
    let mut y = y0.to_vec();
    let mut h = cfg.h_init.min(span) * dir;
    let mut traj = Trajectory {
        xs: vec![a],
        ys: vec![y.clone()],
        segments: Vec::new(),
        events: Vec::new(),
        termination: Termination::ReachedEnd,
        stats: Stats::default(),
    };
    let mut g_prev: Vec<T> = events.iter().map(|e| e.eval(x, &y)).collect();
    let mut err_old = T::lit(1e-4);
    let mut newton_only = false;
    let mut last_rejected = false;
    let expo = T::one() / scheme.err_order();
    let beta = T::lit(PI_BETA);
    let alpha = expo - T::lit(0.75) * beta;

    let termination = loop {
        if traj.stats.accepted + traj.stats.rejected >= cfg.max_steps {
            traj.stats.rhs_evals = scheme.rhs_evals();
            return Err(OdeError::MaxSteps { x: x.to_f64_lossy() });
        }
        let tiny = T::lit(4.0) * T::epsilon() * x.abs();
        if h.abs() < cfg.h_min || h.abs() <= tiny {
            if newton_only {
                traj.stats.rhs_evals = scheme.rhs_evals();
                return Err(OdeError::NewtonDivergence { x: x.to_f64_lossy() });
            }
            break Termination::MinStep { x };
        }
        let mut hit_end = false;
        if ((x + h) - b) * dir >= T::zero() {
            h = b - x;
            hit_end = true;
        }
        let (y1, err, seg) = match scheme.attempt(x, &y, h) {
            Attempt::Done { y1, err, seg } => (y1, err, seg),
            Attempt::NonFinite => {
                traj.stats.rejected += 1;
                newton_only = false;
                h = h * T::lit(0.25);
                last_rejected = true;
                continue;
            }
            Attempt::Newton => {
                traj.stats.rejected += 1;
                newton_only = true;
                h = h * T::lit(0.25);
                last_rejected = true;
                continue;
            }
        };
        if !(err <= T::one()) {
            traj.stats.rejected += 1;
            newton_only = false;
            let fac = if err.is_finite() {
                (T::lit(SAFETY) * err.powf(-expo)).max(T::lit(SHRINK_MIN)).min(T::one())
            } else {
                T::lit(SHRINK_MIN)
            };
            h = h * fac;
            last_rejected = true;
            continue;
        }
        newton_only = false;
        scheme.accepted();
        traj.stats.accepted += 1;
        let x1 = if hit_end { b } else { x + h };

        // events: earliest crossing inside this step wins
        let mut found: Vec<(usize, T)> = Vec::new();
        let mut g_new: Vec<T> = Vec::with_capacity(events.len());
        for (k, ev) in events.iter().enumerate() {
            let g1 = ev.eval(x1, &y1);
            g_new.push(g1);
            if ev.direction.matches(g_prev[k], g1) {
                let xs = locate(ev, &seg, x, x1, g_prev[k], &y, &y1, event_tol);
                found.push((k, xs));
            }
        }
        found.sort_by(|p, q| {
            ((p.1 - x) * dir)
                .partial_cmp(&((q.1 - x) * dir))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(p.0.cmp(&q.0))
        });
        let mut stop: Option<(usize, T)> = None;
        for &(k, xe) in &found {
            if let Some((_, xt)) = stop {
                if (xe - xt) * dir > T::zero() {
                    break;
                }
            }
            let ye = interp(&seg, xe, &y, &y1);
            traj.events.push(EventHit { which: k, x: xe, y: ye });
            if events[k].terminal && stop.is_none() {
                stop = Some((k, xe));
            }
        }
        if let Some((k, xe)) = stop {
            let ye = interp(&seg, xe, &y, &y1);
            if xe != x {
                traj.xs.push(xe);
                traj.ys.push(ye);
                traj.segments.push(seg);
            }
            break Termination::Event { which: k, x: xe };
        }

        let mut y1 = y1;
        if let Some(hook) = hook.as_mut() {
            if hook(traj.stats.accepted, x1, &mut y1) {
                if !scheme.restart(x1, &y1) {
                    traj.stats.rhs_evals = scheme.rhs_evals();
                    return Err(OdeError::NonFiniteRhs { x: x1.to_f64_lossy() });
                }
                g_new = events.iter().map(|e| e.eval(x1, &y1)).collect();
            }
        }
        traj.xs.push(x1);
        traj.ys.push(y1.clone());
        traj.segments.push(seg);
        x = x1;
        y = y1;
        g_prev = g_new;

        if y.iter().any(|v| v.abs() > cfg.blowup_threshold) {
            break Termination::Blowup { x };
        }
        if hit_end {
            break Termination::ReachedEnd;
        }

        // PI controller, growth clamped to [0.2, 5]
        let e = err.max(T::lit(1e-10));
        let mut fac = T::lit(SAFETY) * e.powf(-alpha) * err_old.powf(beta);
        fac = fac.max(T::lit(SHRINK_MIN)).min(T::lit(GROW_MAX));
        if last_rejected {
            fac = fac.min(T::one());
        }
        last_rejected = false;
        err_old = e.max(T::lit(1e-4));
        h = h * fac;
        if h.abs() > cfg.h_max {
            h = cfg.h_max * dir;
        }
    };
    traj.termination = termination;
    traj.stats.rhs_evals = scheme.rhs_evals();
    Ok(traj)
}

fn interp<T: Real>(seg: &Segment<T>, x: T, y0: &[T], y1: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); y0.len()];
    seg.eval_into(x, y0, y1, &mut out);
    out
}

/// Bisection on the dense output until the bracket is narrower than `tol`.
#[allow(clippy::too_many_arguments)]
fn locate<T: Real>(
    ev: &EventSpec<'_, T>,
    seg: &Segment<T>,
    x0: T,
    x1: T,
    g0: T,
    y0: &[T],
    y1: &[T],
    tol: T,
) -> T {
    let mut lo = x0;
    let mut hi = x1;
    let mut glo = g0;
    let mut buf = vec![T::zero(); y0.len()];
    let two = T::lit(2.0);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = (lo + hi) / two;
        seg.eval_into(mid, y0, y1, &mut buf);
        let gm = ev.eval(mid, &buf);
        if (glo > T::zero()) == (gm > T::zero()) && gm != T::zero() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    hi
}
