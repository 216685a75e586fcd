//! Adaptive one-step integrators with dense output and event location.
//!
//! Two schemes share one driver: an explicit Dormand–Prince 5(4) pair for
//! non-stiff work and TR-BDF2 for problems with fast decaying modes. Both
//! integrate forward or backward (`b < a` is allowed) and report how the run
//! ended through [`Termination`] rather than through an error, so callers can
//! use partial trajectories (the feasibility classifier depends on this).

mod dense;
mod dopri;
mod driver;
mod lu;
mod trbdf2;

use thiserror::Error;

use crate::scalar::Real;

pub use dense::Segment;
pub use dopri::{integrate_rk45, integrate_rk45_hooked};
pub use driver::StepHook;
pub use trbdf2::{integrate_stiff, JacobianFn};

pub(crate) use lu::Lu;

/// Tolerances and step limits shared by both schemes.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegratorConfig<T = f64> {
    pub rtol: T,
    pub atol: T,
    pub h_init: T,
    pub h_min: T,
    pub h_max: T,
    pub max_steps: usize,
    pub blowup_threshold: T,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-10),
            atol: T::lit(1e-12),
            h_init: T::lit(1e-6),
            h_min: T::lit(1e-14),
            h_max: T::lit(1e3),
            max_steps: 2_000_000,
            blowup_threshold: T::lit(1e8),
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    /// Same limits, different tolerances.
    pub fn with_tolerances(mut self, rtol: T, atol: T) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        let ok = self.rtol > T::zero()
            && self.atol > T::zero()
            && self.h_min > T::zero()
            && self.h_min <= self.h_init
            && self.h_init <= self.h_max
            && self.max_steps >= 1
            && self.blowup_threshold > T::zero();
        if ok {
            Ok(())
        } else {
            Err(OdeError::InvalidConfig)
        }
    }
}

/// Which zero crossings of an event functional count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Direction {
    Decreasing,
    Increasing,
    Any,
}

impl Direction {
    fn matches<T: Real>(self, g0: T, g1: T) -> bool {
        let down = g0 > T::zero() && g1 <= T::zero();
        let up = g0 < T::zero() && g1 >= T::zero();
        match self {
            Direction::Decreasing => down,
            Direction::Increasing => up,
            Direction::Any => down || up,
        }
    }
}

type EventFn<'a, T> = Box<dyn Fn(T, &[T]) -> T + Send + Sync + 'a>;

/// A scalar functional of `(x, y)` whose zero crossings are located.
pub struct EventSpec<'a, T> {
    g: EventFn<'a, T>,
    pub direction: Direction,
    pub terminal: bool,
}

impl<'a, T: Real> EventSpec<'a, T> {
    pub fn new(
        g: impl Fn(T, &[T]) -> T + Send + Sync + 'a,
        direction: Direction,
        terminal: bool,
    ) -> Self {
        Self { g: Box::new(g), direction, terminal }
    }

    /// Monitors `y[index] - level`.
    pub fn component(index: usize, level: T, direction: Direction, terminal: bool) -> Self {
        Self::new(move |_, y: &[T]| y[index] - level, direction, terminal)
    }

    pub fn eval(&self, x: T, y: &[T]) -> T {
        (self.g)(x, y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventHit<T> {
    /// Position of the event in the list handed to the integrator.
    pub which: usize,
    pub x: T,
    pub y: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Termination<T> {
    ReachedEnd,
    Event { which: usize, x: T },
    Blowup { x: T },
    MinStep { x: T },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("invalid integrator configuration")]
    InvalidConfig,
    #[error("empty integration span")]
    EmptySpan,
    #[error("right-hand side is not finite at x = {x}")]
    NonFiniteRhs { x: f64 },
    #[error("implicit stage failed to converge near x = {x}")]
    NewtonDivergence { x: f64 },
    #[error("step budget exhausted at x = {x}")]
    MaxSteps { x: f64 },
}

/// Accepted steps of one integration run plus their interpolants.
///
/// `xs` is strictly monotone in the direction of integration and
/// `segments[i]` interpolates between `xs[i]` and `xs[i + 1]`.
#[derive(Clone, Debug)]
pub struct Trajectory<T = f64> {
    pub xs: Vec<T>,
    pub ys: Vec<Vec<T>>,
    pub segments: Vec<Segment<T>>,
    /// Every located crossing, terminal or not, in order of occurrence.
    pub events: Vec<EventHit<T>>,
    pub termination: Termination<T>,
    pub stats: Stats,
}

impl<T: Real> Trajectory<T> {
    pub fn dim(&self) -> usize {
        self.ys[0].len()
    }

    pub fn first_x(&self) -> T {
        self.xs[0]
    }

    pub fn last_x(&self) -> T {
        *self.xs.last().expect("trajectory has a start point")
    }

    pub fn last(&self) -> &[T] {
        self.ys.last().expect("trajectory has a start point")
    }

    pub fn reached_end(&self) -> bool {
        matches!(self.termination, Termination::ReachedEnd)
    }

    /// Dense-output value at `x`, clamped to the covered range.
    pub fn eval(&self, x: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn eval_into(&self, x: T, out: &mut [T]) {
        if self.segments.is_empty() {
            out.copy_from_slice(&self.ys[0]);
            return;
        }
        let (i, x) = self.locate(x);
        self.segments[i].eval_into(x, &self.ys[i], &self.ys[i + 1], out);
    }

    /// Derivative of the dense output at `x`; zero for a single-point trajectory.
    pub fn deriv_into(&self, x: T, out: &mut [T]) {
        if self.segments.is_empty() {
            out.iter_mut().for_each(|v| *v = T::zero());
            return;
        }
        let (i, x) = self.locate(x);
        self.segments[i].deriv_into(x, &self.ys[i], &self.ys[i + 1], out);
    }

    fn locate(&self, x: T) -> (usize, T) {
        let forward = self.last_x() >= self.first_x();
        // index of the segment containing x
        let key = |t: T| if forward { t } else { -t };
        let xk = key(x);
        let n = self.segments.len();
        let i = if xk <= key(self.xs[0]) {
            0
        } else if xk >= key(self.xs[n]) {
            n - 1
        } else {
            self.xs.partition_point(|&t| key(t) <= xk).saturating_sub(1).min(n - 1)
        };
        let x = if forward {
            x.max(self.xs[0]).min(self.xs[n])
        } else {
            x.min(self.xs[0]).max(self.xs[n])
        };
        (i, x)
    }
}

pub(crate) fn all_finite<T: Real>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Weighted RMS norm used for error control.
pub(crate) fn err_norm<T: Real>(err: &[T], y0: &[T], y1: &[T], rtol: T, atol: T) -> T {
    let mut acc = T::zero();
    for i in 0..err.len() {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        acc += r * r;
    }
    (acc / T::from_usize(err.len().max(1)).unwrap()).sqrt()
}
