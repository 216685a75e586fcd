use super::driver::{run, Attempt, Scheme, StepHook};
use super::{all_finite, err_norm, EventSpec, IntegratorConfig, OdeError, Segment, Trajectory};
use crate::scalar::Real;

// Dormand–Prince 5(4) tableau with Hairer's continuous extension.
const C2: f64 = 0.2;
const C3: f64 = 0.3;
const C4: f64 = 0.8;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Dopri<'f, T, F> {
    f: &'f mut F,
    rtol: T,
    atol: T,
    k1: Vec<T>,
    /// slope at the end of the last attempted step (first-same-as-last)
    k7: Vec<T>,
    evals: usize,
}

impl<T: Real, F: FnMut(T, &[T], &mut [T])> Dopri<'_, T, F> {
    fn stage(&mut self, x: T, y: &[T], terms: &[(f64, &[T])], h: T, out: &mut [T], tmp: &mut [T]) {
        for i in 0..y.len() {
            let mut acc = T::zero();
            for (c, k) in terms {
                acc += T::lit(*c) * k[i];
            }
            tmp[i] = y[i] + h * acc;
        }
        (self.f)(x, tmp, out);
        self.evals += 1;
    }
}

impl<T: Real, F: FnMut(T, &[T], &mut [T])> Scheme<T> for Dopri<'_, T, F> {
    fn err_order(&self) -> T {
        T::lit(5.0)
    }

    fn attempt(&mut self, x: T, y: &[T], h: T) -> Attempt<T> {
        let n = y.len();
        let k1 = self.k1.clone();
        let mut k2 = vec![T::zero(); n];
        let mut k3 = vec![T::zero(); n];
        let mut k4 = vec![T::zero(); n];
        let mut k5 = vec![T::zero(); n];
        let mut k6 = vec![T::zero(); n];
        let mut k7 = vec![T::zero(); n];
        let mut tmp = vec![T::zero(); n];
        let lit = T::lit;
        self.stage(x + lit(C2) * h, y, &[(A21, &k1)], h, &mut k2, &mut tmp);
        self.stage(x + lit(C3) * h, y, &[(A31, &k1), (A32, &k2)], h, &mut k3, &mut tmp);
        self.stage(x + lit(C4) * h, y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h, &mut k4, &mut tmp);
        self.stage(
            x + lit(C5) * h,
            y,
            &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
            h,
            &mut k5,
            &mut tmp,
        );
        self.stage(
            x + h,
            y,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            h,
            &mut k6,
            &mut tmp,
        );
        self.stage(
            x + h,
            y,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            h,
            &mut k7,
            &mut tmp,
        );
        let y1 = tmp;
        if !all_finite(&y1) || !all_finite(&k7) {
            return Attempt::NonFinite;
        }
        let mut err = vec![T::zero(); n];
        for i in 0..n {
            err[i] = h
                * (lit(E1) * k1[i]
                    + lit(E3) * k3[i]
                    + lit(E4) * k4[i]
                    + lit(E5) * k5[i]
                    + lit(E6) * k6[i]
                    + lit(E7) * k7[i]);
        }
        let en = err_norm(&err, y, &y1, self.rtol, self.atol);
        let mut r = [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]];
        for i in 0..n {
            let ydiff = y1[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            r[0][i] = y[i];
            r[1][i] = ydiff;
            r[2][i] = bspl;
            r[3][i] = ydiff - h * k7[i] - bspl;
            r[4][i] = h
                * (lit(D1) * k1[i]
                    + lit(D3) * k3[i]
                    + lit(D4) * k4[i]
                    + lit(D5) * k5[i]
                    + lit(D6) * k6[i]
                    + lit(D7) * k7[i]);
        }
        self.k7 = k7;
        Attempt::Done { y1, err: en, seg: Segment::Dopri { x0: x, h, r } }
    }

    fn accepted(&mut self) {
        std::mem::swap(&mut self.k1, &mut self.k7);
    }

    fn restart(&mut self, x: T, y: &[T]) -> bool {
        (self.f)(x, y, &mut self.k1);
        self.evals += 1;
        all_finite(&self.k1)
    }

    fn rhs_evals(&self) -> usize {
        self.evals
    }
}

/// Explicit Dormand–Prince 5(4) integration of `y' = f(x, y)` from `a` to `b`.
///
/// `f` writes the derivative into its third argument. Terminal events stop
/// the run at the located crossing; see [`super::Termination`].
pub fn integrate_rk45<T, F>(
    mut f: F,
    a: T,
    b: T,
    y0: &[T],
    cfg: &IntegratorConfig<T>,
    events: &[EventSpec<'_, T>],
) -> Result<Trajectory<T>, OdeError>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]),
{
    let n = y0.len();
    let mut k1 = vec![T::zero(); n];
    f(a, y0, &mut k1);
    if !all_finite(&k1) {
        return Err(OdeError::NonFiniteRhs { x: a.to_f64_lossy() });
    }
    let mut scheme = Dopri { f: &mut f, rtol: cfg.rtol, atol: cfg.atol, k1, k7: vec![T::zero(); n], evals: 1 };
    run(&mut scheme, a, b, y0, cfg, events, None)
}

/// [`integrate_rk45`] with a hook run after every accepted step, which may
/// project the state (for instance re-orthonormalize a frame).
pub fn integrate_rk45_hooked<T, F>(
    mut f: F,
    a: T,
    b: T,
    y0: &[T],
    cfg: &IntegratorConfig<T>,
    hook: StepHook<'_, T>,
) -> Result<Trajectory<T>, OdeError>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]),
{
    let n = y0.len();
    let mut k1 = vec![T::zero(); n];
    f(a, y0, &mut k1);
    if !all_finite(&k1) {
        return Err(OdeError::NonFiniteRhs { x: a.to_f64_lossy() });
    }
    let mut scheme = Dopri { f: &mut f, rtol: cfg.rtol, atol: cfg.atol, k1, k7: vec![T::zero(); n], evals: 1 };
    run(&mut scheme, a, b, y0, cfg, &[], Some(hook))
}
