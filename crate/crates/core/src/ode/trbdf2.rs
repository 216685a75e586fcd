use super::driver::{run, Attempt, Scheme};
use super::{all_finite, err_norm, EventSpec, IntegratorConfig, Lu, OdeError, Segment, Trajectory};
use crate::scalar::Real;

const NEWTON_TOL: f64 = 0.03;
const NEWTON_MAX_ITER: usize = 10;

/// Row-major Jacobian callback: writes `∂f_i/∂y_j` to `out[i * n + j]`.
pub type JacobianFn<'a, T> = &'a mut dyn FnMut(T, &[T], &mut [T]);

struct TrBdf2<'f, 'j, T, F> {
    f: &'f mut F,
    jac: Option<JacobianFn<'j, T>>,
    rtol: T,
    atol: T,
    f0: Vec<T>,
    f0_next: Option<Vec<T>>,
    /// Jacobian at the current step start, invalidated on acceptance.
    j: Option<Vec<T>>,
    evals: usize,
    gamma: T,
    d: T,
}

impl<T: Real, F: FnMut(T, &[T], &mut [T])> TrBdf2<'_, '_, T, F> {
    fn jacobian(&mut self, x: T, y: &[T]) -> Vec<T> {
        let n = y.len();
        let mut out = vec![T::zero(); n * n];
        if let Some(jac) = self.jac.as_mut() {
            jac(x, y, &mut out);
            return out;
        }
        let mut yp = y.to_vec();
        let mut fp = vec![T::zero(); n];
        let sq = T::epsilon().sqrt();
        for j in 0..n {
            let dj = sq * y[j].abs().max(T::one());
            yp[j] = y[j] + dj;
            (self.f)(x, &yp, &mut fp);
            self.evals += 1;
            for i in 0..n {
                out[i * n + j] = (fp[i] - self.f0[i]) / dj;
            }
            yp[j] = y[j];
        }
        out
    }

    /// Simplified Newton for `z - d h f(xs, z) = rhs`.
    fn solve_stage(&mut self, lu: &Lu<T>, xs: T, h: T, rhs: &[T], z: &mut [T]) -> bool {
        let n = z.len();
        let mut fz = vec![T::zero(); n];
        let mut delta = vec![T::zero(); n];
        let mut prev = T::infinity();
        for _ in 0..NEWTON_MAX_ITER {
            (self.f)(xs, z, &mut fz);
            self.evals += 1;
            if !all_finite(&fz) {
                return false;
            }
            for i in 0..n {
                delta[i] = -(z[i] - self.d * h * fz[i] - rhs[i]);
            }
            lu.solve_in_place(&mut delta);
            let mut acc = T::zero();
            for i in 0..n {
                z[i] += delta[i];
                let sc = self.atol + self.rtol * z[i].abs();
                acc += (delta[i] / sc) * (delta[i] / sc);
            }
            let norm = (acc / T::from_usize(n).unwrap()).sqrt();
            if !norm.is_finite() || !all_finite(z) {
                return false;
            }
            if norm <= T::lit(NEWTON_TOL) {
                return true;
            }
            if prev.is_finite() && norm > T::lit(0.9) * prev {
                return false;
            }
            prev = norm;
        }
        false
    }
}

impl<T: Real, F: FnMut(T, &[T], &mut [T])> Scheme<T> for TrBdf2<'_, '_, T, F> {
    fn err_order(&self) -> T {
        T::lit(3.0)
    }

    fn attempt(&mut self, x: T, y: &[T], h: T) -> Attempt<T> {
        let n = y.len();
        let g = self.gamma;
        let d = self.d;
        if self.j.is_none() {
            let jm = self.jacobian(x, y);
            if !all_finite(&jm) {
                return Attempt::NonFinite;
            }
            self.j = Some(jm);
        }
        let jm = self.j.as_ref().unwrap();
        let mut m = vec![T::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                m[i * n + k] = -d * h * jm[i * n + k];
            }
            m[i * n + i] += T::one();
        }
        let lu = match Lu::factor(n, m) {
            Some(lu) => lu,
            None => return Attempt::Newton,
        };

        // trapezoidal stage to x + gamma h
        let f0 = self.f0.clone();
        let rhs1: Vec<T> = (0..n).map(|i| y[i] + d * h * f0[i]).collect();
        let mut zg: Vec<T> = (0..n).map(|i| y[i] + g * h * f0[i]).collect();
        if !self.solve_stage(&lu, x + g * h, h, &rhs1, &mut zg) {
            return Attempt::Newton;
        }
        let mut fg = vec![T::zero(); n];
        (self.f)(x + g * h, &zg, &mut fg);
        self.evals += 1;

        // BDF2 stage to x + h
        let two = T::lit(2.0);
        // c1 zg - c2 y with c1 - c2 = 1, written so constant states stay exact
        let c1 = T::one() / (g * (two - g));
        let rhs2: Vec<T> = (0..n).map(|i| y[i] + c1 * (zg[i] - y[i])).collect();
        let mut y1: Vec<T> = (0..n).map(|i| zg[i] + (T::one() - g) * h * fg[i]).collect();
        if !self.solve_stage(&lu, x + h, h, &rhs2, &mut y1) {
            return Attempt::Newton;
        }
        let mut f1 = vec![T::zero(); n];
        (self.f)(x + h, &y1, &mut f1);
        self.evals += 1;
        if !all_finite(&f1) || !all_finite(&y1) {
            return Attempt::NonFinite;
        }

        // local error from the second divided difference of f, filtered
        // through the iteration matrix so stiff components do not dominate
        let three = T::lit(3.0);
        let four = T::lit(4.0);
        let ke = (-three * g * g + four * g - two) / (T::lit(12.0) * (two - g));
        let mut est: Vec<T> = (0..n)
            .map(|i| {
                two * ke * h * (f0[i] / g - fg[i] / (g * (T::one() - g)) + f1[i] / (T::one() - g))
            })
            .collect();
        lu.solve_in_place(&mut est);
        let en = err_norm(&est, y, &y1, self.rtol, self.atol);
        let seg = Segment::Hermite { x0: x, h, f0, f1: f1.clone() };
        self.f0_next = Some(f1);
        Attempt::Done { y1, err: en, seg }
    }

    fn accepted(&mut self) {
        if let Some(f1) = self.f0_next.take() {
            self.f0 = f1;
        }
        self.j = None;
    }

    fn restart(&mut self, x: T, y: &[T]) -> bool {
        self.f0_next = None;
        self.j = None;
        (self.f)(x, y, &mut self.f0);
        self.evals += 1;
        all_finite(&self.f0)
    }

    fn rhs_evals(&self) -> usize {
        self.evals
    }
}

/// TR-BDF2 integration of `y' = f(x, y)`; the Jacobian is formed by forward
/// differences unless `jac` is given.
pub fn integrate_stiff<T, F>(
    mut f: F,
    jac: Option<JacobianFn<'_, T>>,
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
    let mut f0 = vec![T::zero(); n];
    f(a, y0, &mut f0);
    if !all_finite(&f0) {
        return Err(OdeError::NonFiniteRhs { x: a.to_f64_lossy() });
    }
    let gamma = T::lit(2.0) - T::lit(2.0).sqrt();
    let mut scheme = TrBdf2 {
        f: &mut f,
        jac,
        rtol: cfg.rtol,
        atol: cfg.atol,
        f0,
        f0_next: None,
        j: None,
        evals: 1,
        gamma,
        d: gamma / T::lit(2.0),
    };
    run(&mut scheme, a, b, y0, cfg, events, None)
}
