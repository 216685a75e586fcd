use crate::scalar::Real;

/// Partial-pivot LU of a small row-major square matrix.
///
/// Lives here rather than going through nalgebra so the stiff integrator stays
/// generic over [`Real`] without a `RealField` bound.
pub(crate) struct Lu<T> {
    n: usize,
    a: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Real> Lu<T> {
    /// Returns `None` when a pivot vanishes or is not finite.
    pub fn factor(n: usize, mut a: Vec<T>) -> Option<Self> {
        let mut piv = (0..n).collect::<Vec<_>>();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > T::zero()) || !best.is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / d;
                a[i * n + k] = l;
                for j in k + 1..n {
                    let t = a[k * n + j];
                    a[i * n + j] -= l * t;
                }
            }
        }
        Some(Self { n, a, piv })
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        let mut x: Vec<T> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let t = self.a[i * n + j] * x[j];
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = self.a[i * n + j] * x[j];
                x[i] -= t;
            }
            x[i] /= self.a[i * n + i];
        }
        b.copy_from_slice(&x);
    }
}
