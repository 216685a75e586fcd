use crate::scalar::Real;

/// Interpolant over one accepted step `[x0, x0 + h]`.
#[derive(Clone, Debug)]
pub enum Segment<T> {
    /// Dormand–Prince continuous extension, coefficients `r1..r5`.
    Dopri { x0: T, h: T, r: [Vec<T>; 5] },
    /// Cubic Hermite through both endpoint states and slopes.
    Hermite { x0: T, h: T, f0: Vec<T>, f1: Vec<T> },
}

impl<T: Real> Segment<T> {
    pub fn eval_into(&self, x: T, y0: &[T], y1: &[T], out: &mut [T]) {
        match self {
            Segment::Dopri { x0, h, r } => {
                let s = (x - *x0) / *h;
                let s1 = T::one() - s;
                for i in 0..out.len() {
                    out[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
                }
            }
            Segment::Hermite { x0, h, f0, f1 } => {
                let s = (x - *x0) / *h;
                let s2 = s * s;
                let s3 = s2 * s;
                let two = T::lit(2.0);
                let three = T::lit(3.0);
                let h00 = two * s3 - three * s2 + T::one();
                let h10 = s3 - two * s2 + s;
                let h01 = -two * s3 + three * s2;
                let h11 = s3 - s2;
                for i in 0..out.len() {
                    out[i] = h00 * y0[i] + h10 * *h * f0[i] + h01 * y1[i] + h11 * *h * f1[i];
                }
            }
        }
    }

    /// Derivative of the interpolant with respect to `x`.
    pub fn deriv_into(&self, x: T, y0: &[T], y1: &[T], out: &mut [T]) {
        match self {
            Segment::Dopri { x0, h, r } => {
                let s = (x - *x0) / *h;
                let s1 = T::one() - s;
                let two = T::lit(2.0);
                for i in 0..out.len() {
                    let q = r[2][i] + s * (r[3][i] + s1 * r[4][i]);
                    let dq = r[3][i] + (T::one() - two * s) * r[4][i];
                    let p = r[1][i] + s1 * q;
                    let dp = -q + s1 * dq;
                    out[i] = (p + s * dp) / *h;
                }
            }
            Segment::Hermite { x0, h, f0, f1 } => {
                let s = (x - *x0) / *h;
                let s2 = s * s;
                let lit = T::lit;
                let d00 = lit(6.0) * s2 - lit(6.0) * s;
                let d10 = lit(3.0) * s2 - lit(4.0) * s + T::one();
                let d01 = -d00;
                let d11 = lit(3.0) * s2 - lit(2.0) * s;
                for i in 0..out.len() {
                    out[i] = (d00 * y0[i] + d01 * y1[i]) / *h + d10 * f0[i] + d11 * f1[i];
                }
            }
        }
    }
}
