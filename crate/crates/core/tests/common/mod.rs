#![allow(dead_code)]

//! Oracles shared by the integration tests.

pub type Mat = Vec<Vec<f64>>;

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    (0..n).map(|i| (0..m).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

/// Dense `exp(A)` by scaling and squaring of a long Taylor series.
pub fn expm(a: &Mat) -> Mat {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = 2f64.powi(-s);
    let a: Mat = a.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
    let mut term: Mat = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut sum = term.clone();
    for k in 1..30 {
        term = matmul(&term, &a);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = matmul(&sum, &sum);
    }
    sum
}

/// Solution at `t = 1` of `y' = J y + b`, `y(0) = 0`, via the augmented
/// exponential `exp([[J, b], [0, 0]])`.
pub fn affine_flow(j: [[f64; 2]; 2], b: [f64; 2]) -> [f64; 2] {
    let m = vec![vec![j[0][0], j[0][1], b[0]], vec![j[1][0], j[1][1], b[1]], vec![0.0, 0.0, 0.0]];
    let e = expm(&m);
    [e[0][2], e[1][2]]
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
