//! Constant-coefficient viscous conservation laws
//! `U_t + A U_x = (B U_x)_x` on `0 < x < 1` with `B = diag(0, B22)`.
//!
//! `U = (U_I, U_II)` splits into an `r`-dimensional hyperbolic block and an
//! `(n − r)`-dimensional parabolic one. Steady states integrate once to
//!
//! ```text
//! A11 U_I + A12 U_II = C1
//! A21 U_I + A22 U_II + C2 = B22 U_II'
//! ```
//!
//! so that `U_II' = Ã U_II + C̃` with `Ã = B22⁻¹(A22 − A21 A11⁻¹ A12)` and
//! `C̃ = B22⁻¹(C2 + A21 A11⁻¹ C1)`. The map `C2 ↦ U_II(1)` is invertible
//! exactly when no eigenvalue of `Ã` lies in `2πi ℤ ∖ {0}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearError {
    #[error("inconsistent shapes: {0}")]
    Shape(&'static str),
    #[error("B22 + B22ᵀ is not positive definite")]
    NotParabolic,
    #[error("A11 has an eigenvalue with non-positive real part or is singular")]
    SingularA11,
    #[error("B22 is singular")]
    SingularB22,
    #[error("Ã has eigenvalues on 2πi ℤ ∖ {{0}}: {0:?}")]
    SpecCondViolated(Vec<Complex64>),
    #[error("C2 ↦ U_II(1) is numerically singular (condition number {condition:e})")]
    SingularMap { condition: f64 },
    #[error("non-finite input")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, LinearError>;

/// Condition number above which the `C2 ↦ U_II(1)` map counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Row-major description of a system, as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSystemSpec {
    pub r: usize,
    pub a: Vec<Vec<f64>>,
    pub b22: Vec<Vec<f64>>,
}

/// A validated system: (H1) and (H2) hold.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    pub n: usize,
    pub r: usize,
    pub a: DMatrix<f64>,
    pub b22: DMatrix<f64>,
}

fn from_rows(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|row| row.len() != n) {
        return Err(LinearError::Shape("matrix must be square of the stated size"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl LinearSystem {
    pub fn new(r: usize, a: DMatrix<f64>, b22: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || r > n || b22.nrows() != n - r || b22.ncols() != n - r {
            return Err(LinearError::Shape("A must be n×n and B22 (n−r)×(n−r)"));
        }
        if a.iter().chain(b22.iter()).any(|v| !v.is_finite()) {
            return Err(LinearError::NonFinite);
        }
        if n > r && (&b22 + b22.transpose()).cholesky().is_none() {
            return Err(LinearError::NotParabolic);
        }
        let a11 = a.view((0, 0), (r, r)).clone_owned();
        if r > 0 && a11.complex_eigenvalues().iter().any(|l| l.re <= 0.0) {
            return Err(LinearError::SingularA11);
        }
        Ok(Self { n, r, a, b22 })
    }

    pub fn from_spec(spec: &LinearSystemSpec) -> Result<Self> {
        let n = spec.a.len();
        if spec.r > n {
            return Err(LinearError::Shape("r exceeds n"));
        }
        Self::new(spec.r, from_rows(&spec.a, n)?, from_rows(&spec.b22, n - spec.r)?)
    }

    pub fn to_spec(&self) -> LinearSystemSpec {
        LinearSystemSpec { r: self.r, a: to_rows(&self.a), b22: to_rows(&self.b22) }
    }

    pub fn parabolic_dim(&self) -> usize {
        self.n - self.r
    }

    fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let (r, k) = (self.r, self.parabolic_dim());
        let (r0, nr) = if i == 1 { (0, r) } else { (r, k) };
        let (c0, nc) = if j == 1 { (0, r) } else { (r, k) };
        self.a.view((r0, c0), (nr, nc)).clone_owned()
    }

    /// `A11⁻¹` (empty when `r = 0`).
    fn a11_inv(&self) -> Result<DMatrix<f64>> {
        if self.r == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        self.block(1, 1).try_inverse().ok_or(LinearError::SingularA11)
    }

    fn b22_inv(&self) -> Result<DMatrix<f64>> {
        self.b22.clone().try_inverse().ok_or(LinearError::SingularB22)
    }

    /// `Ã = B22⁻¹(A22 − A21 A11⁻¹ A12)`.
    pub fn reduced(&self) -> Result<DMatrix<f64>> {
        let schur = self.block(2, 2) - self.block(2, 1) * self.a11_inv()? * self.block(1, 2);
        Ok(self.b22_inv()? * schur)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecCondReport {
    pub eigenvalues: Vec<Complex64>,
    pub violations: Vec<Complex64>,
    pub satisfied: bool,
    pub tol: f64,
}

pub fn default_speccond_tol(spectral_radius: f64) -> f64 {
    1e-8 * (1.0 + spectral_radius)
}

/// Tests every eigenvalue of `Ã` against `2πik`, `0 < |k| ≤ ⌈ρ/2π⌉ + 1`.
/// `tol = None` uses [`default_speccond_tol`].
pub fn check_speccond(sys: &LinearSystem, tol: Option<f64>) -> Result<SpecCondReport> {
    let at = sys.reduced()?;
    let eigenvalues: Vec<Complex64> = if at.nrows() == 0 {
        Vec::new()
    } else {
        at.complex_eigenvalues().iter().copied().collect()
    };
    let radius = eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let tol = tol.unwrap_or_else(|| default_speccond_tol(radius));
    let kmax = (radius / (2.0 * PI)).ceil() as i64 + 1;
    let violations: Vec<Complex64> = eigenvalues
        .iter()
        .copied()
        .filter(|l| (-kmax..=kmax).filter(|&k| k != 0).any(|k| (l - Complex64::new(0.0, 2.0 * PI * k as f64)).norm() <= tol))
        .collect();
    Ok(SpecCondReport { satisfied: violations.is_empty(), eigenvalues, violations, tol })
}

/// `(e^{xM}, ∫₀ˣ e^{sM} ds)` from the top blocks of `exp(x [[M, I], [0, 0]])`.
pub fn exp_and_integral(m: &DMatrix<f64>, x: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = m.nrows();
    if k == 0 {
        return (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0));
    }
    let mut aug = DMatrix::zeros(2 * k, 2 * k);
    aug.view_mut((0, 0), (k, k)).copy_from(&(m * x));
    for i in 0..k {
        aug[(i, k + i)] = x;
    }
    let e = aug.exp();
    (e.view((0, 0), (k, k)).clone_owned(), e.view((0, k), (k, k)).clone_owned())
}

/// `max(σ_max, 1) / σ_min`. The floor matters for `∫₀¹ e^{sÃ} ds`, which is
/// `I` for `Ã = 0` and can collapse to zero as a whole (all eigenvalues on
/// `2πi ℤ ∖ {0}`), where the plain ratio would stay of order one.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let s = m.clone().singular_values();
    let (hi, lo) = (s.max().max(1.0), s.min());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// The unique steady state with `U(0) = U0` and `U_II(1) = U1II`.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadyState {
    pub system: LinearSystem,
    pub u0: DVector<f64>,
    pub c1: DVector<f64>,
    pub c2: DVector<f64>,
    pub c_tilde: DVector<f64>,
    pub a_tilde: DMatrix<f64>,
    /// Derivative of `U_II(1)` with respect to `C2`: `(∫₀¹ e^{sÃ} ds) B22⁻¹`.
    pub c2_map: DMatrix<f64>,
    /// [`condition_number`] of `∫₀¹ e^{sÃ} ds`.
    pub condition: f64,
    pub speccond: SpecCondReport,
}

pub fn steady_solve(sys: &LinearSystem, u0: &DVector<f64>, u1_ii: &DVector<f64>) -> Result<SteadyState> {
    let (r, k) = (sys.r, sys.parabolic_dim());
    if u0.len() != sys.n || u1_ii.len() != k {
        return Err(LinearError::Shape("U0 must have n entries and U1II n − r"));
    }
    if u0.iter().chain(u1_ii.iter()).any(|v| !v.is_finite()) {
        return Err(LinearError::NonFinite);
    }
    let speccond = check_speccond(sys, None)?;
    let a_tilde = sys.reduced()?;
    let (u0_i, u0_ii) = (u0.rows(0, r).clone_owned(), u0.rows(r, k).clone_owned());
    let c1 = sys.block(1, 1) * &u0_i + sys.block(1, 2) * &u0_ii;
    let (e1, f1) = exp_and_integral(&a_tilde, 1.0);
    let b22_inv = sys.b22_inv()?;
    let c2_map = &f1 * &b22_inv;
    let condition = condition_number(&f1);
    // the map is checked first: it is what actually fails, speccond only explains why
    if !(condition <= MAX_CONDITION) {
        return Err(LinearError::SingularMap { condition });
    }
    if !speccond.satisfied {
        return Err(LinearError::SpecCondViolated(speccond.violations));
    }
    let rhs = u1_ii - &e1 * &u0_ii;
    let c_tilde = f1.lu().solve(&rhs).ok_or(LinearError::SingularMap { condition: f64::INFINITY })?;
    let c2 = &sys.b22 * &c_tilde - sys.block(2, 1) * sys.a11_inv()? * &c1;
    Ok(SteadyState {
        system: sys.clone(),
        u0: u0.clone(),
        c1,
        c2,
        c_tilde,
        a_tilde,
        c2_map,
        condition,
        speccond,
    })
}

impl SteadyState {
    /// `U(x)`.
    pub fn state(&self, x: f64) -> DVector<f64> {
        let (r, k) = (self.system.r, self.system.parabolic_dim());
        let (e, f) = exp_and_integral(&self.a_tilde, x);
        let u_ii = e * self.u0.rows(r, k) + f * &self.c_tilde;
        self.assemble(u_ii)
    }

    /// `U'(x)`, from the reduced ODE.
    pub fn slope(&self, x: f64) -> DVector<f64> {
        let (r, k) = (self.system.r, self.system.parabolic_dim());
        let u = self.state(x);
        let d_ii = &self.a_tilde * u.rows(r, k) + &self.c_tilde;
        let d_i = if r == 0 {
            DVector::zeros(0)
        } else {
            -(self.system.a11_inv().expect("validated") * self.system.block(1, 2) * &d_ii)
        };
        stack(&d_i, &d_ii)
    }

    fn assemble(&self, u_ii: DVector<f64>) -> DVector<f64> {
        let r = self.system.r;
        let u_i = if r == 0 {
            DVector::zeros(0)
        } else {
            self.system.a11_inv().expect("validated") * (&self.c1 - self.system.block(1, 2) * &u_ii)
        };
        stack(&u_i, &u_ii)
    }

    /// Max-norm residual of the integrated steady system at `x`.
    pub fn residual(&self, x: f64) -> f64 {
        let sys = &self.system;
        let (r, k) = (sys.r, sys.parabolic_dim());
        let u = self.state(x);
        let du = self.slope(x);
        let au = &sys.a * &u;
        let hyper = au.rows(0, r) - &self.c1;
        let para = au.rows(r, k) + &self.c2 - &sys.b22 * du.rows(r, k);
        hyper.iter().chain(para.iter()).fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `(x, U(x))` on `n` equispaced points of `[0, 1]`.
    pub fn sample(&self, n: usize) -> Vec<(f64, DVector<f64>)> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let x = i as f64 / (n - 1) as f64;
                (x, self.state(x))
            })
            .collect()
    }
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}
