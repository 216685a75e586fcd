//! Linearized eigenvalue problem about a steady profile and its Evans
//! function.
//!
//! The perturbation `(ρ, u, θ)` of density, velocity and thermal variable is
//! written as the first-order system `Y' = A(x; λ) Y` in `Y = (ρ, u, θ, u', θ')`,
//! with `A = A0(x) + λ A1(x)`. The background only has to supply the profile
//! and the equation-of-state partials along it, so the polytropic gas and the
//! local model share every line below the [`Background`] trait.

mod evans;
mod frame;

pub use evans::{
    d0_direct, evans, stability_index, stability_index_with, EvansConfig, EvansError, EvansValue,
    Normalization, StabilityIndex,
};
pub use frame::{drury, FrameResult};

use num_complex::Complex64;

use crate::polytropic::{rhs_unchecked, ProfileSolution};

pub type Mat5 = [[f64; 5]; 5];
pub type CMat5 = [[Complex64; 5]; 5];

/// Profile values and equation-of-state data at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BackgroundPoint {
    pub rho: f64,
    pub u: f64,
    pub theta: f64,
    pub drho: f64,
    pub du: f64,
    pub dtheta: f64,
    pub p: f64,
    /// `∂p/∂ρ`, `∂p/∂θ` and their derivatives along the profile.
    pub p_rho: f64,
    pub p_theta: f64,
    pub dp_rho: f64,
    pub dp_theta: f64,
    /// `∂e/∂ρ`, `∂e/∂θ` of the internal energy and their derivatives along the profile.
    pub e_rho: f64,
    pub e_theta: f64,
    pub de_rho: f64,
    pub de_theta: f64,
}

/// A steady profile on a finite interval, with the data the linearization needs.
pub trait Background: Sync {
    /// `(x_left, x_right)`.
    fn span(&self) -> (f64, f64);
    /// Mass flux `m = ρ u`, constant along a steady profile.
    fn mass_flux(&self) -> f64;
    /// Viscosity multiplying `u''`.
    fn viscosity(&self) -> f64;
    /// Conductivity multiplying `θ''`.
    fn conductivity(&self) -> f64;
    fn point(&self, x: f64) -> BackgroundPoint;
}

/// `(A0, A1)` with `A(x; λ) = A0 + λ A1`.
pub fn coefficients(bg: &dyn Background, x: f64) -> (Mat5, Mat5) {
    let q = bg.point(x);
    let (m, alpha, kappa) = (bg.mass_flux(), bg.viscosity(), bg.conductivity());
    let (a, b) = (q.rho, q.u);
    let mut a0 = [[0.0; 5]; 5];
    let mut a1 = [[0.0; 5]; 5];

    // mass: λρ + (â u + û ρ)' = 0, solved for ρ'
    let r0 = [-q.du / b, -q.drho / b, 0.0, -a / b, 0.0];
    let r1 = -1.0 / b;
    a0[0] = r0;
    a1[0][0] = r1;
    a0[1][3] = 1.0;
    a0[2][4] = 1.0;

    // momentum, solved for u''
    let mut row = [0.0; 5];
    for k in 0..5 {
        row[k] = q.p_rho * r0[k];
    }
    row[0] += q.dp_rho + q.du * b;
    row[1] += q.du * a;
    row[2] += q.dp_theta;
    row[3] += m;
    row[4] += q.p_theta;
    a0[3] = row.map(|v| v / alpha);
    a1[3][0] = q.p_rho * r1 / alpha;
    a1[3][1] = a / alpha;

    // internal energy, solved for θ''
    let de_hat = q.e_rho * q.drho + q.e_theta * q.dtheta;
    let mut row = [0.0; 5];
    for k in 0..5 {
        row[k] = m * q.e_rho * r0[k];
    }
    row[0] += m * q.de_rho + b * de_hat + q.du * q.p_rho;
    row[1] += a * de_hat;
    row[2] += m * q.de_theta + q.du * q.p_theta;
    row[3] += q.p - 2.0 * alpha * q.du;
    row[4] += m * q.e_theta;
    a0[4] = row.map(|v| v / kappa);
    // λ â e_lin + m e_ρ (−λρ/û): the ρ terms cancel because m = â û
    a1[4][0] = (a * q.e_rho + m * q.e_rho * r1) / kappa;
    a1[4][2] = a * q.e_theta / kappa;
    (a0, a1)
}

/// `A(x; λ)` as a complex matrix.
pub fn assemble(bg: &dyn Background, x: f64, lambda: Complex64) -> CMat5 {
    let (a0, a1) = coefficients(bg, x);
    let mut out = [[Complex64::new(0.0, 0.0); 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            out[i][j] = a0[i][j] + lambda * a1[i][j];
        }
    }
    out
}

/// `tr A(x; λ)`.
pub fn trace(bg: &dyn Background, x: f64, lambda: Complex64) -> Complex64 {
    let (a0, a1) = coefficients(bg, x);
    (0..5).map(|i| a0[i][i] + lambda * a1[i][i]).sum()
}

/// A polytropic profile as a background; `θ = e`, `p = Γρe`.
pub struct PolytropicBackground<'a> {
    pub profile: &'a ProfileSolution,
}

impl<'a> PolytropicBackground<'a> {
    pub fn new(profile: &'a ProfileSolution) -> Self {
        Self { profile }
    }
}

impl Background for PolytropicBackground<'_> {
    fn span(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn mass_flux(&self) -> f64 {
        self.profile.params.u0
    }

    fn viscosity(&self) -> f64 {
        self.profile.params.alpha
    }

    fn conductivity(&self) -> f64 {
        self.profile.params.nu
    }

    fn point(&self, x: f64) -> BackgroundPoint {
        let p = &self.profile.params;
        let [u, e] = self.profile.state(x);
        let [du, de] = rhs_unchecked(u, e, self.profile.c, p);
        let rho = p.u0 / u;
        let drho = -p.u0 * du / (u * u);
        BackgroundPoint {
            rho,
            u,
            theta: e,
            drho,
            du,
            dtheta: de,
            p: p.gamma * rho * e,
            p_rho: p.gamma * e,
            p_theta: p.gamma * rho,
            dp_rho: p.gamma * de,
            dp_theta: p.gamma * drho,
            e_rho: 0.0,
            e_theta: 1.0,
            de_rho: 0.0,
            de_theta: 0.0,
        }
    }
}
