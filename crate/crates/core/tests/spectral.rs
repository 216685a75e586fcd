mod common;

use common::rel;
use num_complex::Complex64;
use shocktube::ode::{integrate_rk45, IntegratorConfig};
use shocktube::polytropic::*;
use shocktube::spectral::*;
use shocktube::steady::{det2, dpsi, shooting_config};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn boundary_layer() -> ProfileSolution {
    let p = GasParams::new(1.0, 0.1, 0.2438, 1.0, 0.001).unwrap();
    solve_profile(IntegrationConstants::new(-18.35, 0.5184), &p, &IntegratorConfig::default(), Method::Rk45).unwrap()
}

fn constant_profile() -> ProfileSolution {
    let p = GasParams::new(2.0 / 3.0, 2.0, 3.75, 1.0, 2.0).unwrap();
    solve_profile(constant_constants(&p), &p, &IntegratorConfig::default(), Method::Rk45).unwrap()
}

/// Solutions launched from `x = 0` with the boundary kernel, integrated
/// directly (no orthogonalization).
fn direct_shoot(bg: &dyn Background, lambda: Complex64, col: usize) -> shocktube::ode::Trajectory {
    let rhs = |x: f64, y: &[f64], dy: &mut [f64]| {
        let a = assemble(bg, x, lambda);
        for i in 0..5 {
            let mut s = c(0.0, 0.0);
            for j in 0..5 {
                s += a[i][j] * c(y[2 * j], y[2 * j + 1]);
            }
            dy[2 * i] = s.re;
            dy[2 * i + 1] = s.im;
        }
    };
    let mut y0 = [0.0; 10];
    y0[2 * (3 + col)] = 1.0;
    let cfg = IntegratorConfig::default().with_tolerances(1e-12, 1e-14);
    integrate_rk45(rhs, 0.0, 1.0, &y0, &cfg, &[]).unwrap()
}

/// `D` from the exterior-algebra form of the left-launched pair: the
/// Plücker coordinates `p_ij = y1_i y2_j − y1_j y2_i` obey a linear ODE of
/// their own, which avoids the cancellation of two separately grown columns.
/// Only trustworthy for small `|λ|`: further out `D` is a tiny component of
/// a fast-growing form and the explicit integration stops converging.
fn wedge_d(bg: &dyn Background, lambda: Complex64) -> Complex64 {
    let rhs = |x: f64, y: &[f64], dy: &mut [f64]| {
        let a = assemble(bg, x, lambda);
        let p = |i: usize, j: usize| -> Complex64 {
            if i == j {
                c(0.0, 0.0)
            } else if i < j {
                c(y[2 * (5 * i + j)], y[2 * (5 * i + j) + 1])
            } else {
                -c(y[2 * (5 * j + i)], y[2 * (5 * j + i) + 1])
            }
        };
        dy.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..5 {
            for j in i + 1..5 {
                let mut s = c(0.0, 0.0);
                for k in 0..5 {
                    s += a[i][k] * p(k, j) + a[j][k] * p(i, k);
                }
                dy[2 * (5 * i + j)] = s.re;
                dy[2 * (5 * i + j) + 1] = s.im;
            }
        }
    };
    let mut y0 = [0.0; 50];
    y0[2 * (5 * 3 + 4)] = 1.0;
    let cfg = IntegratorConfig::default().with_tolerances(1e-12, 1e-14);
    let t = integrate_rk45(rhs, 0.0, 1.0, &y0, &cfg, &[]).unwrap();
    let y = t.last();
    c(y[2 * (5 + 2)], y[2 * (5 + 2) + 1])
}

#[test]
fn constant_profile_gives_constant_coefficients() {
    let sol = constant_profile();
    let bg = PolytropicBackground::new(&sol);
    let (a0, a1) = coefficients(&bg, 0.0);
    for x in [0.13, 0.5, 0.97] {
        let (b0, b1) = coefficients(&bg, x);
        for i in 0..5 {
            for j in 0..5 {
                assert!((a0[i][j] - b0[i][j]).abs() <= 1e-12 * (1.0 + a0[i][j].abs()));
                assert!((a1[i][j] - b1[i][j]).abs() <= 1e-12 * (1.0 + a1[i][j].abs()));
            }
        }
    }
}

#[test]
fn coefficients_are_real() {
    let sol = boundary_layer();
    let bg = PolytropicBackground::new(&sol);
    for (x, l) in [(0.01, c(0.3, 2.0)), (0.4, c(-1.0, 7.5)), (0.9, c(30.0, -40.0))] {
        let a = assemble(&bg, x, l);
        let b = assemble(&bg, x, l.conj());
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(a[i][j].conj(), b[i][j]);
            }
        }
    }
}

/// Plugs a numerically integrated solution of `Y' = AY` into the
/// second-order eigenvalue equations written out term by term.
#[test]
fn first_order_system_solves_the_eigenvalue_equations() {
    let sol = boundary_layer();
    let p = sol.params;
    let (g, al, nu) = (p.gamma, p.alpha, p.nu);
    let bg = PolytropicBackground::new(&sol);
    for lambda in [c(0.0, 0.0), c(1.5, -2.0), c(10.0, 5.0)] {
        for col in 0..2 {
            let t = direct_shoot(&bg, lambda, col);
            let mut y = [0.0; 10];
            let mut dy = [0.0; 10];
            let mut worst = 0.0f64;
            for k in 0..t.xs.len() - 1 {
                let x = 0.5 * (t.xs[k] + t.xs[k + 1]);
                t.eval_into(x, &mut y);
                t.deriv_into(x, &mut dy);
                let z = |i: usize| c(y[2 * i], y[2 * i + 1]);
                let dz = |i: usize| c(dy[2 * i], dy[2 * i + 1]);
                let (rho, u, e, ux, ex) = (z(0), z(1), z(2), z(3), z(4));
                let (rhox, uxx, exx) = (dz(0), dz(3), dz(4));
                let [uh, eh, uhx, ehx] = sol.with_slopes(x);
                let rh = p.u0 / uh;
                let rhx = -p.u0 * uhx / (uh * uh);
                let flux = rh * u + uh * rho;
                let r1 = lambda * rho + rhx * u + rh * ux + uhx * rho + uh * rhox;
                let r2 = lambda * rh * u + p.u0 * ux + g * (rhx * e + rh * ex + ehx * rho + eh * rhox) + uhx * flux
                    - al * uxx;
                let r3 = lambda * rh * e + p.u0 * ex + ehx * flux + g * rh * eh * ux + g * uhx * (rh * e + eh * rho)
                    - nu * exx
                    - 2.0 * al * uhx * ux;
                let scale = [al * uxx, nu * exx, lambda * rho, uh * rhox, p.u0 * ux, p.u0 * ex]
                    .iter()
                    .map(|v| v.norm())
                    .fold(1e-300, f64::max);
                worst = worst.max((r1.norm().max(r2.norm()).max(r3.norm())) / scale);
            }
            assert!(worst <= 1e-6, "λ {lambda}: defect {worst:e}");
        }
    }
}

#[test]
fn abel_normalization_is_the_endpoint_determinant() {
    let sol = boundary_layer();
    let bg = PolytropicBackground::new(&sol);
    for l in [c(0.0, 0.0), c(1.0, 1.0), c(2.0, 0.0), c(0.5, -1.5)] {
        let d = evans(&bg, l, &EvansConfig::default()).unwrap().value();
        let want = wedge_d(&bg, l);
        assert!((d - want).norm() <= 1e-6 * want.norm(), "λ {l}: {d} vs {want}");
    }
}

#[test]
fn one_sided_and_two_sided_matching_agree() {
    let sol = boundary_layer();
    let bg = PolytropicBackground::new(&sol);
    for l in [c(5.0, -3.0), c(20.0, 0.0), c(30.0, 80.0)] {
        let at = |xm: f64| {
            let cfg = EvansConfig { rtol: 1e-12, atol: 1e-14, matching: Some(xm), ..Default::default() };
            evans(&bg, l, &cfg).unwrap().value()
        };
        let (a, b, m) = (at(0.0), at(1.0), at(0.5));
        assert!((a - m).norm() <= 1e-6 * m.norm() && (b - m).norm() <= 1e-6 * m.norm(), "λ {l}: {a} {m} {b}");
    }
}

#[test]
fn real_on_the_real_axis() {
    let sol = boundary_layer();
    let bg = PolytropicBackground::new(&sol);
    for norm in [Normalization::Abel, Normalization::TwoSided, Normalization::WindingOnly] {
        let cfg = EvansConfig { normalization: norm, ..Default::default() };
        for l in [0.1, 1.0, 10.0] {
            let v = evans(&bg, c(l, 0.0), &cfg).unwrap();
            assert!(v.imag_ratio() <= 1e-8, "{norm:?} λ {l}: {}", v.value());
        }
    }
}

#[test]
fn conjugate_symmetry() {
    let sol = boundary_layer();
    let bg = PolytropicBackground::new(&sol);
    let cfg = EvansConfig::default();
    let a = evans(&bg, c(1.0, 1.0), &cfg).unwrap().value();
    let b = evans(&bg, c(1.0, -1.0), &cfg).unwrap().value();
    assert!((a.conj() - b).norm() <= 1e-8 * a.norm(), "{a} vs {b}");
}

#[test]
fn cauchy_riemann_at_one_plus_i() {
    let sol = boundary_layer();
    let bg = PolytropicBackground::new(&sol);
    let cfg = EvansConfig::default();
    let d = |l: Complex64| evans(&bg, l, &cfg).unwrap().value();
    let (l0, h) = (c(1.0, 1.0), 1e-3);
    let dx = (d(l0 + h) - d(l0 - h)) / (2.0 * h);
    let dy = (d(l0 + c(0.0, h)) - d(l0 - c(0.0, h))) / (2.0 * h);
    let res = (dy - c(0.0, 1.0) * dx).norm() / dx.norm();
    assert!(res <= 1e-4, "residual {res:e}");
}

#[test]
fn matching_point_changes_only_a_positive_factor() {
    let sol = boundary_layer();
    let bg = PolytropicBackground::new(&sol);
    for norm in [Normalization::Abel, Normalization::TwoSided, Normalization::WindingOnly] {
        for l in [c(0.0, 0.0), c(2.0, 0.0)] {
            let at = |xm: f64| {
                evans(&bg, l, &EvansConfig { matching: Some(xm), normalization: norm, ..Default::default() }).unwrap()
            };
            let (a, b) = (at(0.5), at(0.25));
            assert_eq!(a.sign(), b.sign(), "{norm:?}");
            if norm == Normalization::Abel {
                assert!(rel(b.value().re, a.value().re) <= 1e-6);
            }
        }
    }
}

#[test]
fn frame_stays_orthonormal() {
    let sol = boundary_layer();
    let bg = PolytropicBackground::new(&sol);
    for l in [c(0.0, 0.0), c(0.0, 100.0), c(100.0, 0.0), c(70.0, 70.0)] {
        let v = evans(&bg, l, &EvansConfig::default()).unwrap();
        assert!(v.max_drift <= 1e-8, "λ {l}: drift {:e}", v.max_drift);
    }
    let init = [[0.0, 0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0, 1.0]];
    let f = drury(&bg, c(3.0, 4.0), &init, 0.0, 0.5, &IntegratorConfig::default()).unwrap();
    assert!(f.reorthonormalizations > 0);
    for i in 0..2 {
        for j in 0..2 {
            let g: Complex64 = (0..5).map(|k| f.q[i][k].conj() * f.q[j][k]).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g - want).norm() <= 1e-12);
        }
    }
}

#[test]
fn zero_frequency_routes_agree() {
    let sol = boundary_layer();
    let p = sol.params;
    let bg = PolytropicBackground::new(&sol);
    let d = evans(&bg, c(0.0, 0.0), &EvansConfig::default()).unwrap().value().re;
    let direct = d0_direct(&sol, &shooting_config()).unwrap();
    let via_det = p.alpha * p.nu / (p.u0 * p.u0) * det2(&dpsi(sol.c, &p, &shooting_config()).unwrap());
    assert!(rel(d, direct) <= 1e-6 && rel(via_det, direct) <= 1e-6, "{d} {direct} {via_det}");
    assert!(direct > 0.0);
}

#[test]
fn stability_index_of_stable_profiles() {
    for sol in [boundary_layer(), constant_profile()] {
        let bg = PolytropicBackground::new(&sol);
        let s = stability_index(&bg, &EvansConfig::default()).unwrap();
        assert_eq!(s.mu, 1, "{s:?}");
        assert!(s.samples.len() >= 3);
    }
}

#[test]
fn negating_d_flips_the_index() {
    let sol = boundary_layer();
    let bg = PolytropicBackground::new(&sol);
    let cfg = EvansConfig::default();
    let plain = stability_index_with(|l| evans(&bg, c(l, 0.0), &cfg)).unwrap();
    // flip only the large-λ side so the product changes sign
    let flipped = stability_index_with(|l| {
        let v = evans(&bg, c(l, 0.0), &cfg)?;
        Ok(if l > 0.0 { v.negated() } else { v })
    })
    .unwrap();
    assert_eq!(plain.mu, -flipped.mu);
}

#[test]
fn index_errors() {
    let sol = constant_profile();
    let bg = PolytropicBackground::new(&sol);
    let cfg = EvansConfig::default();
    let base = evans(&bg, c(0.0, 0.0), &cfg).unwrap();
    let zero = stability_index_with(|_| Ok(EvansValue { frame_det: 0.0, ..base }));
    assert_eq!(zero.unwrap_err(), EvansError::ZeroD0);
    let mut n = 0;
    let wobble = stability_index_with(|_| {
        n += 1;
        Ok(if n % 2 == 0 { base.negated() } else { base })
    });
    assert_eq!(wobble.unwrap_err(), EvansError::NoLimit);
}

#[test]
fn config_round_trips() {
    let cfg = EvansConfig { matching: Some(0.25), normalization: Normalization::TwoSided, ..Default::default() };
    let s = serde_json::to_string(&cfg).unwrap();
    assert!(s.contains("two_sided"));
    assert_eq!(serde_json::from_str::<EvansConfig>(&s).unwrap(), cfg);
    assert!(serde_json::from_str::<EvansConfig>(r#"{"tol": 1}"#).is_err());
}
