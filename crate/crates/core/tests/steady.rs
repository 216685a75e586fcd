mod common;

use common::{affine_flow, rel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shocktube::feasibility::{trace_boundary_rays, ClassifyOptions, GridSpec};
use shocktube::polytropic::*;
use shocktube::spectral::d0_direct;
use shocktube::steady::*;

fn sets() -> [GasParams; 3] {
    [
        GasParams::new(2.0 / 3.0, 2.0, 3.75, 1.0, 2.0).unwrap(),
        GasParams::new(2.0 / 3.0, 0.7333, 1.375, 1.0, 0.001).unwrap(),
        GasParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap(),
    ]
}

/// Linearization of the profile ODE at the constant state.
fn constant_jacobian(p: &GasParams) -> [[f64; 2]; 2] {
    let (ka, kn) = (p.u0 / p.alpha, p.u0 / p.nu);
    let g = p.gamma;
    [[ka * (1.0 - g * p.e0 / (p.u0 * p.u0)), ka * g / p.u0], [kn * g * p.e0 / p.u0, kn]]
}

fn random_feasible(p: &GasParams, rng: &mut ChaCha8Rng, n: usize) -> Vec<IntegrationConstants> {
    let centre = constant_constants(p);
    let cfg = shooting_config();
    let mut out = Vec::new();
    while out.len() < n {
        let c = centre.offset(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
        if psi(c, p, &cfg).is_ok_and(|v| v[1] > 1e-6) {
            out.push(c);
        }
    }
    out
}

#[test]
fn psi_at_constant_state() {
    for p in sets() {
        let v = psi(constant_constants(&p), &p, &shooting_config()).unwrap();
        assert!(rel(v[0], p.u0) <= 1e-10 && rel(v[1], p.e0) <= 1e-10, "{v:?}");
    }
}

#[test]
fn dpsi_at_constant_state_matches_exponential() {
    for p in sets() {
        let (ka, kn) = (p.u0 / p.alpha, p.u0 / p.nu);
        let j = constant_jacobian(&p);
        let cols = [affine_flow(j, [ka, -kn * p.u0]), affine_flow(j, [0.0, kn])];
        let m = dpsi(constant_constants(&p), &p, &shooting_config()).unwrap();
        for k in 0..2 {
            let scale = cols[k][0].hypot(cols[k][1]);
            for i in 0..2 {
                assert!((m[i][k] - cols[k][i]).abs() <= 1e-10 * scale, "{m:?} vs {cols:?}");
            }
        }
        let det = cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1];
        assert!(rel(det2(&m), det) <= 1e-9);
        assert!(det2(&m) != 0.0);
    }
}

#[test]
fn d0_at_constant_state_matches_exponential() {
    for p in sets() {
        let (ka, kn) = (p.u0 / p.alpha, p.u0 / p.nu);
        let j = constant_jacobian(&p);
        // forcing (ka d1, kn (d2 − d1 u0)) for the two constant pairs
        let s1 = affine_flow(j, [ka * p.alpha / p.u0, kn * (p.alpha - p.alpha)]);
        let s2 = affine_flow(j, [0.0, kn * p.nu / p.u0]);
        let want = s1[0] * s2[1] - s2[0] * s1[1];
        let sol = solve_profile(constant_constants(&p), &p, &shooting_config(), Method::Rk45).unwrap();
        let got = d0_direct(&sol, &shooting_config()).unwrap();
        assert!(rel(got, want) <= 1e-9, "{got} vs {want}");
    }
}

#[test]
fn dpsi_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = shooting_config();
    let mut checked = 0;
    for p in sets() {
        for c in random_feasible(&p, &mut rng, 34) {
            let m = dpsi(c, &p, &cfg).unwrap();
            let mut fd = [[0.0; 2]; 2];
            let mut ok = true;
            for k in 0..2 {
                let ck = if k == 0 { c.c1 } else { c.c2 };
                let h = 1e-6 * ck.abs().max(1.0);
                let shift = |s: f64| if k == 0 { c.offset(s, 0.0) } else { c.offset(0.0, s) };
                match (psi(shift(h), &p, &cfg), psi(shift(-h), &p, &cfg)) {
                    (Ok(a), Ok(b)) => {
                        fd[0][k] = (a[0] - b[0]) / (2.0 * h);
                        fd[1][k] = (a[1] - b[1]) / (2.0 * h);
                    }
                    _ => ok = false,
                }
            }
            if !ok {
                continue;
            }
            for k in 0..2 {
                let norm = m[0][k].hypot(m[1][k]);
                let err = (m[0][k] - fd[0][k]).hypot(m[1][k] - fd[1][k]);
                assert!(err <= 1e-5 * norm, "c {c:?}: {m:?} vs {fd:?}");
            }
            checked += 1;
        }
    }
    assert!(checked >= 90, "only {checked} interior samples");
}

#[test]
fn d0_identity_on_random_feasible_constants() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = shooting_config();
    for p in sets() {
        for c in random_feasible(&p, &mut rng, 10) {
            let sol = solve_profile(c, &p, &cfg, Method::Rk45).unwrap();
            let d0 = d0_direct(&sol, &cfg).unwrap();
            let via_det = p.alpha * p.nu / (p.u0 * p.u0) * det2(&dpsi(c, &p, &cfg).unwrap());
            assert!(rel(via_det, d0) <= 1e-6, "{c:?}: {d0} vs {via_det}");
            assert_eq!(d0.signum(), via_det.signum());
        }
    }
}

#[test]
fn boundary_constants_map_to_zero_energy() {
    let p = sets()[0];
    let opts = ClassifyOptions { cfg: shooting_config(), ..Default::default() };
    let pts = trace_boundary_rays(&p, &opts, 4, 50.0, 1e-10);
    assert!(!pts.is_empty());
    for b in pts {
        let v = psi(b.c, &p, &shooting_config()).unwrap();
        assert!(v[0] > 0.0 && v[1].abs() <= 1e-4, "{v:?}");
    }
}

#[test]
fn boundary_layer_profile_has_finite_image() {
    let p = GasParams::new(1.0, 0.1, 0.2438, 1.0, 0.001).unwrap();
    let v = psi(IntegrationConstants::new(-18.35, 0.5184), &p, &shooting_config()).unwrap();
    assert!(v.iter().all(|x| x.is_finite() && *x > 0.0), "{v:?}");
}

#[test]
fn infeasible_constant_rejected() {
    let p = sets()[2];
    let c = IntegrationConstants::new(0.0, -2.0);
    assert!(matches!(psi(c, &p, &shooting_config()), Err(SteadyError::InfeasibleConstant { .. })));
    assert!(matches!(dpsi(c, &p, &shooting_config()), Err(SteadyError::InfeasibleConstant { .. })));
}

#[test]
fn invalid_targets_rejected() {
    assert_eq!(DataTarget::new(0.0, 1.0), Err(SteadyError::InvalidTarget));
    assert_eq!(DataTarget::new(1.0, f64::NAN), Err(SteadyError::InvalidTarget));
    let p = sets()[2];
    let bad = DataTarget { u1: -1.0, e1: 1.0 };
    assert_eq!(solve_for_data(bad, &p, &SeedPolicy::default()).unwrap_err(), SteadyError::InvalidTarget);
}

#[test]
fn constant_data_returns_constant_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let p = GasParams::new(
            rng.gen_range(0.2..1.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.5..4.0),
            1.0,
            rng.gen_range(0.1..2.0),
        )
        .unwrap();
        let r = solve_for_data(DataTarget::new(p.u0, p.e0).unwrap(), &p, &SeedPolicy::default()).unwrap();
        assert!(r.c.dist(constant_constants(&p)) <= 1e-10, "{p:?}: {:?}", r.c);
        assert!(r.residual <= 1e-8);
        assert_eq!(r.roots.len(), 1, "{:?}", r.roots);
    }
}

#[test]
fn reachable_targets_are_solved_uniquely() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = sets()[0];
    for c in random_feasible(&p, &mut rng, 4) {
        let v = psi(c, &p, &shooting_config()).unwrap();
        let r = solve_for_data(DataTarget::new(v[0], v[1]).unwrap(), &p, &SeedPolicy::default()).unwrap();
        assert!(r.residual <= 1e-8, "{r:?}");
        assert_eq!(r.roots.len(), 1, "{:?}", r.roots);
        assert!(r.c.dist(c) <= 1e-6 * (1.0 + c.c1.abs().max(c.c2.abs())), "{:?} vs {c:?}", r.c);
        assert!(r.det_dpsi > 0.0);
    }
}

#[test]
fn det_sign_constant_on_slice() {
    let p = sets()[1];
    let scan = det_dpsi_scan(&GridSpec::square(50.0, 11), &p, &shooting_config());
    assert!(scan.feasible > 10);
    assert_eq!(scan.sign, Some(1));
    assert!(scan.min_abs > 0.0);
}

#[test]
fn seed_policy_rejects_unknown_keys() {
    assert!(serde_json::from_str::<SeedPolicy>(r#"{"n": 5}"#).is_ok());
    assert!(serde_json::from_str::<SeedPolicy>(r#"{"seeds": 5}"#).is_err());
}

#[test]
fn near_singular_target_is_one_root() {
    // u(1) ≈ 1.5e-3 and det dΨ ≈ 1e-5: unpolished runs from different seeds
    // stop up to 1e-4 apart along the weak direction
    let p = sets()[0];
    let src = IntegrationConstants::new(-49.548865761392697, -10.202104576655376);
    let v = psi(src, &p, &shooting_config()).unwrap();
    let rep = solve_for_data(DataTarget::new(v[0], v[1]).unwrap(), &p, &SeedPolicy::default()).unwrap();
    assert_eq!(rep.roots.len(), 1, "{:?}", rep.roots);
    assert!(rep.c.dist(src) <= 1e-8, "{:?}", rep.c);
    assert!(rep.residual <= 1e-12);
}
