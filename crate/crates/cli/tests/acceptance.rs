//! Acceptance run: one PASS/FAIL line per criterion, exercised through the
//! command layer where a command exists. Criteria 7 and 8 are known not to
//! reproduce; their lines are printed but do not fail the run.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use shocktube::contours::{winding, ContourSpec};
use shocktube::feasibility::linspace;
use shocktube::local::eos;
use shocktube::ode::{integrate_rk45, integrate_stiff, IntegratorConfig};
use shocktube::polytropic::{
    constant_constants, simple_gas_nu, solve_profile, GasParams, IntegrationConstants, Method, ProfileSolution,
};
use shocktube::spectral::{evans, EvansConfig, PolytropicBackground};
use shocktube_cli::{run, CliError, CommandName, RunOutcome};

const KNOWN_FAILURES: [usize; 2] = [7, 8];

struct Ctx {
    root: PathBuf,
    results: Vec<(usize, bool)>,
}

impl Ctx {
    fn run(&self, cmd: CommandName, name: &str, mut cfg: Value) -> Result<RunOutcome, CliError> {
        cfg["output_dir"] = json!(self.root.join(name));
        run(cmd, cfg)
    }

    fn report(&mut self, n: usize, pass: bool, t0: Instant, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        let known = if !pass && KNOWN_FAILURES.contains(&n) { " (known, see README)" } else { "" };
        println!("criterion {n:>2}: {tag}{known} [{:.1} s] {detail}", t0.elapsed().as_secs_f64());
        self.results.push((n, pass));
    }
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn gas(gamma: f64, alpha: f64, e0: f64) -> GasParams {
    GasParams::new(gamma, alpha, simple_gas_nu(gamma, alpha), 1.0, e0).unwrap()
}

// ---- 1 ----

fn feasible_set(ctx: &mut Ctx) {
    let t0 = Instant::now();
    let cfg = json!({
        "params": { "gas": { "gamma": 2.0 / 3.0, "alpha": 2.0, "nu": 3.75, "u0": 1.0, "e0": 2.0 } },
        "grid": { "dc1": { "lo": -50.0, "hi": 50.0, "n": 50 }, "dc2": { "lo": -50.0, "hi": 50.0, "n": 50 },
                  "boundary_points": 20 },
    });
    let (pass, detail) = match ctx.run(CommandName::FeasibleScan, "c01_feasible", cfg) {
        Ok(o) => {
            let s = &o.summary;
            let c = &s["counts"];
            let strata = ["feasible", "e_negative", "u_negative", "blowup"].map(|k| c[k].as_u64().unwrap_or(0));
            let secs = t0.elapsed().as_secs_f64();
            let e1 = f(&s["boundary_max_abs_e1"]);
            let pass = strata.iter().all(|&n| n > 0)
                && s["c_star_class"] == "feasible"
                && s["boundary_points"] == 20
                && e1 <= 1e-4
                && secs <= 120.0;
            (pass, format!("strata (F, E-, U-, B) = {strata:?}, c* feasible, 20 boundary points max|e(1)| = {e1:.1e}"))
        }
        Err(e) => (false, e.to_string()),
    };
    ctx.report(1, pass, t0, detail);
}

// ---- 2 ----

/// Subsample of the parameter grid `{2/3, 2/5, 1} × lin(0.1, 2, 10) ×
/// lin(0.001, 10, 30) × lin(−50, 50, 50)²`: α indices 0, 4, 9 and e0
/// indices 0, 14, 29, with Δc the grid node (24, 24) or, when that is not
/// feasible, the nearest feasible node.
fn subsample_cases() -> Vec<Value> {
    let alpha = linspace(0.1, 2.0, 10);
    let e0 = linspace(0.001, 10.0, 30);
    let dc = linspace(-50.0, 50.0, 50);
    let mut order: Vec<(usize, usize)> = (0..50).flat_map(|i| (0..50).map(move |j| (i, j))).collect();
    order.sort_by_key(|&(i, j)| {
        let (a, b) = (i as i64 - 24, j as i64 - 24);
        (a * a + b * b, i, j)
    });
    let mut cases = Vec::new();
    for gamma in [2.0 / 3.0, 0.4, 1.0] {
        for a in [alpha[0], alpha[4], alpha[9]] {
            for e in [e0[0], e0[14], e0[29]] {
                let p = gas(gamma, a, e);
                let centre = constant_constants(&p);
                let &(i, j) = order
                    .iter()
                    .find(|&&(i, j)| {
                        solve_profile(centre.offset(dc[i], dc[j]), &p, &IntegratorConfig::default(), Method::Rk45).is_ok()
                    })
                    .expect("some feasible node");
                cases.push(json!({ "gas": { "gamma": gamma, "alpha": a, "nu": null, "u0": 1.0, "e0": e },
                                   "dc": [dc[i], dc[j]] }));
            }
        }
    }
    cases
}

fn winding_zero(ctx: &mut Ctx) {
    let t0 = Instant::now();
    let fig = json!({
        "params": { "cases": [ { "gas": { "gamma": 1.0, "alpha": 0.1, "nu": 0.2438, "u0": 1.0, "e0": 0.001 },
                                 "c": [-18.35, 0.5184] } ] },
        "grid": { "radius": 100.0, "max_rel_change": 0.2 },
    });
    let fig_ok = match ctx.run(CommandName::EvansContour, "c02_boundary_layer", fig) {
        Ok(o) => {
            let rows = fs::read_to_string(o.dir.join("windings.csv")).unwrap();
            let step: f64 = rows.lines().nth(1).unwrap().split(',').nth(11).unwrap().parse().unwrap();
            let pass = o.summary["windings"] == json!([0]) && step <= 0.2 && t0.elapsed().as_secs_f64() <= 600.0;
            (pass, format!("boundary_layer winding {} with max relative step {step:.3}", o.summary["windings"][0]))
        }
        Err(e) => (false, format!("boundary_layer: {e}")),
    };
    let t1 = Instant::now();
    let cases = subsample_cases();
    let sub = match ctx.run(CommandName::EvansContour, "c02_subsample", json!({ "params": { "cases": cases } })) {
        Ok(o) => {
            let w = o.summary["windings"].as_array().cloned().unwrap_or_default();
            let zeros = w.iter().filter(|v| v.as_i64() == Some(0)).count();
            (zeros == 27, format!("{zeros}/27 subsample contours give winding 0 ({:.0} s)", t1.elapsed().as_secs_f64()))
        }
        Err(e) => (false, format!("subsample: {e}")),
    };
    ctx.report(2, fig_ok.0 && sub.0, t0, format!("{}; {}", fig_ok.1, sub.1));
}

// ---- 3, 4 ----

fn d0_identity(ctx: &mut Ctx) {
    let t0 = Instant::now();
    let cfg = json!({
        "params": { "gamma": [2.0 / 3.0, 0.4, 1.0], "alpha": [2.0], "e0": [2.0] },
        "grid": { "sampling": "random", "random_count": 34, "seed": 3 },
    });
    let (pass, detail) = match ctx.run(CommandName::D0Scan, "c03_d0_identity", cfg) {
        Ok(o) => {
            let s = &o.summary;
            let (n, rel) = (s["feasible"].as_u64().unwrap_or(0), f(&s["max_rel_diff"]));
            let pass = n >= 100 && rel <= 1e-6 && s["signs_agree"] == true;
            (pass, format!("{n} random feasible c over 3 sets, max relative difference {rel:.1e}, signs agree: {}", s["signs_agree"]))
        }
        Err(e) => (false, e.to_string()),
    };
    ctx.report(3, pass, t0, detail);
}

fn uniqueness(ctx: &mut Ctx) {
    let t0 = Instant::now();
    let alpha = linspace(0.1, 2.0, 10);
    let e0 = linspace(0.001, 10.0, 30);
    let desk = json!({
        "params": { "gamma": [2.0 / 3.0, 0.4, 1.0], "alpha": [alpha[0], alpha[4], alpha[9]],
                    "e0": [e0[0], e0[7], e0[14], e0[22], e0[29]] },
        "grid": { "dc1": { "lo": -50.0, "hi": 50.0, "n": 11 }, "dc2": { "lo": -50.0, "hi": 50.0, "n": 11 } },
    });
    let d0 = match ctx.run(CommandName::D0Scan, "c04_desk", desk) {
        Ok(o) => {
            let m = f(&o.summary["min_d0"]);
            (m > 0.0, format!("desk grid min D(0) = {m:.3e} over {} feasible cells", o.summary["feasible"]))
        }
        Err(e) => (false, e.to_string()),
    };
    let solve = json!({ "params": { "random_targets": 20, "seed": 11 } });
    let roots = match ctx.run(CommandName::SolveData, "c04_solve", solve) {
        Ok(o) => {
            let counts = o.summary["root_counts"].as_array().cloned().unwrap_or_default();
            let unique = counts.iter().filter(|c| c.as_u64() == Some(1)).count();
            (counts.len() == 20 && unique == 20, format!("{unique}/20 random targets have exactly one root"))
        }
        Err(e) => (false, e.to_string()),
    };
    ctx.report(4, d0.0 && roots.0, t0, format!("{}; {}", d0.1, roots.1));
}

// ---- 5 ----

fn constant_root(ctx: &mut Ctx) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut ok = 0;
    let mut errors = Vec::new();
    for k in 0..10 {
        let (gamma, alpha, e0) = (rng.gen_range(0.3..1.0), rng.gen_range(0.5..2.5), rng.gen_range(0.5..5.0));
        let cfg = json!({ "params": { "gas": { "gamma": gamma, "alpha": alpha, "nu": null, "u0": 1.0, "e0": e0 } } });
        match ctx.run(CommandName::SolveData, &format!("c05_set{k}"), cfg) {
            Ok(o) => {
                let (c, s) = (&o.summary["first"], &o.summary["c_star"]);
                let d = (f(&c["c1"]) - f(&s["c1"])).hypot(f(&c["c2"]) - f(&s["c2"]));
                worst = worst.max(d);
                ok += (d <= 1e-10) as usize;
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    let detail = format!("{ok}/10 parameter sets recover c*, max |c - c*| = {worst:.1e}{}", errors.first().map_or(String::new(), |e| format!("; {e}")));
    ctx.report(5, ok == 10, t0, detail);
}

// ---- 6 ----

fn rankine_hugoniot(ctx: &mut Ctx) {
    let t0 = Instant::now();
    let (pass, detail) = match ctx.run(CommandName::LocalShock, "c06_shock", json!({})) {
        Ok(o) => {
            let s = &o.summary["shock"];
            let got = [f(&s["left"]["rho"]), f(&s["left"]["u"]), f(&s["left"]["t"]), f(&s["right"]["u"])];
            let want = [0.0769, 13.53, 1.001, 1.041];
            let rel = got.iter().zip(want).map(|(g, w)| (g - w).abs() / w).fold(0.0, f64::max);
            let res = f(&o.summary["flux_residual"]);
            (rel <= 0.01 && res <= 1e-10, format!("(rho-, u-, T-, u+) = ({:.4}, {:.2}, {:.4}, {:.4}), max rel dev {rel:.1e}, flux residual {res:.1e}", got[0], got[1], got[2], got[3]))
        }
        Err(e) => (false, e.to_string()),
    };
    ctx.report(6, pass, t0, detail);
}

// ---- 7, 8, 9 ----

fn nonuniqueness(ctx: &mut Ctx) {
    let t0 = Instant::now();
    let mut parts = Vec::new();
    let mut any = false;
    for (name, rtol, atol) in [("default", 1e-12, 1e-13), ("tightened", 1e-13, 1e-14)] {
        let cfg = json!({ "tolerances": { "rtol": rtol, "atol": atol } });
        match ctx.run(CommandName::LocalNonuniqueness, &format!("c07_{name}"), cfg) {
            Ok(o) => {
                let s = &o.summary;
                let n = s["intersections"].as_array().map_or(0, Vec::len);
                let (rt, ru) = (f(&s["separation_t"]["ratio"]), f(&s["separation_u"]["ratio"]));
                let pass = n >= 2 && (0.1..=0.3).contains(&rt);
                any |= pass;
                parts.push(format!("{name} (rtol {rtol:e}): {n} intersections, T separation {rt:.3}, u separation {ru:.3}"));
            }
            Err(e) => parts.push(format!("{name}: {e}")),
        }
    }
    ctx.report(7, any, t0, parts.join("; "));
}

fn hopf(ctx: &mut Ctx) {
    let t0 = Instant::now();
    let (pass, detail) = match ctx.run(CommandName::LocalHopf, "c08_hopf", json!({})) {
        Ok(o) => {
            let s = &o.summary;
            let w = s["winding"]["winding"].as_i64().unwrap_or(-1);
            let free = s["real_axis_zero_free"] == true;
            (free && w == 2, format!("real axis zero free: {free}, winding {w} (need 2), sign D(0) = {}", s["d0_sign"]))
        }
        Err(e) => (false, e.to_string()),
    };
    ctx.report(8, pass, t0, detail);
}

fn standing_shock(ctx: &mut Ctx) {
    let t0 = Instant::now();
    let (pass, detail) = match ctx.run(CommandName::StandingShock, "c09_standing", json!({})) {
        Ok(o) => {
            let rows = o.summary["rows"].as_array().cloned().unwrap_or_default();
            let finite = rows.len() == 4 && rows.iter().all(|r| f(&r["log_abs_d0"]).is_finite());
            let signs: Vec<i64> = rows.iter().map(|r| r["sign"].as_i64().unwrap_or(0)).collect();
            let pass = finite && o.summary["sign_constant"] == true;
            (pass, format!("weak shock, eps 1/4..1/32: signs {signs:?}, |D| > 0: {finite}"))
        }
        Err(e) => (false, e.to_string()),
    };
    ctx.report(9, pass, t0, detail);
}

// ---- 10 ----

/// `S⁻¹M` with `S` diagonal positive, `M` symmetric with SPD upper block,
/// and `B22 = S22⁻¹(P + K)`, `P` SPD, `K` skew; resampled until `B22 + B22ᵀ > 0`.
fn symmetrizable(rng: &mut ChaCha8Rng) -> (usize, DMatrix<f64>, DMatrix<f64>) {
    loop {
        let r = rng.gen_range(0..=2usize);
        let k = rng.gen_range(1..=3usize);
        let n = r + k;
        let s = DVector::from_fn(n, |_, _| rng.gen_range(0.5..2.0));
        let mut m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        m = (&m + m.transpose()) * 0.5;
        if r > 0 {
            let g = DMatrix::from_fn(r, r, |_, _| rng.gen_range(-1.0..1.0));
            let spd = &g * g.transpose() + DMatrix::identity(r, r) * 0.5;
            m.view_mut((0, 0), (r, r)).copy_from(&spd);
        }
        let a = DMatrix::from_fn(n, n, |i, j| m[(i, j)] / s[i]);
        let g = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
        let kk = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
        let pk = &g * g.transpose() + DMatrix::identity(k, k) * 0.5 + (&kk - kk.transpose()) * 0.5;
        let b22 = DMatrix::from_fn(k, k, |i, j| pk[(i, j)] / s[r + i]);
        if (&b22 + b22.transpose()).cholesky().is_some() {
            return (r, a, b22);
        }
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Oracle: classical RK4 on the integrated system, with `C2` fixed by
/// superposition of shots.
fn rk4_oracle(r: usize, a: &DMatrix<f64>, b22: &DMatrix<f64>, u0: &DVector<f64>, u1: &DVector<f64>, per: usize, samples: usize) -> Vec<DVector<f64>> {
    let n = a.nrows();
    let k = n - r;
    let a11_inv = a.view((0, 0), (r, r)).into_owned().try_inverse().unwrap_or_else(|| DMatrix::zeros(0, 0));
    let b_inv = b22.clone().try_inverse().unwrap();
    let c1 = a.rows(0, r) * u0;
    let full = |y: &DVector<f64>| -> DVector<f64> {
        let ui = if r > 0 { &a11_inv * (&c1 - a.view((0, r), (r, k)) * y) } else { DVector::zeros(0) };
        DVector::from_iterator(n, ui.iter().chain(y.iter()).copied())
    };
    let rhs = |y: &DVector<f64>, c2: &DVector<f64>| &b_inv * (a.rows(r, k) * full(y) + c2);
    let shoot = |c2: &DVector<f64>, record: bool| -> (DVector<f64>, Vec<DVector<f64>>) {
        let steps = per * (samples - 1);
        let h = 1.0 / steps as f64;
        let mut y = u0.rows(r, k).into_owned();
        let mut out = vec![full(&y)];
        for i in 0..steps {
            let k1 = rhs(&y, c2);
            let k2 = rhs(&(&y + &k1 * (h / 2.0)), c2);
            let k3 = rhs(&(&y + &k2 * (h / 2.0)), c2);
            let k4 = rhs(&(&y + &k3 * h), c2);
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            if record && (i + 1) % per == 0 {
                out.push(full(&y));
            }
        }
        (y, out)
    };
    let base = shoot(&DVector::zeros(k), false).0;
    let mut jac = DMatrix::zeros(k, k);
    for j in 0..k {
        let e = DVector::from_fn(k, |i, _| if i == j { 1.0 } else { 0.0 });
        jac.set_column(j, &(shoot(&e, false).0 - &base));
    }
    let c2 = jac.lu().solve(&(u1 - &base)).unwrap();
    shoot(&c2, true).1
}

fn linear_general(ctx: &mut Ctx) {
    let t0 = Instant::now();
    let rot = json!({ "params": {
        "system": { "r": 0, "a": [[0.0, 2.0 * PI], [-2.0 * PI, 0.0]], "b22": [[1.0, 0.0], [0.0, 1.0]] },
        "u0": [1.0, 0.0], "u1_ii": [0.0, 1.0] } });
    let rotation = match ctx.run(CommandName::LinearSteady, "c10_rotation", rot) {
        Err(CliError::Numerical(msg)) => {
            let sc: Value = serde_json::from_str(&fs::read_to_string(ctx.root.join("c10_rotation/speccond.json")).unwrap()).unwrap();
            sc["satisfied"] == false && msg.contains("singular")
        }
        _ => false,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut satisfied = 0;
    for i in 0..100 {
        let (r, a, b22) = symmetrizable(&mut rng);
        let n = a.nrows();
        let cfg = json!({ "params": { "system": { "r": r, "a": rows_of(&a), "b22": rows_of(&b22) },
                                      "u0": vec![1.0; n], "u1_ii": vec![0.5; n - r] } });
        if let Ok(o) = ctx.run(CommandName::LinearSteady, &format!("c10_sym/{i}"), cfg) {
            satisfied += (o.summary["speccond_satisfied"] == true) as usize;
        }
    }
    let mut worst = 0.0f64;
    let mut matched = 0;
    for i in 0..50 {
        let (r, a, b22) = symmetrizable(&mut rng);
        let n = a.nrows();
        let u0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let u1 = DVector::from_fn(n - r, |_, _| rng.gen_range(-1.0..1.0));
        let cfg = json!({ "params": { "system": { "r": r, "a": rows_of(&a), "b22": rows_of(&b22) },
                                      "u0": u0.as_slice(), "u1_ii": u1.as_slice() },
                          "grid": { "samples": 65 } });
        let Ok(o) = ctx.run(CommandName::LinearSteady, &format!("c10_oracle/{i}"), cfg) else { continue };
        let oracle = rk4_oracle(r, &a, &b22, &u0, &u1, 64, 65);
        let mut rd = csv::Reader::from_path(o.dir.join("steady.csv")).unwrap();
        let mut err = 0.0f64;
        for (rec, want) in rd.records().zip(&oracle) {
            let rec = rec.unwrap();
            for j in 0..n {
                let got: f64 = rec[j + 1].parse().unwrap();
                err = err.max((got - want[j]).abs() / (1.0 + want[j].abs()));
            }
        }
        worst = worst.max(err);
        matched += (err <= 1e-8) as usize;
    }
    let pass = rotation && satisfied == 100 && matched == 50;
    ctx.report(
        10,
        pass,
        t0,
        format!("rotation flagged (speccond + singular map): {rotation}; {satisfied}/100 symmetrizable satisfy speccond; {matched}/50 match the RK4 oracle (max rel err {worst:.1e})"),
    );
}

// ---- 11 ----

fn properties(ctx: &mut Ctx) {
    let t0 = Instant::now();
    let mut checks: Vec<(&str, bool)> = Vec::new();

    let cfg = IntegratorConfig::default();
    let e = integrate_rk45(|_, y: &[f64], dy: &mut [f64]| dy[0] = y[0], 0.0, 1.0, &[1.0], &cfg, &[]).unwrap();
    let s = integrate_stiff(|_, y: &[f64], dy: &mut [f64]| dy[0] = -y[0], None, 0.0, 1.0, &[1.0], &cfg.with_tolerances(1e-8, 1e-10), &[]).unwrap();
    checks.push(("integrators", (e.last()[0] - 1f64.exp()).abs() <= 1e-9 && (s.last()[0] - (-1f64).exp()).abs() <= 1e-6));

    let p = GasParams::new(1.0, 0.1, 0.2438, 1.0, 0.001).unwrap();
    let fig: ProfileSolution = solve_profile(IntegrationConstants::new(-18.35, 0.5184), &p, &cfg, Method::Rk45).unwrap();
    let bg = PolytropicBackground::new(&fig);
    let ecfg = EvansConfig::default();
    let c = Complex64::new;
    let drift = [c(0.0, 0.0), c(0.0, 100.0), c(100.0, 0.0), c(70.0, 70.0)]
        .iter()
        .map(|&l| evans(&bg, l, &ecfg).unwrap().max_drift)
        .fold(0.0, f64::max);
    checks.push(("frame drift <= 1e-8", drift <= 1e-8));

    let real = evans(&bg, c(2.0, 0.0), &ecfg).unwrap().imag_ratio() <= 1e-8;
    let (a, b) = (evans(&bg, c(1.0, 1.0), &ecfg).unwrap().value(), evans(&bg, c(1.0, -1.0), &ecfg).unwrap().value());
    checks.push(("reality and conjugate symmetry", real && (a.conj() - b).norm() <= 1e-8 * a.norm()));

    let q = gas(2.0 / 3.0, 2.0, linspace(0.001, 10.0, 30)[14]);
    let qc = constant_constants(&q).offset(-1.0204, -1.0204);
    let qs = solve_profile(qc, &q, &cfg, Method::Rk45).unwrap();
    let qb = PolytropicBackground::new(&qs);
    let at = |xm: f64| EvansConfig { matching: Some(xm), ..EvansConfig::default() };
    let signs = [0.0, 2.0].iter().all(|&l| {
        evans(&qb, c(l, 0.0), &at(0.25)).unwrap().sign() == evans(&qb, c(l, 0.0), &at(0.75)).unwrap().sign()
    });
    let wind = |xm: f64| winding(&ContourSpec::semicircle(100.0).with_symmetry(true), |l| evans(&qb, l, &at(xm)).map(|v| v.log)).unwrap().1.winding;
    checks.push(("matching-point invariance of sign and winding", signs && wind(0.25) == wind(0.75)));

    checks.push(("profile first integrals <= 1e-8", fig.residual <= 1e-8 && qs.residual <= 1e-8));

    let mut eos_ok = true;
    for (rho, t) in [(1.0, 2.0), (0.3, 1.5), (2.5, 4.0), (0.0769, 1.001)] {
        let h = 1e-6;
        let d = |dr: f64, dt: f64| eos(rho + dr, t + dt).unwrap();
        let e_t = (d(0.0, h * t).e - d(0.0, -h * t).e) / (2.0 * h * t);
        let s_t = (d(0.0, h * t).s - d(0.0, -h * t).s) / (2.0 * h * t);
        let e_r = (d(h * rho, 0.0).e - d(-h * rho, 0.0).e) / (2.0 * h * rho);
        let s_r = (d(h * rho, 0.0).s - d(-h * rho, 0.0).s) / (2.0 * h * rho);
        let p = d(0.0, 0.0).p;
        // de = T dS − p dτ with τ = 1/ρ
        eos_ok &= (e_t - t * s_t).abs() <= 1e-6 * (1.0 + e_t.abs());
        eos_ok &= (e_r - (t * s_r + p / (rho * rho))).abs() <= 1e-6 * (1.0 + e_r.abs());
    }
    checks.push(("EOS identities", eos_ok));

    let scan = |w: usize, name: &str| {
        let cfg = json!({ "grid": { "dc1": { "lo": -50.0, "hi": 50.0, "n": 12 }, "dc2": { "lo": -50.0, "hi": 50.0, "n": 12 },
                                    "boundary_points": 4 }, "workers": w });
        let o = ctx.run(CommandName::FeasibleScan, name, cfg).unwrap();
        ["feasible.csv", "boundary.csv"].map(|f| fs::read(o.dir.join(f)).unwrap())
    };
    checks.push(("CSV determinism across worker counts", scan(1, "c11_w1") == scan(2, "c11_w2")));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let detail = if failed.is_empty() {
        format!("{} property checks: {}", checks.len(), checks.iter().map(|c| c.0).collect::<Vec<_>>().join(", "))
    } else {
        format!("failing: {}", failed.join(", "))
    };
    ctx.report(11, failed.is_empty(), t0, detail);
}

fn main() -> ExitCode {
    let root = std::env::temp_dir().join(format!("shocktube-acceptance-{}", std::process::id()));
    let mut ctx = Ctx { root: root.clone(), results: Vec::new() };
    let started = Instant::now();
    feasible_set(&mut ctx);
    winding_zero(&mut ctx);
    d0_identity(&mut ctx);
    uniqueness(&mut ctx);
    constant_root(&mut ctx);
    rankine_hugoniot(&mut ctx);
    nonuniqueness(&mut ctx);
    hopf(&mut ctx);
    standing_shock(&mut ctx);
    linear_general(&mut ctx);
    properties(&mut ctx);
    let passed = ctx.results.iter().filter(|r| r.1).count();
    println!("acceptance: {passed}/{} criteria pass ({:.0} s)", ctx.results.len(), started.elapsed().as_secs_f64());
    let _ = fs::remove_dir_all(Path::new(&root));
    let unexpected: Vec<usize> = ctx.results.iter().filter(|r| !r.1 && !KNOWN_FAILURES.contains(&r.0)).map(|r| r.0).collect();
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
