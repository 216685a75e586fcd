use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use shocktube::contours::{winding, ContourKind, ContourSpec};
use shocktube::feasibility::{classify, scan, trace_boundary_rays, Axis, ClassifyOptions, GridSpec};
use shocktube::ode::IntegratorConfig;
use shocktube::polytropic::{
    constant_constants, simple_gas_nu, solve_profile, GasParams, IntegrationConstants, Method, ProfileFailure,
    ProfileSolution,
};
use shocktube::spectral::{d0_direct, evans, stability_index as index_of, EvansConfig, PolytropicBackground};
use shocktube::steady::{det2, dpsi, psi, shooting_config, solve_for_data, DataTarget, SeedPolicy};

use super::{check_axis, positive};
use crate::config::{config_error, numerical, CliError, RunConfig};
use crate::output::{Cell, Output};
use crate::row;

/// Polytropic gas; `nu = null` applies the simple-gas relation `16ν = α(27Γ + 12)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Gas {
    pub gamma: f64,
    pub alpha: f64,
    pub nu: Option<f64>,
    pub u0: f64,
    pub e0: f64,
}

impl Default for Gas {
    fn default() -> Self {
        Self { gamma: 2.0 / 3.0, alpha: 2.0, nu: None, u0: 1.0, e0: 2.0 }
    }
}

impl Gas {
    pub fn boundary_layer() -> Self {
        Self { gamma: 1.0, alpha: 0.1, nu: Some(0.2438), u0: 1.0, e0: 0.001 }
    }

    pub fn params(&self) -> Result<GasParams, CliError> {
        let nu = self.nu.unwrap_or_else(|| simple_gas_nu(self.gamma, self.alpha));
        GasParams::new(self.gamma, self.alpha, nu, self.u0, self.e0).map_err(config_error)
    }
}

/// A gas with integration constants: `c` absolute, `dc` an offset from the
/// constant-solution constants, neither means the constant solution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Case {
    pub gas: Gas,
    pub c: Option<[f64; 2]>,
    pub dc: Option<[f64; 2]>,
}

impl Case {
    pub fn boundary_layer() -> Self {
        Self { gas: Gas::boundary_layer(), c: Some([-18.35, 0.5184]), dc: None }
    }

    pub fn resolve(&self) -> Result<(GasParams, IntegrationConstants), CliError> {
        let p = self.gas.params()?;
        let centre = constant_constants(&p);
        let c = match (self.c, self.dc) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either `c` or `dc`, not both".into())),
            (Some(c), None) => IntegrationConstants::new(c[0], c[1]),
            (None, Some(d)) => centre.offset(d[0], d[1]),
            (None, None) => centre,
        };
        if !(c.c1.is_finite() && c.c2.is_finite()) {
            return Err(CliError::Config("integration constants must be finite".into()));
        }
        Ok((p, c))
    }
}

/// Integrator tolerances; unset entries keep the command's default.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tol {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
}

impl Tol {
    pub fn apply(&self, base: IntegratorConfig) -> Result<IntegratorConfig, CliError> {
        let rtol = positive("rtol", self.rtol.unwrap_or(base.rtol))?;
        let atol = positive("atol", self.atol.unwrap_or(base.atol))?;
        Ok(base.with_tolerances(rtol, atol))
    }
}

fn failure_label(f: &ProfileFailure) -> String {
    match f {
        ProfileFailure::ENegative { x } => format!("e reaches zero at x = {x}"),
        ProfileFailure::UNegative { x, .. } => format!("u reaches zero at x = {x}"),
        ProfileFailure::Blowup { x } => format!("blowup at x = {x}"),
        ProfileFailure::MinStep { x } => format!("step size collapse at x = {x}"),
        ProfileFailure::Solver(e) => e.to_string(),
    }
}

// ---- feasible-scan ----

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeasibleParams {
    pub gas: Gas,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeasibleGrid {
    pub dc1: Axis,
    pub dc2: Axis,
    /// Boundary points traced on rays from the constant solution.
    pub boundary_points: usize,
    pub boundary_radius: f64,
}

impl Default for FeasibleGrid {
    fn default() -> Self {
        let g = GridSpec::square(50.0, 50);
        Self { dc1: g.dc1, dc2: g.dc2, boundary_points: 20, boundary_radius: 50.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeasibleTol {
    pub rtol: f64,
    pub atol: f64,
    pub method: Method,
    /// Bisection length at which a boundary point is accepted.
    pub boundary_tol: f64,
}

impl Default for FeasibleTol {
    fn default() -> Self {
        let c = IntegratorConfig::<f64>::default();
        Self { rtol: c.rtol, atol: c.atol, method: Method::Stiff, boundary_tol: 1e-10 }
    }
}

pub(crate) fn feasible_scan(cfg: &RunConfig<FeasibleParams, FeasibleGrid, FeasibleTol>, out: &mut Output) -> Result<Value, CliError> {
    let p = cfg.params.gas.params()?;
    let g = &cfg.grid;
    check_axis("grid.dc1", g.dc1.lo, g.dc1.hi, g.dc1.n)?;
    check_axis("grid.dc2", g.dc2.lo, g.dc2.hi, g.dc2.n)?;
    positive("grid.boundary_radius", g.boundary_radius)?;
    let t = &cfg.tolerances;
    positive("tolerances.boundary_tol", t.boundary_tol)?;
    let opts = ClassifyOptions { cfg: Tol { rtol: Some(t.rtol), atol: Some(t.atol) }.apply(IntegratorConfig::default())?, method: t.method };

    let res = out.time("scan", || scan(&GridSpec { dc1: g.dc1, dc2: g.dc2 }, &p, &opts));
    let mut rows = Vec::with_capacity(res.cells.len());
    for i in 0..res.dc1.len() {
        for j in 0..res.dc2.len() {
            let cell = res.cell(i, j);
            let (class, x, err) = match &cell.class {
                Ok(k) => (k.label().to_string(), k.x_star().unwrap_or(f64::NAN), String::new()),
                Err(e) => ("error".to_string(), f64::NAN, e.clone()),
            };
            rows.push(row![i, j, res.dc1[i], res.dc2[j], cell.c.c1, cell.c.c2, class, x, err]);
        }
    }
    out.csv("feasible.csv", &["i", "j", "dc1", "dc2", "c1", "c2", "class", "x_star", "error"], &rows)?;
    let counts = res.counts();
    if counts.failed == res.cells.len() {
        return Err(numerical("every cell failed to integrate"));
    }

    let centre = res.center;
    let centre_class = classify(centre, &p, &opts).map_err(numerical)?;
    let pts = out.time("boundary", || trace_boundary_rays(&p, &opts, g.boundary_points, g.boundary_radius, t.boundary_tol));
    let rows: Vec<Vec<Cell>> =
        pts.iter().map(|b| row![b.c.c1, b.c.c2, b.c_outside.c1, b.c_outside.c2, b.u1, b.e1, b.min_u, b.min_e]).collect();
    out.csv("boundary.csv", &["c1", "c2", "c1_outside", "c2_outside", "u1", "e1", "min_u", "min_e"], &rows)?;
    let max_e1 = pts.iter().map(|b| b.e1.abs()).fold(0.0, f64::max);
    Ok(json!({
        "params": p,
        "c_star": centre,
        "c_star_class": centre_class.label(),
        "cells": res.cells.len(),
        "counts": counts,
        "boundary_points": pts.len(),
        "boundary_max_abs_e1": max_e1,
    }))
}

// ---- profile ----

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileGrid {
    pub samples: usize,
}

impl Default for ProfileGrid {
    fn default() -> Self {
        Self { samples: 1001 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileTol {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub method: Method,
}

impl Default for ProfileTol {
    fn default() -> Self {
        Self { rtol: None, atol: None, method: Method::Rk45 }
    }
}

fn profile_rows(sol: &ProfileSolution, n: usize) -> Vec<Vec<Cell>> {
    (0..n)
        .map(|k| {
            let x = k as f64 / (n - 1) as f64;
            let [u, e] = sol.state(x);
            row![x, u, e, sol.params.u0 / u]
        })
        .collect()
}

pub(crate) fn profile(cfg: &RunConfig<Case, ProfileGrid, ProfileTol>, out: &mut Output) -> Result<Value, CliError> {
    let (p, c) = cfg.params.resolve()?;
    if cfg.grid.samples < 2 {
        return Err(CliError::Config("grid.samples: need at least 2 (empty grid)".into()));
    }
    let t = &cfg.tolerances;
    let icfg = Tol { rtol: t.rtol, atol: t.atol }.apply(IntegratorConfig::default())?;
    let sol = out
        .time("solve", || solve_profile(c, &p, &icfg, t.method))
        .map_err(|f| numerical(format!("no positive profile: {}", failure_label(&f))))?;
    out.csv("profile.csv", &["x", "u", "e", "rho"], &profile_rows(&sol, cfg.grid.samples))?;
    Ok(json!({ "params": p, "c": c, "endpoint": sol.endpoint(), "residual": sol.residual, "mesh_points": sol.mesh().len() }))
}

// ---- solve-data ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveParams {
    pub gas: Gas,
    /// `(u(1), e(1))` targets; empty with no random targets means `(u0, e0)`.
    pub targets: Vec<[f64; 2]>,
    /// Additional reachable targets `Ψ(c)` at random feasible `c`.
    pub random_targets: usize,
    pub random_half_width: f64,
    pub seed: u64,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self { gas: Gas::default(), targets: Vec::new(), random_targets: 0, random_half_width: 50.0, seed: 0 }
    }
}

/// Multistart seed grid about the constant solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedGrid {
    pub half_width: f64,
    pub n: usize,
    /// `0` runs every feasible seed.
    pub max_starts: usize,
}

impl Default for SeedGrid {
    fn default() -> Self {
        let s = SeedPolicy::default();
        Self { half_width: s.half_width, n: s.n, max_starts: s.max_starts }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveTol {
    pub rtol: f64,
    pub atol: f64,
    pub newton_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolveTol {
    fn default() -> Self {
        let s = SeedPolicy::default();
        Self { rtol: s.cfg.rtol, atol: s.cfg.atol, newton_tol: s.tol, max_iterations: s.max_iterations }
    }
}

pub(crate) fn solve_data(cfg: &RunConfig<SolveParams, SeedGrid, SolveTol>, out: &mut Output) -> Result<Value, CliError> {
    let sp = &cfg.params;
    let p = sp.gas.params()?;
    let (g, t) = (&cfg.grid, &cfg.tolerances);
    if g.n == 0 {
        return Err(CliError::Config("grid.n: empty seed grid".into()));
    }
    positive("grid.half_width", g.half_width)?;
    positive("tolerances.newton_tol", t.newton_tol)?;
    let policy = SeedPolicy {
        half_width: g.half_width,
        n: g.n,
        max_starts: g.max_starts,
        max_iterations: t.max_iterations,
        tol: t.newton_tol,
        cfg: Tol { rtol: Some(t.rtol), atol: Some(t.atol) }.apply(shooting_config())?,
    };
    let mut targets: Vec<([f64; 2], Option<IntegrationConstants>)> = sp.targets.iter().map(|&v| (v, None)).collect();
    if sp.random_targets > 0 {
        positive("params.random_half_width", sp.random_half_width)?;
        let mut rng = ChaCha8Rng::seed_from_u64(sp.seed);
        let centre = constant_constants(&p);
        let mut tries = 0;
        while targets.len() < sp.targets.len() + sp.random_targets {
            tries += 1;
            if tries > 1000 * sp.random_targets {
                return Err(numerical("could not find enough feasible constants for random targets"));
            }
            let h = sp.random_half_width;
            let c = centre.offset(rng.gen_range(-h..h), rng.gen_range(-h..h));
            if let Ok(v) = psi(c, &p, &policy.cfg) {
                if v[1] > 1e-6 {
                    targets.push((v, Some(c)));
                }
            }
        }
    }
    if targets.is_empty() {
        targets.push(([p.u0, p.e0], None));
    }
    for (v, _) in &targets {
        DataTarget::new(v[0], v[1]).map_err(|e| CliError::Config(format!("target {v:?}: {e}")))?;
    }

    let mut rows = Vec::new();
    let mut root_rows = Vec::new();
    let mut failures = 0;
    let reports = out.time("solve", || {
        targets.iter().map(|(v, _)| solve_for_data(DataTarget { u1: v[0], e1: v[1] }, &p, &policy)).collect::<Vec<_>>()
    });
    for (k, ((v, src), rep)) in targets.iter().zip(&reports).enumerate() {
        let (s1, s2) = src.map_or((f64::NAN, f64::NAN), |c| (c.c1, c.c2));
        match rep {
            Ok(r) => {
                rows.push(row![k, v[0], v[1], s1, s2, "ok", r.c.c1, r.c.c2, r.residual, r.det_dpsi, r.roots.len(), r.newton_iterations, r.seeds_tried, ""]);
                for (j, c) in r.roots.iter().enumerate() {
                    root_rows.push(row![k, j, c.c1, c.c2]);
                }
            }
            Err(e) => {
                failures += 1;
                let nan = f64::NAN;
                rows.push(row![k, v[0], v[1], s1, s2, "failed", nan, nan, nan, nan, 0usize, 0usize, 0usize, e.to_string()]);
            }
        }
    }
    out.csv(
        "solutions.csv",
        &["target", "u1", "e1", "source_c1", "source_c2", "status", "c1", "c2", "residual", "det_dpsi", "roots", "newton_iterations", "seeds_tried", "error"],
        &rows,
    )?;
    out.csv("roots.csv", &["target", "root", "c1", "c2"], &root_rows)?;
    if failures > 0 {
        return Err(numerical(format!("{failures} of {} targets not solved", targets.len())));
    }
    let counts: Vec<usize> = reports.iter().map(|r| r.as_ref().map_or(0, |r| r.roots.len())).collect();
    Ok(json!({
        "params": p,
        "c_star": constant_constants(&p),
        "targets": targets.len(),
        "root_counts": counts,
        "all_unique": counts.iter().all(|&n| n == 1),
        "max_residual": reports.iter().flatten().map(|r| r.residual).fold(0.0, f64::max),
        "first": reports[0].as_ref().ok().map(|r| r.c),
    }))
}

// ---- evans-contour / stability-index ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Cases {
    pub cases: Vec<Case>,
}

impl Default for Cases {
    fn default() -> Self {
        Self { cases: vec![Case::boundary_layer()] }
    }
}

/// Boundary of `{|λ| ≤ radius, Re λ ≥ 0}`, sampled adaptively.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourGrid {
    pub radius: f64,
    /// Trace the upper half and reflect (`D` is real on the real axis).
    pub symmetric: bool,
    pub arc_points: usize,
    pub diameter_points: usize,
    pub max_rel_change: f64,
    pub budget: usize,
}

impl Default for ContourGrid {
    fn default() -> Self {
        let s = ContourSpec::default();
        Self {
            radius: 100.0,
            symmetric: true,
            arc_points: s.arc_points,
            diameter_points: s.diameter_points,
            max_rel_change: s.max_rel_change,
            budget: s.budget,
        }
    }
}

impl ContourGrid {
    fn spec(&self) -> Result<ContourSpec, CliError> {
        let s = ContourSpec {
            kind: ContourKind::Semicircle { radius: self.radius },
            symmetric: self.symmetric,
            arc_points: self.arc_points,
            diameter_points: self.diameter_points,
            max_rel_change: self.max_rel_change,
            budget: self.budget,
            ..ContourSpec::default()
        };
        s.validate().map_err(|e| CliError::Config(format!("grid: {e}")))?;
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvansTol {
    pub evans: EvansConfig,
    /// Profile integration; defaults to the library's.
    pub profile: Tol,
}

fn solve_case(case: &Case, tol: &Tol) -> Result<Result<ProfileSolution, String>, CliError> {
    let (p, c) = case.resolve()?;
    let icfg = tol.apply(IntegratorConfig::default())?;
    Ok(solve_profile(c, &p, &icfg, Method::Rk45).map_err(|f| failure_label(&f)))
}

fn case_cells(case: &Case) -> Vec<Cell> {
    let (p, c) = case.resolve().expect("validated");
    row![p.gamma, p.alpha, p.nu, p.u0, p.e0, c.c1, c.c2]
}

const CASE_HEADER: [&str; 8] = ["case", "gamma", "alpha", "nu", "u0", "e0", "c1", "c2"];

pub(crate) fn evans_contour(cfg: &RunConfig<Cases, ContourGrid, EvansTol>, out: &mut Output) -> Result<Value, CliError> {
    let cases = &cfg.params.cases;
    if cases.is_empty() {
        return Err(CliError::Config("params.cases: empty list".into()));
    }
    for c in cases {
        c.resolve()?;
    }
    let spec = cfg.grid.spec()?;
    let ecfg = cfg.tolerances.evans;
    let mut summary_rows = Vec::new();
    let mut trace_rows = Vec::new();
    let mut windings = Vec::new();
    let mut failures = 0;
    for (k, case) in cases.iter().enumerate() {
        let mut base = row![k];
        base.extend(case_cells(case));
        let sol = match out.time(&format!("case {k} profile"), || solve_case(case, &cfg.tolerances.profile))? {
            Ok(s) => s,
            Err(reason) => {
                base.extend(row!["infeasible", 0i64, f64::NAN, f64::NAN, 0usize, reason]);
                summary_rows.push(base);
                windings.push(Value::Null);
                continue;
            }
        };
        let bg = PolytropicBackground::new(&sol);
        let res = out.time(&format!("case {k} contour"), || winding(&spec, |l| evans(&bg, l, &ecfg).map(|v| v.log)));
        match res {
            Ok((trace, rep)) => {
                for i in 0..trace.s.len() {
                    let (l, d) = (trace.lambda[i], trace.log_d[i]);
                    trace_rows.push(row![k, trace.s[i], l.re, l.im, d.re, d.im]);
                }
                base.extend(row!["ok", rep.winding, rep.closure_defect, rep.max_step, trace.evaluations, ""]);
                windings.push(json!(rep.winding));
            }
            Err(e) => {
                failures += 1;
                base.extend(row!["failed", 0i64, f64::NAN, f64::NAN, 0usize, e.to_string()]);
                windings.push(Value::Null);
            }
        }
        summary_rows.push(base);
    }
    let mut header = CASE_HEADER.to_vec();
    header.extend(["status", "winding", "closure_defect", "max_rel_step", "evaluations", "error"]);
    out.csv("windings.csv", &header, &summary_rows)?;
    out.csv("contour.csv", &["case", "s", "lambda_re", "lambda_im", "log_d_re", "log_d_im"], &trace_rows)?;
    if failures > 0 {
        return Err(numerical(format!("{failures} contour(s) failed")));
    }
    let computed: Vec<i64> = windings.iter().filter_map(Value::as_i64).collect();
    Ok(json!({
        "cases": cases.len(),
        "computed": computed.len(),
        "windings": windings,
        "all_zero": !computed.is_empty() && computed.iter().all(|&w| w == 0),
    }))
}

pub(crate) fn stability_index(cfg: &RunConfig<Cases, Value, EvansTol>, out: &mut Output) -> Result<Value, CliError> {
    if !cfg.grid.is_null() && cfg.grid != json!({}) {
        return Err(CliError::Config("stability-index takes no grid block".into()));
    }
    let cases = &cfg.params.cases;
    if cases.is_empty() {
        return Err(CliError::Config("params.cases: empty list".into()));
    }
    for c in cases {
        c.resolve()?;
    }
    let ecfg = cfg.tolerances.evans;
    let mut rows = Vec::new();
    let mut sample_rows = Vec::new();
    let mut mus = Vec::new();
    let mut failures = 0;
    for (k, case) in cases.iter().enumerate() {
        let mut base = row![k];
        base.extend(case_cells(case));
        match solve_case(case, &cfg.tolerances.profile)? {
            Err(reason) => {
                base.extend(row!["infeasible", 0i64, 0i64, 0i64, reason]);
                mus.push(Value::Null);
            }
            Ok(sol) => {
                let bg = PolytropicBackground::new(&sol);
                match out.time(&format!("case {k}"), || index_of(&bg, &ecfg)) {
                    Ok(s) => {
                        for (l, sg) in &s.samples {
                            sample_rows.push(row![k, *l, *sg]);
                        }
                        base.extend(row!["ok", s.mu, s.sign_d0, s.sign_infinity, ""]);
                        mus.push(json!(s.mu));
                    }
                    Err(e) => {
                        failures += 1;
                        base.extend(row!["failed", 0i64, 0i64, 0i64, e.to_string()]);
                        mus.push(Value::Null);
                    }
                }
            }
        }
        rows.push(base);
    }
    let mut header = CASE_HEADER.to_vec();
    header.extend(["status", "mu", "sign_d0", "sign_infinity", "error"]);
    out.csv("index.csv", &header, &rows)?;
    out.csv("samples.csv", &["case", "lambda", "sign"], &sample_rows)?;
    if failures > 0 {
        return Err(numerical(format!("{failures} index computation(s) failed")));
    }
    Ok(json!({ "cases": cases.len(), "mu": mus }))
}

// ---- d0-scan ----

/// Parameter sets are the product `gamma × alpha × e0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct D0Params {
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub e0: Vec<f64>,
    /// `null`: simple-gas relation per set.
    pub nu: Option<f64>,
    pub u0: f64,
}

impl Default for D0Params {
    fn default() -> Self {
        let g = Gas::default();
        Self { gamma: vec![g.gamma], alpha: vec![g.alpha], e0: vec![g.e0], nu: None, u0: g.u0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Every node of the `dc1 × dc2` grid.
    #[default]
    Grid,
    /// `random_count` feasible points per set, uniform in the grid's box.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct D0Grid {
    pub dc1: Axis,
    pub dc2: Axis,
    pub sampling: Sampling,
    pub random_count: usize,
    pub seed: u64,
}

impl Default for D0Grid {
    fn default() -> Self {
        let g = GridSpec::square(50.0, 11);
        Self { dc1: g.dc1, dc2: g.dc2, sampling: Sampling::Grid, random_count: 34, seed: 0 }
    }
}

struct D0Cell {
    c: IntegrationConstants,
    result: Option<Result<(f64, f64), String>>,
}

fn d0_cell(c: IntegrationConstants, p: &GasParams, icfg: &IntegratorConfig) -> D0Cell {
    let sol = match solve_profile(c, p, icfg, Method::Rk45) {
        Ok(s) => s,
        Err(_) => return D0Cell { c, result: None },
    };
    let r = d0_direct(&sol, icfg).map_err(|e| e.to_string()).and_then(|d0| {
        let det = det2(&dpsi(c, p, icfg).map_err(|e| e.to_string())?);
        Ok((d0, det))
    });
    D0Cell { c, result: Some(r) }
}

pub(crate) fn d0_scan(cfg: &RunConfig<D0Params, D0Grid, Tol>, out: &mut Output) -> Result<Value, CliError> {
    let dp = &cfg.params;
    let g = &cfg.grid;
    check_axis("grid.dc1", g.dc1.lo, g.dc1.hi, g.dc1.n)?;
    check_axis("grid.dc2", g.dc2.lo, g.dc2.hi, g.dc2.n)?;
    if dp.gamma.is_empty() || dp.alpha.is_empty() || dp.e0.is_empty() {
        return Err(CliError::Config("params: gamma, alpha and e0 need at least one value".into()));
    }
    if g.sampling == Sampling::Random && g.random_count == 0 {
        return Err(CliError::Config("grid.random_count: empty sample".into()));
    }
    let icfg = cfg.tolerances.apply(shooting_config())?;
    let mut sets = Vec::new();
    for &gamma in &dp.gamma {
        for &alpha in &dp.alpha {
            for &e0 in &dp.e0 {
                sets.push(Gas { gamma, alpha, nu: dp.nu, u0: dp.u0, e0 }.params()?);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let mut rows = Vec::new();
    let mut per_set = Vec::new();
    let (mut global_min, mut max_rel, mut signs_agree, mut failures) = (f64::INFINITY, 0.0f64, true, 0usize);
    for (k, p) in sets.iter().enumerate() {
        let centre = constant_constants(p);
        let cells: Vec<D0Cell> = out.time(&format!("set {k}"), || match g.sampling {
            Sampling::Grid => {
                let offsets: Vec<(f64, f64)> =
                    g.dc1.values().into_iter().flat_map(|a| g.dc2.values().into_iter().map(move |b| (a, b))).collect();
                offsets.par_iter().map(|&(a, b)| d0_cell(centre.offset(a, b), p, &icfg)).collect()
            }
            Sampling::Random => {
                let mut found = Vec::new();
                let mut tries = 0;
                while found.len() < g.random_count && tries < 1000 * g.random_count {
                    tries += 1;
                    let a = g.dc1.lo + (g.dc1.hi - g.dc1.lo) * rng.gen::<f64>();
                    let b = g.dc2.lo + (g.dc2.hi - g.dc2.lo) * rng.gen::<f64>();
                    let cell = d0_cell(centre.offset(a, b), p, &icfg);
                    if cell.result.is_some() {
                        found.push(cell);
                    }
                }
                found
            }
        });
        let mut set_min = f64::INFINITY;
        let mut feasible = 0;
        for cell in &cells {
            let det_factor = p.alpha * p.nu / (p.u0 * p.u0);
            match &cell.result {
                None => rows.push(row![k, p.gamma, p.alpha, p.nu, p.e0, cell.c.c1, cell.c.c2, "infeasible", f64::NAN, f64::NAN, f64::NAN, f64::NAN, ""]),
                Some(Err(e)) => {
                    failures += 1;
                    rows.push(row![k, p.gamma, p.alpha, p.nu, p.e0, cell.c.c1, cell.c.c2, "failed", f64::NAN, f64::NAN, f64::NAN, f64::NAN, e.clone()]);
                }
                Some(Ok((d0, det))) => {
                    feasible += 1;
                    let via_det = det_factor * det;
                    let rel = (d0 - via_det).abs() / d0.abs();
                    set_min = set_min.min(*d0);
                    max_rel = max_rel.max(rel);
                    signs_agree &= d0.signum() == via_det.signum();
                    rows.push(row![k, p.gamma, p.alpha, p.nu, p.e0, cell.c.c1, cell.c.c2, "feasible", *d0, *det, via_det, rel, ""]);
                }
            }
        }
        global_min = global_min.min(set_min);
        per_set.push(json!({ "gamma": p.gamma, "alpha": p.alpha, "nu": p.nu, "e0": p.e0, "feasible": feasible, "min_d0": set_min }));
    }
    out.csv(
        "d0.csv",
        &["set", "gamma", "alpha", "nu", "e0", "c1", "c2", "class", "d0", "det_dpsi", "det_formula", "rel_diff", "error"],
        &rows,
    )?;
    if failures > 0 {
        return Err(numerical(format!("{failures} feasible cell(s) failed")));
    }
    let feasible: usize = per_set.iter().map(|s| s["feasible"].as_u64().unwrap_or(0) as usize).sum();
    Ok(json!({
        "sets": per_set,
        "feasible": feasible,
        "min_d0": if feasible > 0 { json!(global_min) } else { Value::Null },
        "max_rel_diff": max_rel,
        "signs_agree": signs_agree,
    }))
}
