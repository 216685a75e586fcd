use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use shocktube::local::{
    continue_in_entropy, hopf_scan, nullcline_grid, nullcline_nonuniqueness, shoot_config, standing_shock_for, truncate,
    whole_line_profile, ContinuationStep, HopfConfig, IntervalProfile, LocalError, LocalParams, NullclineConfig,
    ProfileConfig, WholeLineProfile,
};
use shocktube::spectral::EvansConfig;

use super::positive;
use crate::config::{numerical, CliError, RunConfig};
use crate::output::Output;
use crate::row;

fn local_error(e: LocalError) -> CliError {
    match e {
        LocalError::Invalid(_) | LocalError::InvalidParams | LocalError::OutOfDomain { .. } => CliError::Config(e.to_string()),
        _ => numerical(e),
    }
}

/// Right state, entropy continuation of the left state and transport coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShockSetup {
    pub rho_plus: f64,
    pub t_plus: f64,
    pub s_start: f64,
    pub s_target: f64,
    pub steps: usize,
    pub alpha: f64,
    pub kappa: f64,
}

impl Default for ShockSetup {
    fn default() -> Self {
        Self { rho_plus: 1.0, t_plus: 2.0, s_start: 1.0, s_target: -5.0, steps: 30, alpha: 1.0, kappa: 1.0 }
    }
}

impl ShockSetup {
    /// The weak shock: first genuine step of the continuation from `S₋ = 1`.
    pub fn weak() -> Self {
        Self { s_target: -0.2, steps: 6, ..Self::default() }
    }

    fn params(&self) -> Result<LocalParams, CliError> {
        LocalParams::new(self.alpha, self.kappa).map_err(local_error)
    }

    fn continuation(&self) -> Result<Vec<ContinuationStep>, CliError> {
        if self.steps == 0 {
            return Err(CliError::Config("shock.steps: empty continuation".into()));
        }
        continue_in_entropy(self.s_start, self.s_target, self.steps, self.rho_plus, self.t_plus).map_err(local_error)
    }

    /// Continuation steps and the whole-line profile of the final shock.
    fn profile(&self, cfg: &ProfileConfig, out: &mut Output) -> Result<(Vec<ContinuationStep>, WholeLineProfile), CliError> {
        let params = self.params()?;
        let steps = out.time("continuation", || self.continuation())?;
        let last = steps.last().expect("continuation is nonempty").shock;
        let prof = out.time("profile", || whole_line_profile(&last, &params, cfg)).map_err(local_error)?;
        Ok((steps, prof))
    }
}

fn interval_rows(iv: &IntervalProfile, n: usize) -> Vec<Vec<crate::output::Cell>> {
    iv.sample(n).iter().map(|p| row![p[0], p[1], p[2], iv.m / p[1]]).collect()
}

// ---- local-shock ----

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalShockParams {
    pub shock: ShockSetup,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalShockGrid {
    /// Samples of the final profile on `[−L, L]`.
    pub samples: usize,
}

impl Default for LocalShockGrid {
    fn default() -> Self {
        Self { samples: 2001 }
    }
}

pub(crate) fn local_shock(cfg: &RunConfig<LocalShockParams, LocalShockGrid, ProfileConfig>, out: &mut Output) -> Result<Value, CliError> {
    if cfg.grid.samples < 2 {
        return Err(CliError::Config("grid.samples: need at least 2 (empty grid)".into()));
    }
    let (steps, prof) = cfg.params.shock.profile(&cfg.tolerances, out)?;
    let rows: Vec<_> = steps
        .iter()
        .map(|s| {
            let (l, r) = (s.shock.left, s.shock.right);
            row![s.s_minus, l.rho, l.u, l.t, r.rho, r.u, r.t, s.shock.m, s.shock.c1, s.shock.c2, s.shock.flux_residual(), s.shock.is_lax()]
        })
        .collect();
    out.csv(
        "continuation.csv",
        &["s_minus", "rho_left", "u_left", "t_left", "rho_right", "u_right", "t_right", "m", "c1", "c2", "flux_residual", "lax"],
        &rows,
    )?;
    let l = prof.half_width;
    let rows: Vec<_> = prof.sample(-l, l, cfg.grid.samples).iter().map(|p| row![p[0], p[1], p[2], prof.shock.m / p[1]]).collect();
    out.csv("profile.csv", &["x", "u", "t", "rho"], &rows)?;
    Ok(json!({
        "steps": steps.len(),
        "shock": prof.shock,
        "flux_residual": prof.shock.flux_residual(),
        "half_width": l,
        "defect_left": prof.defect_left,
        "defect_right": prof.defect_right,
        "rhs_defect": prof.rhs_defect(4000),
    }))
}

// ---- local-nonuniqueness ----

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonuniquenessParams {
    pub shock: ShockSetup,
    pub xl: f64,
    pub xr: f64,
}

impl Default for NonuniquenessParams {
    fn default() -> Self {
        let n = NullclineConfig::default();
        Self { shock: ShockSetup::default(), xl: n.xl, xr: n.xr }
    }
}

/// Optional `(M1, M2)` map over a box of flux constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapGrid {
    pub c1: [f64; 2],
    pub c2: [f64; 2],
    pub n: [usize; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonuniquenessGrid {
    pub c2_step: f64,
    pub max_steps: usize,
    /// Samples for the separation metric and `profiles.csv`.
    pub samples: usize,
    pub map: Option<MapGrid>,
}

impl Default for NonuniquenessGrid {
    fn default() -> Self {
        let n = NullclineConfig::default();
        Self { c2_step: n.c2_step, max_steps: n.max_steps, samples: n.samples, map: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonuniquenessTol {
    /// Shooting tolerances.
    pub rtol: f64,
    pub atol: f64,
    pub evans: EvansConfig,
    pub profile: ProfileConfig,
}

impl Default for NonuniquenessTol {
    fn default() -> Self {
        let n = NullclineConfig::default();
        Self { rtol: n.rtol, atol: n.atol, evans: EvansConfig::default(), profile: ProfileConfig::default() }
    }
}

pub(crate) fn nonuniqueness(
    cfg: &RunConfig<NonuniquenessParams, NonuniquenessGrid, NonuniquenessTol>,
    out: &mut Output,
) -> Result<Value, CliError> {
    let (p, g, t) = (&cfg.params, &cfg.grid, &cfg.tolerances);
    let ncfg = NullclineConfig {
        xl: p.xl,
        xr: p.xr,
        c2_step: g.c2_step,
        max_steps: g.max_steps,
        rtol: t.rtol,
        atol: t.atol,
        samples: g.samples,
    };
    if g.max_steps == 0 || g.samples < 2 {
        return Err(CliError::Config("grid: max_steps and samples must be positive (empty grid)".into()));
    }
    if let Some(m) = &g.map {
        if m.n[0] < 2 || m.n[1] < 2 {
            return Err(CliError::Config("grid.map.n: need at least 2 points per axis (empty grid)".into()));
        }
    }
    let (_, prof) = p.shock.profile(&t.profile, out)?;
    if let Some(m) = &g.map {
        let cells = out.time("map", || nullcline_grid(&prof, &ncfg, m.c1, m.c2, m.n)).map_err(local_error)?;
        let rows: Vec<_> = cells.iter().map(|c| row![c[0], c[1], c[2], c[3]]).collect();
        out.csv("map.csv", &["c1", "c2", "m1", "m2"], &rows)?;
    }
    let rep = out.time("nullclines", || nullcline_nonuniqueness(&prof, &ncfg, &t.evans)).map_err(local_error)?;
    let rows: Vec<_> = rep.curve.iter().map(|c| row![c[0], c[1], c[2]]).collect();
    out.csv("curve.csv", &["c1", "c2", "m2"], &rows)?;
    let rows: Vec<_> = rep.intersections.iter().map(|c| row![c[0], c[1]]).collect();
    out.csv("intersections.csv", &["c1", "c2"], &rows)?;

    let iv = truncate(&prof, p.xl, p.xr).map_err(local_error)?;
    let icfg = shoot_config(t.rtol, t.atol);
    let shoot = |c: [f64; 2]| IntervalProfile::shoot_with(iv.xl, iv.xr, iv.right, iv.m, c, &iv.params, &icfg).map_err(local_error);
    let (a, b) = (shoot(rep.pair[0])?, shoot(rep.pair[1])?);
    let rows: Vec<_> = a
        .sample(g.samples)
        .iter()
        .zip(b.sample(g.samples))
        .map(|(x, y)| row![x[0], x[1], x[2], y[1], y[2]])
        .collect();
    out.csv("profiles.csv", &["x", "u_hat", "t_hat", "u_tilde", "t_tilde"], &rows)?;
    let rows = interval_rows(&iv, g.samples);
    out.csv("reference.csv", &["x", "u", "t", "rho"], &rows)?;
    Ok(json!({
        "interval": [p.xl, p.xr],
        "reference": rep.reference,
        "target": rep.target,
        "intersections": rep.intersections,
        "pair": rep.pair,
        "d0_signs": rep.d0_signs,
        "separation_u": rep.separation_u,
        "separation_t": rep.separation_t,
        "curve_points": rep.curve.len(),
    }))
}

// ---- local-hopf ----

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HopfParams {
    pub shock: ShockSetup,
    pub xl: f64,
    pub xr: f64,
}

impl Default for HopfParams {
    fn default() -> Self {
        Self { shock: ShockSetup::default(), xl: -4.3, xr: 4.3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HopfGrid {
    pub radius: f64,
    pub real_samples: usize,
    pub real_min: f64,
}

impl Default for HopfGrid {
    fn default() -> Self {
        let h = HopfConfig::default();
        Self { radius: h.radius, real_samples: h.real_samples, real_min: h.real_min }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HopfTol {
    /// Evans integration tolerances.
    pub rtol: f64,
    pub atol: f64,
    pub profile: ProfileConfig,
}

impl Default for HopfTol {
    fn default() -> Self {
        let h = HopfConfig::default();
        Self { rtol: h.rtol, atol: h.atol, profile: ProfileConfig::default() }
    }
}

pub(crate) fn hopf(cfg: &RunConfig<HopfParams, HopfGrid, HopfTol>, out: &mut Output) -> Result<Value, CliError> {
    let (p, g, t) = (&cfg.params, &cfg.grid, &cfg.tolerances);
    if g.real_samples < 2 {
        return Err(CliError::Config("grid.real_samples: need at least 2 (empty grid)".into()));
    }
    positive("grid.radius", g.radius)?;
    let hcfg = HopfConfig { radius: g.radius, real_samples: g.real_samples, real_min: g.real_min, rtol: t.rtol, atol: t.atol };
    let (_, prof) = p.shock.profile(&t.profile, out)?;
    let iv = truncate(&prof, p.xl, p.xr).map_err(local_error)?;
    let rep = out.time("hopf", || hopf_scan(&iv, &hcfg)).map_err(local_error)?;
    let rows: Vec<_> = rep.real_samples.iter().map(|(l, s)| row![*l, *s]).collect();
    out.csv("real_axis.csv", &["lambda", "sign"], &rows)?;
    let tr = &rep.trace;
    let rows: Vec<_> =
        (0..tr.s.len()).map(|i| row![tr.s[i], tr.lambda[i].re, tr.lambda[i].im, tr.log_d[i].re, tr.log_d[i].im]).collect();
    out.csv("contour.csv", &["s", "lambda_re", "lambda_im", "log_d_re", "log_d_im"], &rows)?;
    Ok(json!({
        "interval": [p.xl, p.xr],
        "d0_sign": rep.d0_sign,
        "real_axis_zero_free": rep.real_axis_zero_free,
        "radius": rep.radius,
        "winding": rep.winding,
        "evaluations": tr.evaluations,
        "unstable_pair_detected": rep.real_axis_zero_free && rep.winding.winding == 2,
    }))
}

// ---- standing-shock ----

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StandingParams {
    pub shock: ShockSetup,
}

impl Default for StandingParams {
    fn default() -> Self {
        Self { shock: ShockSetup::weak() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StandingGrid {
    /// Scale factors; each gives the piece `[−1/(2ε), 1/(2ε)]`.
    pub eps: Vec<f64>,
}

impl Default for StandingGrid {
    fn default() -> Self {
        Self { eps: vec![0.25, 0.125, 0.0625, 0.03125] }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyTol {
    pub evans: EvansConfig,
    pub profile: ProfileConfig,
}

pub(crate) fn standing_shock(cfg: &RunConfig<StandingParams, StandingGrid, StudyTol>, out: &mut Output) -> Result<Value, CliError> {
    let eps = &cfg.grid.eps;
    if eps.is_empty() {
        return Err(CliError::Config("grid.eps: empty grid".into()));
    }
    for &e in eps {
        positive("grid.eps", e)?;
    }
    let (_, prof) = cfg.params.shock.profile(&cfg.tolerances.profile, out)?;
    let l = prof.half_width;
    if let Some(e) = eps.iter().find(|&&e| 0.5 / e > l) {
        return Err(CliError::Config(format!("eps = {e}: piece exceeds the profile's half-width {l}")));
    }
    let rows = out.time("evans", || standing_shock_for(&prof, eps, &cfg.tolerances.evans)).map_err(local_error)?;
    let csv: Vec<_> = rows.iter().map(|r| row![r.eps, r.xl, r.xr, r.log_abs_d0, r.sign, r.d0()]).collect();
    out.csv("standing.csv", &["eps", "xl", "xr", "log_abs_d0", "sign", "d0"], &csv)?;
    let sign_constant = rows.windows(2).all(|w| w[0].sign == w[1].sign) && rows.iter().all(|r| r.sign != 0);
    let monotone = rows.windows(2).all(|w| w[1].log_abs_d0 > w[0].log_abs_d0);
    Ok(json!({
        "shock": prof.shock,
        "half_width": l,
        "rows": rows,
        "sign_constant": sign_constant,
        "log_abs_d0_monotone": monotone,
    }))
}
