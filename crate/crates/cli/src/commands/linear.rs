use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use shocktube::linear::{check_speccond, steady_solve, LinearError, LinearSystem, LinearSystemSpec};

use crate::config::{numerical, CliError, RunConfig};
use crate::output::Output;

/// A system `A U' = (B U')'` with data `U(0) = u0`, `U_II(1) = u1_ii`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearParams {
    pub system: LinearSystemSpec,
    pub u0: Vec<f64>,
    pub u1_ii: Vec<f64>,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            system: LinearSystemSpec {
                r: 1,
                a: vec![vec![2.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, -1.0]],
                b22: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
            u0: vec![1.0, 0.0, 0.0],
            u1_ii: vec![1.0, 1.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearSteadyGrid {
    pub samples: usize,
}

impl Default for LinearSteadyGrid {
    fn default() -> Self {
        Self { samples: 129 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearTol {
    /// Distance to `2πik` counted as a hit; `null` scales with the spectral radius.
    pub speccond_tol: Option<f64>,
}

pub(crate) fn linear_steady(cfg: &RunConfig<LinearParams, LinearSteadyGrid, LinearTol>, out: &mut Output) -> Result<Value, CliError> {
    let p = &cfg.params;
    if cfg.grid.samples < 2 {
        return Err(CliError::Config("grid.samples: need at least 2 (empty grid)".into()));
    }
    if let Some(t) = cfg.tolerances.speccond_tol {
        super::positive("tolerances.speccond_tol", t)?;
    }
    let sys = LinearSystem::from_spec(&p.system).map_err(|e| CliError::Config(format!("params.system: {e}")))?;
    let (n, r) = (sys.n, sys.r);
    if p.u0.len() != n || p.u1_ii.len() != n - r {
        return Err(CliError::Config(format!("params: u0 needs {n} entries and u1_ii {}", n - r)));
    }
    let rep = check_speccond(&sys, cfg.tolerances.speccond_tol).map_err(|e| CliError::Config(e.to_string()))?;
    let eig: Vec<_> = rep.eigenvalues.iter().map(|l| [l.re, l.im]).collect();
    let viol: Vec<_> = rep.violations.iter().map(|l| [l.re, l.im]).collect();
    out.json("speccond.json", &json!({ "satisfied": rep.satisfied, "tol": rep.tol, "eigenvalues": eig, "violations": viol }))?;

    let u0 = DVector::from_vec(p.u0.clone());
    let u1 = DVector::from_vec(p.u1_ii.clone());
    let st = match out.time("solve", || steady_solve(&sys, &u0, &u1)) {
        Ok(s) => s,
        Err(e @ (LinearError::SingularMap { .. } | LinearError::SpecCondViolated(_))) => return Err(numerical(e)),
        Err(e) => return Err(CliError::Config(e.to_string())),
    };
    let mut header = vec!["x".to_string()];
    header.extend((0..n).map(|i| format!("u{i}")));
    header.push("residual".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<_> = st
        .sample(cfg.grid.samples)
        .into_iter()
        .map(|(x, u)| {
            let mut row = crate::row![x];
            row.extend(u.iter().map(|&v| v.into()));
            row.push(st.residual(x).into());
            row
        })
        .collect();
    out.csv("steady.csv", &header, &rows)?;
    let residual = (0..cfg.grid.samples)
        .map(|i| st.residual(i as f64 / (cfg.grid.samples - 1) as f64))
        .fold(0.0, f64::max);
    let end = st.state(1.0);
    let bc = end.rows(r, n - r).iter().zip(&p.u1_ii).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(json!({
        "n": n,
        "r": r,
        "speccond_satisfied": rep.satisfied,
        "condition": st.condition,
        "c1": st.c1.as_slice(),
        "c2": st.c2.as_slice(),
        "max_residual": residual,
        "boundary_defect": bc,
    }))
}
