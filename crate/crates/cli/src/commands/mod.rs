mod linear;
mod local;
mod poly;

use serde_json::Value;

pub use linear::{LinearParams, LinearSteadyGrid, LinearTol};
pub use local::{
    HopfGrid, HopfParams, HopfTol, LocalShockGrid, LocalShockParams, MapGrid, NonuniquenessGrid, NonuniquenessParams,
    NonuniquenessTol, ShockSetup, StandingGrid, StandingParams, StudyTol,
};
pub use poly::{
    Case, Cases, ContourGrid, D0Grid, D0Params, EvansTol, FeasibleGrid, FeasibleParams, FeasibleTol, Gas,
    ProfileGrid, ProfileTol, Sampling, SeedGrid, SolveParams, SolveTol, Tol,
};

use crate::config::{CliError, CommandName};
use crate::{execute, Dispatched};

pub(crate) fn dispatch(command: CommandName, value: Value, print: bool) -> Result<Dispatched, CliError> {
    use CommandName::*;
    match command {
        FeasibleScan => execute(command, value, print, poly::feasible_scan),
        Profile => execute(command, value, print, poly::profile),
        SolveData => execute(command, value, print, poly::solve_data),
        EvansContour => execute(command, value, print, poly::evans_contour),
        D0Scan => execute(command, value, print, poly::d0_scan),
        StabilityIndex => execute(command, value, print, poly::stability_index),
        LocalShock => execute(command, value, print, local::local_shock),
        LocalNonuniqueness => execute(command, value, print, local::nonuniqueness),
        LocalHopf => execute(command, value, print, local::hopf),
        LinearSteady => execute(command, value, print, linear::linear_steady),
        StandingShock => execute(command, value, print, local::standing_shock),
    }
}

/// `[lo, hi]` with `n` points, for config validation messages.
pub(crate) fn check_axis(name: &str, lo: f64, hi: f64, n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Config(format!("{name}: empty grid (n = 0)")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(CliError::Config(format!("{name}: need finite lo <= hi")));
    }
    Ok(())
}

pub(crate) fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite")))
    }
}
