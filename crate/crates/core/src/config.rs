//! Tolerances and estimator schedules shared across modules.

use serde::{Deserialize, Serialize};

/// Absolute tolerance for set-membership and zero tests.
pub const TOL_MEMBERSHIP: f64 = 1e-9;
/// Interval endpoints from 1-D solution slices are located to this width.
pub const TOL_ROOT: f64 = 1e-8;
/// Optimal values are bracketed to this width.
pub const TOL_VAL: f64 = 1e-8;
/// Sampled difference quotients below this are treated as zero slope.
pub const TOL_SLOPE_ZERO: f64 = 1e-7;

/// Default radius schedule for slope estimators (coarse to fine).
pub const R_SCHEDULE: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
/// Default band schedule for outer-slope estimators.
pub const EPS_SCHEDULE: [f64; 4] = [1e-1, 3e-2, 1e-2, 3e-3];
/// Default radius schedule for modulus estimators.
pub const DELTA_SCHEDULE: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
/// Default number of sampled directions in dimension ≥ 2 (1-D uses {−1, +1}).
pub const DIRS_N: usize = 64;
/// Default per-axis lattice resolution.
pub const GRID_N: usize = 41;
/// Default relative slack applied when comparing empirical values to bounds.
pub const SLACK_REL: f64 = 0.10;
/// Estimated slopes below this threshold are treated as "not bounded away
/// from zero" when checking positivity hypotheses.
pub const SLOPE_POS_THRESHOLD: f64 = 5e-2;
/// Default sample count for convex-hull spot checks (fan bounds, validation).
pub const SAMPLE_N: usize = 512;

/// Membership/root/value tolerances, overridable per instance.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub membership: f64,
    pub root: f64,
    pub val: f64,
    pub slope_zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            membership: TOL_MEMBERSHIP,
            root: TOL_ROOT,
            val: TOL_VAL,
            slope_zero: TOL_SLOPE_ZERO,
        }
    }
}

/// Knobs shared by the estimator front ends. `Default` pins the values used
/// throughout the test suite; every field can be overridden per analysis.
#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    pub r_schedule: Vec<f64>,
    pub eps_schedule: Vec<f64>,
    pub delta_schedule: Vec<f64>,
    pub dirs_n: usize,
    pub grid_n: usize,
    /// Calmness localization radius; `None` means half the x-window
    /// half-width.
    pub zeta: Option<f64>,
    pub slack_rel: f64,
    pub slope_pos_threshold: f64,
    pub sample_n: usize,
    pub seed: u64,
    pub tol: Tolerances,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            r_schedule: R_SCHEDULE.to_vec(),
            eps_schedule: EPS_SCHEDULE.to_vec(),
            delta_schedule: DELTA_SCHEDULE.to_vec(),
            dirs_n: DIRS_N,
            grid_n: GRID_N,
            zeta: None,
            slack_rel: SLACK_REL,
            slope_pos_threshold: SLOPE_POS_THRESHOLD,
            sample_n: SAMPLE_N,
            seed: 0,
            tol: Tolerances::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn with_seed(seed: u64) -> Self {
        EstimatorConfig {
            seed,
            ..Self::default()
        }
    }
}
