//! Runtime monitors for the a priori estimates, the supersolution
//! inequality, and operator convergence.

mod dual;
mod mms;
mod supersolution;

pub use dual::{dual_norm_proxy, gradient_energy, h1_norm, helmholtz_solve, CG_RELATIVE_TOLERANCE};
pub use mms::{mms_convergence_study, MmsOperator, MmsRow};
pub use supersolution::{slack_with_rate, supersolution_residual, TestFunctionFamily};

use crate::error::DiagnosticsError;
use crate::grid::{Field, Grid};
use crate::kinetics::ModelParams;
use crate::stencil::{central_gradient, neumann_laplacian};
use crate::timestepper::{rates, SimState};

/// Hats per axis in the default supersolution test family.
pub const DEFAULT_HATS_PER_AXIS: usize = 5;

/// One sample of every monitored quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRow {
    pub t: f64,
    /// Step size behind the time differences in this row.
    pub dt: f64,
    pub grad_i_l2: f64,
    pub i_l2: f64,
    pub sqrt_s_lap_i_l2: f64,
    pub sqrt_eps_lap_i_l2: f64,
    pub dt_i_l2: f64,
    pub grad_s_l2: f64,
    pub dt_s_dual: f64,
    pub min_s: f64,
    pub max_s: f64,
    pub min_i: f64,
    pub max_i: f64,
    pub mass_s: f64,
    pub mass_i: f64,
    pub mass_r: f64,
    pub clamp_events: u64,
    pub supersolution_slack: f64,
}

impl DiagnosticsRow {
    /// Column order of the diagnostics CSV.
    pub const COLUMNS: [&'static str; 18] = [
        "t",
        "dt",
        "grad_i_l2",
        "i_l2",
        "sqrt_s_lap_i_l2",
        "sqrt_eps_lap_i_l2",
        "dt_i_l2",
        "grad_s_l2",
        "dt_s_dual",
        "min_s",
        "max_s",
        "min_i",
        "max_i",
        "mass_s",
        "mass_i",
        "mass_r",
        "clamp_events",
        "supersolution_slack",
    ];

    /// The seven norms bounded by the a priori estimates, with their column names.
    pub fn estimate_norms(&self) -> [(&'static str, f64); 7] {
        [
            ("grad_i_l2", self.grad_i_l2),
            ("i_l2", self.i_l2),
            ("sqrt_s_lap_i_l2", self.sqrt_s_lap_i_l2),
            ("sqrt_eps_lap_i_l2", self.sqrt_eps_lap_i_l2),
            ("dt_i_l2", self.dt_i_l2),
            ("grad_s_l2", self.grad_s_l2),
            ("dt_s_dual", self.dt_s_dual),
        ]
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let f = |v: f64| format!("{v:.16e}");
        vec![
            f(self.t),
            f(self.dt),
            f(self.grad_i_l2),
            f(self.i_l2),
            f(self.sqrt_s_lap_i_l2),
            f(self.sqrt_eps_lap_i_l2),
            f(self.dt_i_l2),
            f(self.grad_s_l2),
            f(self.dt_s_dual),
            f(self.min_s),
            f(self.max_s),
            f(self.min_i),
            f(self.max_i),
            f(self.mass_s),
            f(self.mass_i),
            f(self.mass_r),
            self.clamp_events.to_string(),
            f(self.supersolution_slack),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.csv_fields().iter().all(|s| s.parse::<f64>().map(f64::is_finite).unwrap_or(false))
    }
}

/// Time series of [`DiagnosticsRow`]s.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub rows: Vec<DiagnosticsRow>,
}

impl DiagnosticsRecord {
    pub fn push(&mut self, row: DiagnosticsRow) {
        self.rows.push(row);
    }

    pub fn min_of(&self, f: impl Fn(&DiagnosticsRow) -> f64) -> f64 {
        self.rows.iter().map(f).fold(f64::INFINITY, f64::min)
    }

    pub fn max_of(&self, f: impl Fn(&DiagnosticsRow) -> f64) -> f64 {
        self.rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Computes diagnostics rows for states on one grid.
#[derive(Debug, Clone)]
pub struct Monitor {
    pub family: TestFunctionFamily,
}

impl Monitor {
    pub fn new(grid: &Grid) -> Self {
        Self::with_family(TestFunctionFamily::hat_lattice(grid, DEFAULT_HATS_PER_AXIS))
    }

    pub fn with_family(family: TestFunctionFamily) -> Self {
        Monitor { family }
    }

    /// Row for consecutive states `dt` apart, time derivatives by backward difference.
    pub fn record_sample(&self, prev: &SimState, state: &SimState, dt: f64, params: &ModelParams) -> Result<DiagnosticsRow, DiagnosticsError> {
        let ds = state.s.zip_map(&prev.s, |a, b| (a - b) / dt);
        let di = state.i.zip_map(&prev.i, |a, b| (a - b) / dt);
        self.row(state, prev, &ds, &di, dt, params)
    }

    /// Row for an initial state, with the time derivatives taken from the
    /// discrete right-hand side (the forward difference of an unclamped step).
    pub fn record_initial(&self, state: &SimState, params: &ModelParams, dt: f64) -> Result<DiagnosticsRow, DiagnosticsError> {
        let (ds, di) = rates(state, params);
        self.row(state, state, &ds, &di, dt, params)
    }

    fn row(&self, state: &SimState, prev: &SimState, ds: &Field, di: &Field, dt: f64, params: &ModelParams) -> Result<DiagnosticsRow, DiagnosticsError> {
        let (s, i) = (&state.s, &state.i);
        let lap_i = neumann_laplacian(i);
        let sqrt_s_lap = s.zip_map(&lap_i, |s, l| s.max(0.0).sqrt() * l);
        Ok(DiagnosticsRow {
            t: state.t,
            dt,
            grad_i_l2: central_gradient(i).l2_norm(),
            i_l2: i.l2_norm(),
            sqrt_s_lap_i_l2: sqrt_s_lap.l2_norm(),
            sqrt_eps_lap_i_l2: params.eps_reg.sqrt() * lap_i.l2_norm(),
            dt_i_l2: di.l2_norm(),
            grad_s_l2: central_gradient(s).l2_norm(),
            dt_s_dual: dual_norm_proxy(ds)?,
            min_s: s.min(),
            max_s: s.max(),
            min_i: i.min(),
            max_i: i.max(),
            mass_s: s.integral(),
            mass_i: i.integral(),
            mass_r: state.r.integral(),
            clamp_events: state.clamp_events,
            supersolution_slack: slack_with_rate(di, prev, params, &self.family),
        })
    }
}

/// Free-function form of [`Monitor::record_sample`] with the default family.
pub fn record_sample(prev: &SimState, state: &SimState, dt: f64, params: &ModelParams) -> Result<DiagnosticsRow, DiagnosticsError> {
    Monitor::new(state.grid()).record_sample(prev, state, dt, params)
}

/// Whether a series stays below `factor` times its maximum over the first
/// quarter of the time window. A series that is identically zero passes.
pub fn stabilizes(times: &[f64], values: &[f64], factor: f64) -> bool {
    let (Some(&t0), Some(&t1)) = (times.first(), times.last()) else {
        return true;
    };
    let quarter = t0 + 0.25 * (t1 - t0);
    let early = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t <= quarter)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    let overall = values.iter().copied().fold(0.0, f64::max);
    values.iter().all(|v| v.is_finite()) && (overall < factor * early || overall == 0.0)
}
