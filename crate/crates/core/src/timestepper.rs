//! Explicit time integration of the regularized system; `eps_reg = 0` is
//! the degenerate system itself.
//!
//! One step is forward Euler on
//!
//! ```text
//! dS/dt = lap(S) + div(chi(S) S grad I) + f(S, I)
//! dI/dt = (eps + S) lap(I) + g(S, I)
//! dR/dt = mu_I I
//! ```
//!
//! with the infected diffusion kept in nondivergence form: the coefficient
//! `eps + S` multiplies the discrete Laplacian node by node.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsRecord, Monitor};
use crate::error::{SpecError, StepError};
use crate::grid::{Field, Grid};
use crate::kinetics::{self, ModelParams};
use crate::par;
use crate::stencil;

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub s: Field,
    pub i: Field,
    pub r: Field,
    /// Cumulative number of nodewise clamp corrections applied so far.
    pub clamp_events: u64,
}

impl SimState {
    pub fn new(s: Field, i: Field) -> Self {
        let r = Field::zeros(*s.grid());
        SimState {
            t: 0.0,
            s,
            i,
            r,
            clamp_events: 0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.s.grid()
    }

    /// Uniform `(S, I, R) = (s, i, 0)`.
    pub fn uniform(grid: Grid, s: f64, i: f64) -> Self {
        Self::new(Field::constant(grid, s), Field::constant(grid, i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepControl {
    pub safety: f64,
    pub dt_max: f64,
    /// Clamp S to [0, 1] and I to [0, inf) after each step, counting every correction.
    pub clamp: bool,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            safety: 0.5,
            dt_max: f64::INFINITY,
            clamp: false,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(SpecError::Safety(self.safety));
        }
        if self.dt_max.is_nan() || self.dt_max <= 0.0 {
            return Err(SpecError::DtMax(self.dt_max));
        }
        Ok(())
    }
}

/// Largest step without the safety factor or the `dt_max` cap.
fn raw_stability_bound(state: &SimState, params: &ModelParams) -> f64 {
    let grid = state.grid();
    let dim = grid.dim() as f64;
    let h = grid.min_spacing();
    let d_eff = (params.eps_reg + state.s.max()).max(1.0);
    let diffusion = h * h / (2.0 * dim * d_eff);
    let speed = stencil::max_taxis_speed(&state.s, &state.i, |s| params.chi(s));
    let advection = h / (dim * speed + f64::MIN_POSITIVE);
    let rate = params.reaction_rate_bound();
    let reaction = if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };
    diffusion.min(advection).min(reaction)
}

/// Stability-limited step: `safety * min(diffusion, advection, reaction)`, capped by `dt_max`.
pub fn stable_dt(state: &SimState, params: &ModelParams, control: &StepControl) -> f64 {
    (control.safety * raw_stability_bound(state, params)).min(control.dt_max)
}

/// Right-hand sides `(dS/dt, dI/dt)` of the semi-discrete system.
pub fn rates(state: &SimState, params: &ModelParams) -> (Field, Field) {
    let (s, i) = (&state.s, &state.i);
    let (lap_s, lap_i) = par::join(|| stencil::neumann_laplacian(s), || stencil::neumann_laplacian(i));
    let taxis = stencil::upwind_taxis_divergence_with(s, i, |v| params.chi(v));
    let (sv, iv) = (s.values(), i.values());
    let (ls, li, tx) = (lap_s.values(), lap_i.values(), taxis.values());
    let eps = params.eps_reg;
    let n = sv.len();
    let ds = par::map_nodes(n, |k| ls[k] + tx[k] + kinetics::reaction_f(sv[k], iv[k], params));
    let di = par::map_nodes(n, |k| (eps + sv[k]) * li[k] + kinetics::reaction_g(sv[k], iv[k], params));
    let grid = *s.grid();
    (Field::new(grid, ds), Field::new(grid, di))
}

/// Advance `state` by one forward-Euler step of size `dt`.
pub fn step(state: &SimState, params: &ModelParams, control: &StepControl, dt: f64) -> Result<SimState, StepError> {
    let bound = raw_stability_bound(state, params);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(StepError::Unstable {
            dt,
            bound,
            time: state.t,
        });
    }
    let (ds, di) = rates(state, params);
    let mut s = state.s.zip_map(&ds, |v, d| v + dt * d);
    let mut i = state.i.zip_map(&di, |v, d| v + dt * d);
    let r = kinetics::removed_update(&state.r, &state.i, params.mu_i, dt);
    let t = state.t + dt;
    for (field, name) in [(&s, "S"), (&i, "I"), (&r, "R")] {
        if let Some(node) = field.first_non_finite() {
            return Err(StepError::NonFinite { field: name, node, time: t });
        }
    }
    let mut clamp_events = state.clamp_events;
    if control.clamp {
        for v in s.values_mut() {
            if *v < 0.0 || *v > 1.0 {
                *v = v.clamp(0.0, 1.0);
                clamp_events += 1;
            }
        }
        for v in i.values_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clamp_events += 1;
            }
        }
    }
    Ok(SimState {
        t,
        s,
        i,
        r,
        clamp_events,
    })
}

/// Range of `S` and `I` seen over every step of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub min_s: f64,
    pub max_s: f64,
    pub min_i: f64,
    pub max_i: f64,
}

impl Extrema {
    fn of(state: &SimState) -> Self {
        Extrema {
            min_s: state.s.min(),
            max_s: state.s.max(),
            min_i: state.i.min(),
            max_i: state.i.max(),
        }
    }

    fn include(&mut self, state: &SimState) {
        let e = Self::of(state);
        self.min_s = self.min_s.min(e.min_s);
        self.max_s = self.max_s.max(e.max_s);
        self.min_i = self.min_i.min(e.min_i);
        self.max_i = self.max_i.max(e.max_i);
    }
}

/// Result of [`run`]: final state, one diagnostics row and one snapshot per sample time.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: SimState,
    pub record: DiagnosticsRecord,
    pub snapshots: Vec<SimState>,
    pub steps: usize,
    /// Per-step extrema, including the initial state.
    pub extrema: Extrema,
}

fn check_times(t_end: f64, sample_times: &[f64]) -> Result<(), StepError> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(StepError::Times(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    if sample_times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(StepError::Times("sample times must be strictly increasing".into()));
    }
    if let Some(&bad) = sample_times.iter().find(|&&t| !(0.0..=t_end).contains(&t)) {
        return Err(StepError::Times(format!("sample time {bad} outside [0, {t_end}]")));
    }
    Ok(())
}

/// Integrate to `t_end` with the default monitor for the state's grid.
pub fn run(
    state0: &SimState,
    params: &ModelParams,
    control: &StepControl,
    t_end: f64,
    sample_times: &[f64],
) -> Result<RunOutput, StepError> {
    let monitor = Monitor::new(state0.grid());
    run_with_monitor(state0, params, control, t_end, sample_times, &monitor)
}

/// Integrate to `t_end`, landing exactly on every sample time.
///
/// When fewer than two stable steps remain before the next target, the
/// remainder is split evenly so no step collapses to a sliver.
pub fn run_with_monitor(
    state0: &SimState,
    params: &ModelParams,
    control: &StepControl,
    t_end: f64,
    sample_times: &[f64],
    monitor: &Monitor,
) -> Result<RunOutput, StepError> {
    check_times(t_end, sample_times)?;
    let mut record = DiagnosticsRecord::default();
    let mut snapshots = Vec::new();
    let mut state = state0.clone();
    let mut extrema = Extrema::of(&state);
    let mut next_sample = 0;
    if t_end == 0.0 {
        snapshots.extend(sample_times.iter().map(|_| state.clone()));
        return Ok(RunOutput {
            final_state: state,
            record,
            snapshots,
            steps: 0,
            extrema,
        });
    }
    if sample_times.first() == Some(&0.0) {
        let row = monitor
            .record_initial(&state, params, stable_dt(&state, params, control))
            .map_err(|source| StepError::Diagnostics { time: 0.0, source })?;
        record.push(row);
        snapshots.push(state.clone());
        next_sample = 1;
    }
    let mut steps = 0;
    while state.t < t_end {
        let target = sample_times.get(next_sample).copied().unwrap_or(t_end).min(t_end);
        let mut dt = stable_dt(&state, params, control);
        let remaining = target - state.t;
        let landing = remaining <= dt;
        if landing {
            dt = remaining;
        } else if remaining < 2.0 * dt {
            dt = 0.5 * remaining;
        }
        let prev = state;
        state = step(&prev, params, control, dt)?;
        steps += 1;
        extrema.include(&state);
        if landing {
            state.t = target;
            if next_sample < sample_times.len() && sample_times[next_sample] == target {
                let row = monitor
                    .record_sample(&prev, &state, dt, params)
                    .map_err(|source| StepError::Diagnostics { time: target, source })?;
                record.push(row);
                snapshots.push(state.clone());
                next_sample += 1;
            }
        }
    }
    Ok(RunOutput {
        final_state: state,
        record,
        snapshots,
        steps,
        extrema,
    })
}

#[derive(Debug, Clone)]
pub struct ContinuationEntry {
    pub eps: f64,
    pub output: RunOutput,
    /// L²(0,T; L²) distance of the `(S, I)` trajectory to the previous entry's.
    pub distance_to_previous: Option<f64>,
}

/// Space-time L² distance between two trajectories sampled at the same times.
///
/// Trapezoidal rule in time over the snapshot times, dual-cell quadrature in space.
pub fn trajectory_distance(a: &[SimState], b: &[SimState]) -> f64 {
    assert_eq!(a.len(), b.len(), "trajectories must share sample times");
    let sq: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let ds = x.s.zip_map(&y.s, |p, q| p - q).l2_norm();
            let di = x.i.zip_map(&y.i, |p, q| p - q).l2_norm();
            (x.t, ds * ds + di * di)
        })
        .collect();
    let mut acc = 0.0;
    for w in sq.windows(2) {
        acc += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
    }
    acc.sqrt()
}

/// Run the full simulation for each regularization in `eps_list` (strictly
/// decreasing) and measure the distance between consecutive trajectories.
pub fn epsilon_continuation(
    state0: &SimState,
    params: &ModelParams,
    control: &StepControl,
    t_end: f64,
    sample_times: &[f64],
    eps_list: &[f64],
) -> Result<Vec<ContinuationEntry>, StepError> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(StepError::EpsList);
    }
    let monitor = Monitor::new(state0.grid());
    let outputs = par::map_items(eps_list, |&eps| {
        let p = ModelParams { eps_reg: eps, ..*params };
        run_with_monitor(state0, &p, control, t_end, sample_times, &monitor).map_err(|e| StepError::Continuation {
            eps,
            source: Box::new(e),
        })
    });
    let mut entries: Vec<ContinuationEntry> = Vec::with_capacity(eps_list.len());
    for (&eps, out) in eps_list.iter().zip(outputs) {
        let output = out?;
        let distance_to_previous = entries
            .last()
            .map(|prev| trajectory_distance(&prev.output.snapshots, &output.snapshots));
        entries.push(ContinuationEntry {
            eps,
            output,
            distance_to_previous,
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn g65() -> Grid {
        build_grid(2, &[10.0, 10.0], &[65, 65]).unwrap()
    }

    #[test]
    fn stable_dt_disease_free_example() {
        let state = SimState::uniform(g65(), 1.0, 0.0);
        let dt = stable_dt(&state, &ModelParams::default(), &StepControl::default());
        let h: f64 = 0.15625;
        assert_eq!(dt, 0.5 * h * h / 4.0);
        assert!((dt - 3.0517578125e-3).abs() < 1e-15);
    }

    #[test]
    fn stable_dt_capped() {
        let g = build_grid(1, &[10.0], &[11]).unwrap();
        let state = SimState::uniform(g, 0.0, 0.0);
        let control = StepControl {
            dt_max: 0.01,
            ..Default::default()
        };
        assert_eq!(stable_dt(&state, &ModelParams::default(), &control), 0.01);
    }

    #[test]
    fn stable_dt_ignores_taxis_without_gradient() {
        let g = g65();
        let state = SimState::uniform(g, 0.4, 0.3);
        let p0 = ModelParams { k: 0.0, ..Default::default() };
        let p15 = ModelParams::default();
        let c = StepControl::default();
        assert_eq!(stable_dt(&state, &p0, &c), stable_dt(&state, &p15, &c));
    }

    #[test]
    fn stable_dt_shrinks_with_strong_taxis() {
        let g = build_grid(1, &[10.0], &[101]).unwrap();
        let s = Field::constant(g, 0.0);
        let i = Field::from_fn(g, |x| 10.0 * x[0]);
        let state = SimState::new(s, i);
        let p = ModelParams { k: 100.0, ..Default::default() };
        let dt = stable_dt(&state, &p, &StepControl::default());
        // h / |v| = 0.1 / 1000
        assert!((dt - 0.5 * 0.1 / 1000.0).abs() < 1e-15);
    }

    #[test]
    fn disease_free_step_is_fixed() {
        let state = SimState::uniform(g65(), 1.0, 0.0);
        let c = StepControl::default();
        for eps in [0.0, 0.3, 1.0] {
            let p = ModelParams { eps_reg: eps, ..Default::default() };
            let dt = stable_dt(&state, &p, &c);
            let next = step(&state, &p, &c, dt).unwrap();
            assert_eq!(next.s, state.s);
            assert_eq!(next.i, state.i);
            assert_eq!(next.r, state.r);
        }
    }

    #[test]
    fn constant_state_follows_kinetics() {
        let state = SimState::uniform(g65(), 0.5, 0.5);
        let p = ModelParams::default();
        let c = StepControl::default();
        let dt = stable_dt(&state, &p, &c);
        let next = step(&state, &p, &c, dt).unwrap();
        let (es, ei) = (0.5 + dt * -0.1225, 0.5 + dt * 0.1);
        assert!(next.s.values().iter().all(|&v| (v - es).abs() < 1e-15));
        assert!(next.i.values().iter().all(|&v| (v - ei).abs() < 1e-15));
        assert!(next.r.values().iter().all(|&v| (v - dt * 0.05 * 0.5).abs() < 1e-15));
        assert_eq!(next.t, dt);
    }

    #[test]
    fn eps_one_with_no_susceptibles_is_heat_flow() {
        let g = build_grid(1, &[10.0], &[41]).unwrap();
        let i = Field::from_fn(g, |x| 0.5 + 0.2 * (std::f64::consts::PI * x[0] / 10.0).cos());
        let state = SimState::new(Field::zeros(g), i.clone());
        let p = ModelParams { eps_reg: 1.0, ..Default::default() };
        let c = StepControl::default();
        let dt = stable_dt(&state, &p, &c);
        let next = step(&state, &p, &c, dt).unwrap();
        let lap = stencil::neumann_laplacian(&i);
        for k in 0..g.node_count() {
            let expect = i.values()[k] + dt * (lap.values()[k] - 0.05 * i.values()[k]);
            assert!((next.i.values()[k] - expect).abs() < 1e-15);
        }
        assert!(next.s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_unstable_dt() {
        let state = SimState::uniform(g65(), 1.0, 0.0);
        let err = step(&state, &ModelParams::default(), &StepControl::default(), 1.0).unwrap_err();
        assert!(matches!(err, StepError::Unstable { .. }));
    }

    #[test]
    fn non_finite_reported_with_node() {
        let g = build_grid(1, &[10.0], &[11]).unwrap();
        let mut s = Field::constant(g, 0.5);
        s.values_mut()[4] = f64::NAN;
        let state = SimState::new(s, Field::constant(g, 0.1));
        // NaN poisons the bound as well, so step with a tiny dt
        let err = step(&state, &ModelParams::default(), &StepControl::default(), 1e-6);
        match err {
            Err(StepError::NonFinite { field: "S", node, .. }) => assert!((3..=5).contains(&node)),
            Err(StepError::Unstable { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn clamping_counts_events() {
        let g = build_grid(1, &[10.0], &[11]).unwrap();
        let mut s = Field::constant(g, 1.0);
        s.values_mut()[3] = 1.0 + 1e-3;
        let state = SimState::new(s, Field::zeros(g));
        let c = StepControl {
            clamp: true,
            ..Default::default()
        };
        let p = ModelParams::default();
        let dt = stable_dt(&state, &p, &c);
        let next = step(&state, &p, &c, dt).unwrap();
        assert!(next.clamp_events >= 1);
        assert!(next.s.max() <= 1.0);
    }

    #[test]
    fn run_with_zero_end_returns_initial() {
        let state = SimState::uniform(g65(), 0.7, 0.1);
        let out = run(&state, &ModelParams::default(), &StepControl::default(), 0.0, &[0.0]).unwrap();
        assert_eq!(out.final_state, state);
        assert!(out.record.rows.is_empty());
        assert_eq!(out.snapshots.len(), 1);
    }

    #[test]
    fn run_lands_on_sample_times() {
        let g = build_grid(2, &[10.0, 10.0], &[17, 17]).unwrap();
        let state = SimState::uniform(g, 0.8, 0.1);
        let times = [0.0, 0.1, 0.25, 1.0 / 3.0, 1.0];
        let out = run(&state, &ModelParams::default(), &StepControl::default(), 1.0, &times).unwrap();
        let got: Vec<f64> = out.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(got, times);
        assert_eq!(out.record.rows.len(), times.len());
        assert_eq!(out.final_state.t, 1.0);
    }

    #[test]
    fn run_rejects_bad_times() {
        let state = SimState::uniform(g65(), 1.0, 0.0);
        let (p, c) = (ModelParams::default(), StepControl::default());
        assert!(run(&state, &p, &c, 1.0, &[0.5, 0.2]).is_err());
        assert!(run(&state, &p, &c, 1.0, &[2.0]).is_err());
        assert!(run(&state, &p, &c, -1.0, &[]).is_err());
    }

    #[test]
    fn continuation_singleton_and_trivial() {
        let g = build_grid(2, &[10.0, 10.0], &[9, 9]).unwrap();
        let state = SimState::uniform(g, 1.0, 0.3);
        let p = ModelParams {
            k: 0.0,
            lambda_s: 0.0,
            lambda_i: 0.0,
            mu_s: 0.0,
            mu_i: 0.0,
            ..Default::default()
        };
        let c = StepControl::default();
        let times = [0.0, 0.5, 1.0];
        let one = epsilon_continuation(&state, &p, &c, 1.0, &times, &[0.5]).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].distance_to_previous.is_none());
        let many = epsilon_continuation(&state, &p, &c, 1.0, &times, &[0.5, 0.25, 0.0]).unwrap();
        for e in &many[1..] {
            assert_eq!(e.distance_to_previous, Some(0.0));
        }
        assert!(epsilon_continuation(&state, &p, &c, 1.0, &times, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn trajectory_distance_of_offset_constant() {
        let g = build_grid(1, &[10.0], &[5]).unwrap();
        let mk = |t: f64, s: f64| SimState {
            t,
            ..SimState::uniform(g, s, 0.0)
        };
        let a = [mk(0.0, 0.5), mk(2.0, 0.5)];
        let b = [mk(0.0, 0.6), mk(2.0, 0.6)];
        // sqrt(T * |Omega| * 0.1^2)
        assert!((trajectory_distance(&a, &b) - (2.0f64 * 10.0 * 0.01).sqrt()).abs() < 1e-12);
    }
}
