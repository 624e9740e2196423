//! Run orchestration for the five CLI modes. Each mode writes its artifacts
//! under the output directory and finishes with a digest manifest.

use std::path::{Path, PathBuf};

use crate::config::{RunConfig, RunMode};
use crate::diagnostics::{mms_convergence_study, Monitor, MmsRow, TestFunctionFamily};
use crate::error::Error;
use crate::grid::{build_grid, synthesize_initials, Grid};
use crate::kinetics::ModelParams;
use crate::output::{diagnostics_csv, snapshot_stem, ArtifactSet};
use crate::par;
use crate::timestepper::{epsilon_continuation, run_with_monitor, ContinuationEntry, RunOutput, SimState};

/// Outcome of a mode: artifacts written plus the in-memory results.
#[derive(Debug)]
pub struct ModeReport {
    pub artifacts: ArtifactSet,
    pub manifest: String,
    pub outcome: ModeOutcome,
}

#[derive(Debug)]
pub enum ModeOutcome {
    Single(Box<RunOutput>),
    Figure1(Box<Figure1Result>),
    Continuation(Vec<ContinuationEntry>),
    Positivity(Box<PositivityResult>),
    Mms(Vec<(String, Vec<MmsRow>)>),
}

#[derive(Debug)]
pub struct Figure1Result {
    pub k_values: [f64; 2],
    pub branches: [RunOutput; 2],
}

impl Figure1Result {
    pub fn final_mass_i(&self) -> [f64; 2] {
        self.branches.each_ref().map(|b| b.final_state.i.integral())
    }

    pub fn final_mass_s(&self) -> [f64; 2] {
        self.branches.each_ref().map(|b| b.final_state.s.integral())
    }
}

#[derive(Debug)]
pub struct PositivityResult {
    pub output: RunOutput,
    /// `min_t min_x S` over every step.
    pub floor: f64,
}

/// Dispatch on `config.run.mode` and write everything under `out`.
pub fn execute(config: &RunConfig, out: &Path) -> Result<ModeReport, Error> {
    let (mut artifacts, outcome) = match config.run.mode {
        RunMode::Single => {
            let (a, o) = run_mode_single(config, out)?;
            (a, ModeOutcome::Single(Box::new(o)))
        }
        RunMode::Figure1Pair => {
            let (a, o) = run_mode_figure1(config, out)?;
            (a, ModeOutcome::Figure1(Box::new(o)))
        }
        RunMode::EpsContinuation => {
            let (a, o) = run_mode_continuation(config, out)?;
            (a, ModeOutcome::Continuation(o))
        }
        RunMode::Positivity1d => {
            let (a, o) = run_mode_positivity(config, out)?;
            (a, ModeOutcome::Positivity(Box::new(o)))
        }
        RunMode::Mms => {
            let (a, o) = run_mode_mms(config, out)?;
            (a, ModeOutcome::Mms(o))
        }
    };
    artifacts.write("config.toml", config.emit().as_bytes())?;
    let manifest = artifacts.write_manifest()?;
    Ok(ModeReport {
        artifacts,
        manifest,
        outcome,
    })
}

fn initial_state(grid: &Grid, config: &RunConfig) -> Result<SimState, Error> {
    let (s, i) = synthesize_initials(grid, &config.initial)?;
    Ok(SimState::new(s, i))
}

fn monitor_for(grid: &Grid, config: &RunConfig) -> Monitor {
    Monitor::with_family(TestFunctionFamily::hat_lattice(grid, config.diagnostics.hats_per_axis))
}

/// Write per-sample S, I, R snapshots and the diagnostics table under `root`.
fn write_run(root: &Path, output: &RunOutput) -> Result<ArtifactSet, Error> {
    let mut set = ArtifactSet::new(root);
    for snap in &output.snapshots {
        for (name, field) in [("S", &snap.s), ("I", &snap.i), ("R", &snap.r)] {
            set.snapshot(snapshot_stem(name, snap.t), field)?;
        }
    }
    set.write("diagnostics.csv", diagnostics_csv(&output.record).as_bytes())?;
    Ok(set)
}

fn simulate(config: &RunConfig, grid: &Grid, state0: &SimState, params: &ModelParams, branch: &str) -> Result<RunOutput, Error> {
    let monitor = monitor_for(grid, config);
    run_with_monitor(state0, params, &config.control, config.run.t_end, &config.sample_times(), &monitor)
        .map_err(|e| Error::step(branch, e))
}

pub fn run_mode_single(config: &RunConfig, out: &Path) -> Result<(ArtifactSet, RunOutput), Error> {
    let grid = config.grid.build()?;
    let state0 = initial_state(&grid, config)?;
    let output = simulate(config, &grid, &state0, &config.params, "single")?;
    Ok((write_run(out, &output)?, output))
}

/// Two runs that differ only in the taxis coefficient.
pub fn run_mode_figure1(config: &RunConfig, out: &Path) -> Result<(ArtifactSet, Figure1Result), Error> {
    let grid = config.grid.build()?;
    let state0 = initial_state(&grid, config)?;
    let ks = config.figure1.k_values;
    let labels = ks.map(|k| format!("k={k}"));
    let branch = |n: usize| {
        let params = ModelParams { k: ks[n], ..config.params };
        simulate(config, &grid, &state0, &params, &labels[n])
    };
    let (a, b) = par::join(|| branch(0), || branch(1));
    let branches = [a?, b?];

    let mut set = ArtifactSet::new(out);
    for (n, b) in branches.iter().enumerate() {
        let dir = PathBuf::from(format!("branch{n}"));
        set.extend(write_run(&out.join(&dir), b)?, &dir);
    }
    let mut summary = String::from("t,k_a,k_b,mass_i_a,mass_i_b,mass_s_a,mass_s_b,min_s_a,min_s_b\n");
    for (sa, sb) in branches[0].snapshots.iter().zip(&branches[1].snapshots) {
        summary.push_str(&format!(
            "{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            sa.t,
            ks[0],
            ks[1],
            sa.i.integral(),
            sb.i.integral(),
            sa.s.integral(),
            sb.s.integral(),
            sa.s.min(),
            sb.s.min()
        ));
    }
    set.write("summary.csv", summary.as_bytes())?;
    let result = Figure1Result { k_values: ks, branches };
    let (mi, ms) = (result.final_mass_i(), result.final_mass_s());
    let ordering = format!(
        "quantity,branch_a,branch_b,a_exceeds_b\nfinal_mass_i,{:.16e},{:.16e},{}\nfinal_mass_s,{:.16e},{:.16e},{}\n",
        mi[0],
        mi[1],
        mi[0] > mi[1],
        ms[0],
        ms[1],
        ms[0] > ms[1]
    );
    set.write("ordering.csv", ordering.as_bytes())?;
    Ok((set, result))
}

/// Uniform trajectory sample times for the continuation distance.
pub fn continuation_times(t_end: f64, intervals: usize) -> Vec<f64> {
    if t_end == 0.0 {
        return vec![0.0];
    }
    (0..=intervals).map(|k| t_end * k as f64 / intervals as f64).collect()
}

pub fn run_mode_continuation(config: &RunConfig, out: &Path) -> Result<(ArtifactSet, Vec<ContinuationEntry>), Error> {
    let grid = config.grid.build()?;
    let state0 = initial_state(&grid, config)?;
    let times = continuation_times(config.run.t_end, config.continuation.intervals);
    let entries = epsilon_continuation(
        &state0,
        &config.params,
        &config.control,
        config.run.t_end,
        &times,
        &config.continuation.eps_list,
    )
    .map_err(|e| Error::step("eps-continuation", e))?;
    let mut set = ArtifactSet::new(out);
    let mut table = String::from("eps,distance_to_previous,final_mass_s,final_mass_i\n");
    for (n, e) in entries.iter().enumerate() {
        let fin = &e.output.final_state;
        let d = e.distance_to_previous.map(|d| format!("{d:.16e}")).unwrap_or_default();
        table.push_str(&format!("{},{d},{:.16e},{:.16e}\n", e.eps, fin.s.integral(), fin.i.integral()));
        let dir = PathBuf::from(format!("eps{n}"));
        set.snapshot(dir.join(snapshot_stem("S", fin.t)), &fin.s)?;
        set.snapshot(dir.join(snapshot_stem("I", fin.t)), &fin.i)?;
        set.write(dir.join("diagnostics.csv"), diagnostics_csv(&e.output.record).as_bytes())?;
    }
    set.write("continuation.csv", table.as_bytes())?;
    Ok((set, entries))
}

/// 1D run with susceptibles bounded away from zero initially.
pub fn run_mode_positivity(config: &RunConfig, out: &Path) -> Result<(ArtifactSet, PositivityResult), Error> {
    let extent = config.grid.extent.first().copied().unwrap_or(10.0);
    let grid = build_grid(1, &[extent], &[config.positivity.nodes])?;
    let mut spec = config.initial.project_to_1d();
    spec.s_floor = config.positivity.s_floor;
    let (s, i) = synthesize_initials(&grid, &spec)?;
    let state0 = SimState::new(s, i);
    let output = simulate(config, &grid, &state0, &config.params, "positivity-1d")?;
    let floor = output.extrema.min_s;
    let mut set = write_run(out, &output)?;
    set.write(
        "positivity.csv",
        format!("initial_min_s,run_min_s,strictly_positive\n{:.16e},{floor:.16e},{}\n", state0.s.min(), floor > 0.0).as_bytes(),
    )?;
    Ok((set, PositivityResult { output, floor }))
}

pub fn run_mode_mms(config: &RunConfig, out: &Path) -> Result<(ArtifactSet, Vec<(String, Vec<MmsRow>)>), Error> {
    let grids = config.mms_grids()?;
    let mut results = Vec::new();
    let mut table = String::from("operator,h,error,observed_order\n");
    for &op in &config.mms.operators {
        let rows = mms_convergence_study(op, &grids)?;
        for r in &rows {
            let order = r.observed_order.map(|o| format!("{o:.6}")).unwrap_or_default();
            table.push_str(&format!("{},{:.16e},{:.16e},{order}\n", op.name(), r.h, r.error));
        }
        results.push((op.name().to_string(), rows));
    }
    let mut set = ArtifactSet::new(out);
    set.write("mms.csv", table.as_bytes())?;
    Ok((set, results))
}
