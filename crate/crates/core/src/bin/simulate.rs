use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sitaxis::config::{load_config, RunMode};
use sitaxis::modes::{execute, ModeOutcome};
use sitaxis::Error;

/// Finite-difference simulator for the SI system with repellent taxis.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Cli {
    /// TOML configuration file.
    config: PathBuf,
    /// Run mode: single, figure1-pair, eps-continuation, positivity-1d, mms.
    #[arg(long)]
    mode: Option<String>,
    /// Output directory (overrides the config's run.out_dir).
    #[arg(long, env = "SIMULATE_OUT_DIR")]
    out: Option<PathBuf>,
    /// Override a config key, e.g. `--override params.k=0`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    emit_config: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides = cli.overrides.clone();
    if let Some(mode) = &cli.mode {
        if RunMode::parse(mode).is_none() {
            eprintln!("error: unknown mode `{mode}`");
            return ExitCode::from(2);
        }
        overrides.push(format!("run.mode=\"{mode}\""));
    }
    let config = match load_config(&cli.config, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.emit_config {
        print!("{}", config.emit());
        return ExitCode::SUCCESS;
    }
    let out = cli.out.unwrap_or_else(|| config.run.out_dir.clone());
    match execute(&config, &out) {
        Ok(report) => {
            summarize(&report.outcome);
            println!("{} artifacts in {}", report.artifacts.files.len() + 1, out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}

fn summarize(outcome: &ModeOutcome) {
    match outcome {
        ModeOutcome::Single(o) => {
            let fin = &o.final_state;
            println!(
                "t = {} after {} steps: mass S = {:.6}, mass I = {:.6}, min S = {:.6}",
                fin.t,
                o.steps,
                fin.s.integral(),
                fin.i.integral(),
                o.extrema.min_s
            );
        }
        ModeOutcome::Figure1(r) => {
            let (mi, ms) = (r.final_mass_i(), r.final_mass_s());
            for n in 0..2 {
                println!("K = {}: mass I = {:.6}, mass S = {:.6}", r.k_values[n], mi[n], ms[n]);
            }
        }
        ModeOutcome::Continuation(entries) => {
            for e in entries {
                match e.distance_to_previous {
                    Some(d) => println!("eps = {}: distance to previous = {d:.6e}", e.eps),
                    None => println!("eps = {}", e.eps),
                }
            }
        }
        ModeOutcome::Positivity(p) => println!("min S over run = {:.6e}", p.floor),
        ModeOutcome::Mms(results) => {
            for (name, rows) in results {
                let orders: Vec<String> = rows
                    .iter()
                    .filter_map(|r| r.observed_order.map(|o| format!("{o:.3}")))
                    .collect();
                println!("{name}: observed orders {}", orders.join(", "));
            }
        }
    }
}
