//! Command line interface.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 budget
//! refusal, 4 numerical failure, 5 failed property check. Errors are printed
//! as a single stderr line `E_<KIND>: <message>`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::batch::run_batch;
use super::config::{parse_config_file, Mode};
use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "qconsensus", version, about = "Measurement-driven consensus in qubit networks")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run seeded gossip trajectories and write per-run CSVs and a summary.
    Simulate(Common),
    /// Solve the finite-horizon fidelity planner.
    PlanFinite(Common),
    /// Solve the infinite-horizon expected-steps planner.
    PlanInfinite(Common),
    /// Propagate expected densities, write D_i(t) and optionally compare with Monte Carlo.
    Density(Common),
    /// Print the pair-selection law, Laplacian spectrum and spectral gap.
    Spectrum(Common),
    /// Run the built-in oracle checks and report pass/fail per property.
    Verify(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset: fig2, fig3, fig4, ring6, ring6-density or verify.
    #[arg(long)]
    preset: Option<String>,
    /// complete:N, ring:N, path:N or an edge-list file.
    #[arg(long)]
    graph: Option<String>,
    /// Initial angles in units of pi, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    init: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Number of qubits (planner modes).
    #[arg(long)]
    n: Option<String>,
    /// Number of measurement angles on the grid.
    #[arg(long)]
    k: Option<String>,
    /// Finite planning horizon.
    #[arg(long)]
    t: Option<String>,
    /// Fidelity exponent in the terminal reward (1 or 2).
    #[arg(long)]
    power: Option<String>,
    /// Operation budget of the planner complexity guard.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long = "vi-tol")]
    vi_tol: Option<String>,
    #[arg(long = "max-iters")]
    max_iters: Option<String>,
    /// Worker threads for batch trials (0 = all cores).
    #[arg(long)]
    workers: Option<String>,
    /// Number of per-run trajectory CSVs to keep in simulate mode.
    #[arg(long = "save-trajectories")]
    save_trajectories: Option<String>,
}

impl Common {
    fn flags(&self) -> Vec<(String, String)> {
        let pairs = [
            ("graph", &self.graph),
            ("init", &self.init),
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("horizon", &self.horizon),
            ("eps", &self.eps),
            ("out", &self.out),
            ("n", &self.n),
            ("k", &self.k),
            ("t", &self.t),
            ("power", &self.power),
            ("budget", &self.budget),
            ("vi-tol", &self.vi_tol),
            ("max-iters", &self.max_iters),
            ("workers", &self.workers),
            ("save-trajectories", &self.save_trajectories),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

fn execute(mode: Mode, common: &Common) -> Result<(), Error> {
    let cfg = parse_config_file(
        mode,
        common.preset.as_deref(),
        common.config.as_deref(),
        &common.flags(),
    )?;
    let report = run_batch(&cfg)?;
    // A closed stdout (e.g. piped into `head`) is not an error.
    let mut out = std::io::stdout().lock();
    for line in &report.lines {
        let _ = writeln!(out, "{line}");
    }
    for f in &report.files {
        let _ = writeln!(out, "wrote {}", f.display());
    }
    if !report.failures.is_empty() {
        return Err(Error::Property(report.failures.join(", ")));
    }
    Ok(())
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("E_CONFIG: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    let (mode, common) = match &cli.command {
        Command::Simulate(c) => (Mode::Simulate, c),
        Command::PlanFinite(c) => (Mode::PlanFinite, c),
        Command::PlanInfinite(c) => (Mode::PlanInfinite, c),
        Command::Density(c) => (Mode::Density, c),
        Command::Spectrum(c) => (Mode::Spectrum, c),
        Command::Verify(c) => (Mode::Verify, c),
    };
    match execute(mode, common) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("{}: {msg}", e.code());
            e.exit_code()
        }
    }
}
