use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use armfatigue::scenario::{self, RunMode, Scenario};
use armfatigue::sweep;
use armfatigue::Error;
use clap::{Parser, Subcommand, ValueEnum};

/// Joint-level muscle fatigue simulator for repetitive push/pull tasks.
#[derive(Debug, Parser)]
#[command(name = "armfatigue", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario and write the dense trace as CSV.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the run summary as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long = "duration-s")]
        duration_s: Option<f64>,
        #[arg(long = "dt-s")]
        dt_s: Option<f64>,
    },
    /// Evaluate a grid of task variants and write the ranked table as CSV.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ModeArg {
    Quasistatic,
    StaticMinMvc,
}

impl From<ModeArg> for RunMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Quasistatic => RunMode::Quasistatic,
            ModeArg::StaticMinMvc => RunMode::StaticMinMvc,
        }
    }
}

/// Failure classes mapped onto process exit codes.
enum Failure {
    Input(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = read_input(path)?;
    scenario::load_scenario(&text).map_err(|e| Failure::from(e).context(&path.display().to_string()))
}

impl Failure {
    fn context(self, what: &str) -> Self {
        match self {
            Failure::Input(m) => Failure::Input(format!("{what}: {m}")),
            Failure::Runtime(m) => Failure::Runtime(format!("{what}: {m}")),
        }
    }
}

fn simulate(
    scenario_path: &Path,
    out: &Path,
    summary: Option<&Path>,
    mode: Option<ModeArg>,
    duration_s: Option<f64>,
    dt_s: Option<f64>,
) -> Result<(), Failure> {
    let mut s = load(scenario_path)?;
    if let Some(m) = mode {
        s.run.mode = m.into();
    }
    if let Some(d) = duration_s {
        s.run.duration_s = d;
    }
    if let Some(dt) = dt_s {
        s.run.dt_s = dt;
    }
    s.validate()?;

    let result = scenario::run(&s)?;
    let mut w = create_output(out)?;
    scenario::write_trace_csv(&result.trace, &mut w)?;
    w.flush().map_err(Error::from)?;
    log::info!("wrote {} rows to {}", result.trace.len(), out.display());

    if let Some(path) = summary {
        let mut w = create_output(path)?;
        serde_json::to_writer_pretty(&mut w, &result.summary).map_err(|e| Failure::Runtime(e.to_string()))?;
        writeln!(w).and_then(|_| w.flush()).map_err(Error::from)?;
    }
    for (joint, t) in [
        ("shoulder", result.summary.crossing_s.shoulder),
        ("elbow", result.summary.crossing_s.elbow),
    ] {
        match t {
            Some(t) => println!("{joint}: capacity meets demand at {t:.2} s ({:.2} min)", t / 60.0),
            None => println!("{joint}: no crossing within {} s", s.run.duration_s),
        }
    }
    Ok(())
}

fn run_sweep(scenario_path: &Path, grid_path: &Path, out: &Path) -> Result<(), Failure> {
    let base = load(scenario_path)?;
    let grid = sweep::load_grid(&read_input(grid_path)?)
        .map_err(|e| Failure::from(e).context(&grid_path.display().to_string()))?;
    let rows = sweep::sweep(&base, &grid);
    for row in &rows {
        if let Err(e) = &row.outcome {
            log::warn!("cell {} failed: {e}", row.cell.index);
        }
    }
    let mut w = create_output(out)?;
    sweep::write_sweep_csv(&rows, &mut w)?;
    w.flush().map_err(Error::from)?;
    if let Some(best) = sweep::ranked(&rows).first() {
        println!("best cell: {}", best.cell.index);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate {
            scenario,
            out,
            summary,
            mode,
            duration_s,
            dt_s,
        } => simulate(&scenario, &out, summary.as_deref(), mode, duration_s, dt_s),
        Command::Sweep { scenario, grid, out } => run_sweep(&scenario, &grid, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
