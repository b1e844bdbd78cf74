use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use idsgame_cli::config::{McOverrides, PointOverrides, StateChoice, SweepOverrides, CONFIG_ENV};
use idsgame_cli::run::{
    profile_rows, run_cascade, run_mc, run_point_with, run_sweep, sink, write_records, write_rows, CascadeRecord,
    McRecord, SweepSpec, NE_OUTPUTS, OPT_OUTPUTS, POA_OUTPUTS, PROFILE_HEADER,
};
use idsgame_cli::{Config, Output};

/// Equilibria, optima, price of anarchy and cascades of the
/// interdependent-security population game. Results go to CSV.
#[derive(Debug, Parser)]
#[command(name = "idsgame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Io {
    /// TOML config file.
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Nash equilibrium summary.
    Ne {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        point: PointOverrides,
        /// Write per-degree masses and costs instead.
        #[arg(long)]
        profile: bool,
    },
    /// Social optimum summary.
    Opt {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        point: PointOverrides,
        /// Write per-degree masses and costs instead.
        #[arg(long)]
        profile: bool,
    },
    /// Price of anarchy and its bound.
    Poa {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        point: PointOverrides,
    },
    /// Cascade analysis at a state.
    Cascade {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        point: PointOverrides,
        #[arg(long, value_enum)]
        state: Option<StateChoice>,
    },
    /// Grid over family parameter, K and beta.
    Sweep {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        grid: SweepOverrides,
    },
    /// Simulated cascade frequency next to the analytic value.
    Mc {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        point: PointOverrides,
        #[command(flatten)]
        sim: McOverrides,
        #[arg(long, value_enum)]
        state: Option<StateChoice>,
    },
}

fn point_summary(io: &Io, point: &PointOverrides, outputs: &[Output]) -> anyhow::Result<()> {
    let mut config = Config::load(io.config.as_deref())?;
    point.apply(&mut config);
    let record = run_point_with(&config, outputs)?;
    write_records(sink(io.out.as_deref())?, outputs, &[record])
}

fn profile(io: &Io, point: &PointOverrides, state: StateChoice) -> anyhow::Result<()> {
    let mut config = Config::load(io.config.as_deref())?;
    point.apply(&mut config);
    write_rows(sink(io.out.as_deref())?, &PROFILE_HEADER, &profile_rows(&config, state)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ne { io, point, profile: true } => profile(&io, &point, StateChoice::Ne),
        Command::Ne { io, point, profile: false } => point_summary(&io, &point, &NE_OUTPUTS),
        Command::Opt { io, point, profile: true } => profile(&io, &point, StateChoice::Optimum),
        Command::Opt { io, point, profile: false } => point_summary(&io, &point, &OPT_OUTPUTS),
        Command::Poa { io, point } => point_summary(&io, &point, &POA_OUTPUTS),
        Command::Cascade { io, point, state } => {
            let mut config = Config::load(io.config.as_deref())?;
            point.apply(&mut config);
            if let Some(s) = state {
                config.mc.state = s;
            }
            let record = run_cascade(&config)?;
            write_rows(sink(io.out.as_deref())?, &CascadeRecord::HEADER, &[record.fields()])
        }
        Command::Sweep { io, grid } => {
            let mut config = Config::load(io.config.as_deref())?;
            grid.apply(&mut config);
            let spec = SweepSpec::from_config(&config)?;
            run_sweep(&spec, sink(io.out.as_deref())?)?;
            Ok(())
        }
        Command::Mc { io, point, sim, state } => {
            let mut config = Config::load(io.config.as_deref())?;
            point.apply(&mut config);
            sim.apply(&mut config);
            if let Some(s) = state {
                config.mc.state = s;
            }
            let record = run_mc(&config)?;
            write_rows(sink(io.out.as_deref())?, &McRecord::HEADER, &[record.fields()])
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if closed_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn closed_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c.downcast_ref::<std::io::Error>().or_else(|| match c.downcast_ref::<csv::Error>()?.kind() {
            csv::ErrorKind::Io(io) => Some(io),
            _ => None,
        });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}
