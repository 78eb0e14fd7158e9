use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dislocore_cli::{print_summary, run, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Simulate,
    VerifyBoundary,
    VerifyPair,
    GreenCheck,
    Minimize,
    Converge,
    Sweep,
}

impl ModeArg {
    fn name(self) -> &'static str {
        match self {
            ModeArg::Simulate => "simulate",
            ModeArg::VerifyBoundary => "verify-boundary",
            ModeArg::VerifyPair => "verify-pair",
            ModeArg::GreenCheck => "green-check",
            ModeArg::Minimize => "minimize",
            ModeArg::Converge => "converge",
            ModeArg::Sweep => "sweep",
        }
    }
}

/// Screw-dislocation energies, dynamics and boundary-datum minimizers.
#[derive(Debug, Parser)]
#[command(name = "dislocore", version)]
struct Args {
    /// Mode; must match the scenario's `mode` field.
    mode: ModeArg,
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (default: current directory).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Suppress the summary line.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    let result = Scenario::load(&args.scenario).and_then(|s| {
        if s.mode.name() != args.mode.name() {
            anyhow::bail!("field `mode`: scenario declares {} but {} was requested", s.mode.name(), args.mode.name());
        }
        run(&s, &args.out)
    });
    match result {
        Ok(o) => {
            print_summary(&o, args.quiet);
            ExitCode::from(o.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
