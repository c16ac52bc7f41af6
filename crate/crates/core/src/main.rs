use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use bachet::cli::{self, Command, Overrides, EXIT_CONFIG};

#[derive(Parser, Debug)]
#[command(
    name = "bachet",
    version,
    about = "Solve and verify Bachet's game with lottery moves"
)]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Simulation seed; overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let overrides = Overrides {
        output: args.output,
        seed: args.seed,
    };
    match cli::run_file(args.command, &args.config, &overrides) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for path in &outcome.artifacts {
                println!("{}", path.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
