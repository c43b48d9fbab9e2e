use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rco_cli::{replay, run, sweep, write_sweep, CliError, Overrides};

#[derive(Parser)]
#[command(name = "rco", version, about = "Run driving scenarios with and without the control override")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario under every requested mode.
    Run {
        #[command(flatten)]
        opts: Overrides,
    },
    /// Compare step limits against the baseline.
    Sweep {
        #[command(flatten)]
        opts: Overrides,
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,8")]
        limits: Vec<usize>,
    },
    /// Print a decision log as a readable trace.
    Replay {
        log: PathBuf,
        /// Only ticks where the override was engaged.
        #[arg(long)]
        active_only: bool,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { opts } => {
            let settings = opts.resolve()?;
            let outputs = run(&settings)?;
            for o in &outputs {
                let r = &o.result;
                println!(
                    "{:<24} {:<12} RC {:>6.2}  IS {:.3}  DS {:>6.2}  AS {:>5.2}  collisions {}",
                    r.scenario,
                    r.mode,
                    r.rc,
                    r.is_score,
                    r.ds,
                    r.as_speed,
                    r.collisions()
                );
            }
            println!("wrote {}", settings.out.join("summary.csv").display());
        }
        Command::Sweep { opts, limits } => {
            let settings = opts.resolve()?;
            let (base, rows) = sweep(&settings, &limits)?;
            println!("baseline  RC {:.2}  IS {:.3}  DS {:.2}", base.rc, base.is_score, base.ds);
            print!("{}", write_sweep(&settings, &rows)?);
        }
        Command::Replay { log, active_only } => {
            let records = replay::load_log(&log)?;
            print!("{}", replay::render(&records, active_only));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rco: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
