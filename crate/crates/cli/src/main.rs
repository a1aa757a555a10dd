use std::process::ExitCode;

use barw_cli::{run_experiment, Cli, CliResult, ExperimentConfig};
use clap::Parser;

fn run() -> CliResult<()> {
    let (experiment, raw) = Cli::parse().command.split();
    let cfg = ExperimentConfig::from_args(experiment, raw)?;
    let run = run_experiment(&cfg)?;
    for name in &run.summary.files {
        println!("{}", cfg.out_dir.join(name).display());
    }
    println!("{}", cfg.out_dir.join("summary.json").display());
    eprintln!("done in {:.3} s", run.summary.wall_time_seconds);
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("barw: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
