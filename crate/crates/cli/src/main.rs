//! `pacing` binary.

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use pacing_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.global.format;
    let timing = cli.global.timing;
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.global.jobs).build_global() {
        eprintln!("error: worker pool: {e}");
        return ExitCode::from(3);
    }
    let start = Instant::now();
    match run(cli) {
        Ok(mut report) => {
            if timing {
                report.wall_clock_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            let stdout = std::io::stdout();
            if let Err(e) = report.emit(format, &mut stdout.lock()) {
                eprintln!("error: writing report: {e}");
                return ExitCode::from(3);
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
