use std::process::ExitCode;

use hwkern_cli::report::open_output;
use hwkern_cli::{parse_config, run_suite, write_report, CliError, Status};

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Help(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hwkern: {e}");
            ExitCode::from(2)
        }
    }
}

fn run() -> hwkern_cli::Result<bool> {
    let config = parse_config(std::env::args_os())?;
    let mut out = open_output(&config.output_path)?;
    let report = run_suite(&config)?;
    write_report(&report, config.format, &mut *out, &config.output_path)?;
    eprintln!(
        "{}: {} passed, {} failed, {} skipped in {:.2}s",
        config.suite.name(),
        report.count(Status::Pass),
        report.count(Status::Fail),
        report.count(Status::Skip),
        report.wall_time_secs
    );
    Ok(report.all_passed())
}
