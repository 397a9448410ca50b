use std::process::ExitCode;

fn main() -> ExitCode {
    match tracekit_core::cli::run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
