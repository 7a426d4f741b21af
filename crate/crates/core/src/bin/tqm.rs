use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let max_dim = std::env::var("TQM_MAX_DIM").ok();
    let code = tqm::cli::run(
        std::env::args_os(),
        max_dim.as_deref(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    ExitCode::from(code as u8)
}
