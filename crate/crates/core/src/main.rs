use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(bravl::cli::run(std::env::args_os()).code())
}
