use std::process::ExitCode;

fn main() -> ExitCode {
    gkp_breed::cli::main()
}
