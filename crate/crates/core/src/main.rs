use std::process::ExitCode;

fn main() -> ExitCode {
    magnon_walk::cli::main()
}
