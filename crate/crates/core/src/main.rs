use std::process::ExitCode;

fn main() -> ExitCode {
    navstress::cli::main()
}
