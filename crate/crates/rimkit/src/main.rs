fn main() -> std::process::ExitCode {
    rimkit::cli::main_with_args(std::env::args_os())
}
