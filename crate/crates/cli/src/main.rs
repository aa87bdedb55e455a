fn main() -> std::process::ExitCode {
    dagp_cli::cli::run(std::env::args_os())
}
