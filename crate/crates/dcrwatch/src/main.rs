fn main() -> std::process::ExitCode {
    dcrwatch::cli::run()
}
