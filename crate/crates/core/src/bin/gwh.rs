fn main() -> std::process::ExitCode {
    gw_harmonic::cli::main()
}
