fn main() -> std::process::ExitCode {
    fmrmc::cli::main()
}
