fn main() -> std::process::ExitCode {
    gkrf::cli::main()
}
