fn main() -> std::process::ExitCode {
    figbias::cli::main()
}
