fn main() -> std::process::ExitCode {
    addmul::cli::main()
}
