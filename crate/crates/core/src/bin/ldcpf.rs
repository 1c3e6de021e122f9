fn main() -> std::process::ExitCode {
    lossy_dcpf::cli::main()
}
