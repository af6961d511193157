fn main() -> std::process::ExitCode {
    psolab_cli::main_entry()
}
