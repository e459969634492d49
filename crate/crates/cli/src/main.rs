fn main() -> std::process::ExitCode {
    dstaug_cli::main_entry()
}
