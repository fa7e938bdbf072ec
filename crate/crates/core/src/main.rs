fn main() -> std::process::ExitCode {
    extsym::cli::main_entry()
}
