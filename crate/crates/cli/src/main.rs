fn main() {
    std::process::exit(phasedpc_cli::run(std::env::args_os()));
}
