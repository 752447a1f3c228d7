fn main() {
    std::process::exit(fnls_cli::main_with_args(std::env::args().collect()));
}
