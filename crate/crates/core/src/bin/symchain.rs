fn main() {
    std::process::exit(symchain::cli::main_with_args(std::env::args().collect()));
}
