fn main() {
    std::process::exit(mixpl_cli::main_with_args(std::env::args().collect()));
}
