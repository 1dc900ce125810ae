fn main() {
    std::process::exit(tapkin_cli::run_cli(std::env::args()));
}
