fn main() {
    std::process::exit(ensctl_cli::run(std::env::args().collect()));
}
