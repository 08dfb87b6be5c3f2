fn main() {
    std::process::exit(spikemotion_cli::run(std::env::args_os()));
}
