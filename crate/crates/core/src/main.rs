fn main() {
    std::process::exit(emvqm::cli::run(std::env::args_os()));
}
