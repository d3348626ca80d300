fn main() {
    std::process::exit(chiralsim::cli::run(std::env::args_os()));
}
