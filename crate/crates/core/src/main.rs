fn main() {
    std::process::exit(fairtraj::cli::run(std::env::args_os()));
}
