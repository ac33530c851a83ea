fn main() {
    std::process::exit(complete_csp::cli::run(std::env::args_os()));
}
