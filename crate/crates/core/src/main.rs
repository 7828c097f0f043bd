fn main() {
    std::process::exit(hybridq::cli::run(std::env::args_os()));
}
