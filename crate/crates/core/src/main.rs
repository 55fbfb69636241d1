fn main() {
    std::process::exit(lopsim::cli::app::run(std::env::args_os()));
}
