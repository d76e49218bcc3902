fn main() {
    std::process::exit(opfreq::cli::run(std::env::args_os()));
}
