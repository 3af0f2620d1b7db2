fn main() {
    std::process::exit(mulane::cli::run(std::env::args_os()));
}
