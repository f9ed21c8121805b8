fn main() {
    std::process::exit(hscene::cli::run(std::env::args_os()));
}
