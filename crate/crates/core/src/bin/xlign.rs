fn main() {
    std::process::exit(xlign::cli::run(std::env::args_os()));
}
