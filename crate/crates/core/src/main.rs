fn main() {
    std::process::exit(mpda::cli::run(std::env::args()));
}
