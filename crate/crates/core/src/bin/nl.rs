fn main() {
    std::process::exit(natural_learning::cli::run(std::env::args_os()));
}
