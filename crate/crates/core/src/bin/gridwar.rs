fn main() {
    std::process::exit(gridwar::cli::run(std::env::args_os()));
}
