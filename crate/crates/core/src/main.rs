fn main() {
    std::process::exit(currentcoh::cli::run_from_args(std::env::args_os()));
}
