fn main() {
    std::process::exit(gaussnl::cli::run_from_args(std::env::args_os()));
}
