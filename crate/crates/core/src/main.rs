fn main() {
    std::process::exit(pnsgd_privacy::cli::run_from_args(std::env::args_os()));
}
