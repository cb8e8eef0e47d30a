fn main() {
    std::process::exit(tcm_reduce::cli::run_cli(std::env::args_os()));
}
