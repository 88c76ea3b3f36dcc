fn main() {
    std::process::exit(tpsurf::cli::run_cli(std::env::args_os()));
}
