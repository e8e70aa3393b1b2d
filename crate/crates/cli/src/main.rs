fn main() {
    std::process::exit(mrws_cli::run_cli(std::env::args_os()));
}
