fn main() {
    std::process::exit(match_advisor_cli::run_cli(std::env::args_os()));
}
