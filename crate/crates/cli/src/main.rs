fn main() {
    std::process::exit(ihards_cli::main_with_args(std::env::args_os().collect()));
}
