fn main() {
    std::process::exit(dqsqueeze::cli::main_with_args(std::env::args_os()));
}
