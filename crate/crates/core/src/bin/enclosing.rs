fn main() {
    std::process::exit(enclosing::cli::main_with_args(std::env::args_os()));
}
