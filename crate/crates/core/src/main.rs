fn main() {
    std::process::exit(cfvar::cli::main_with_args(std::env::args_os()));
}
