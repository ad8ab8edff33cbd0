fn main() {
    std::process::exit(pvccs::cli::main_with_args(std::env::args_os()));
}
