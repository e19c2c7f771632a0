fn main() {
    std::process::exit(julia_cycles::cli::main_with_args(std::env::args_os()));
}
