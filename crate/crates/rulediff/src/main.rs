fn main() {
    std::process::exit(rulediff::cli::main_with_args(std::env::args_os()));
}
