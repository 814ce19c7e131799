fn main() {
    std::process::exit(stochbranch::cli::main_with_args(std::env::args_os()));
}
