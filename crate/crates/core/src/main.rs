fn main() {
    std::process::exit(rmrepair::cli::main_with_args(std::env::args_os()));
}
