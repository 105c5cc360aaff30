fn main() {
    std::process::exit(quadcover::cli::main_with_args(std::env::args_os()));
}
