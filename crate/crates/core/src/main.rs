fn main() {
    std::process::exit(stickbreak::cli::main_with_args(std::env::args_os()));
}
