fn main() {
    std::process::exit(memestream::cli::main_with_args(std::env::args_os()));
}
