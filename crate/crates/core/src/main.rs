fn main() {
    std::process::exit(specfloor::cli::main_with_args(std::env::args_os()));
}
