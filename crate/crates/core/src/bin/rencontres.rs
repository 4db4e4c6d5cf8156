fn main() {
    std::process::exit(rencontres::cli::main_with_args(std::env::args_os()));
}
