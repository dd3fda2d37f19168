fn main() {
    std::process::exit(scanlat::cli::main_with_args(std::env::args_os()));
}
