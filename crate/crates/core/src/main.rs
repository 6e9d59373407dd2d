fn main() {
    std::process::exit(minoverlap::cli::main_with_args(std::env::args_os()));
}
