fn main() {
    std::process::exit(rnla::cli::run(std::env::args_os()));
}
