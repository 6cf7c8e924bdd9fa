fn main() {
    std::process::exit(edgelab::cli::run(std::env::args_os()));
}
