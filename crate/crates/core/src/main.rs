fn main() {
    std::process::exit(aortamesh::cli::run(std::env::args_os()));
}
