fn main() {
    std::process::exit(nmfkit::cli::main());
}
