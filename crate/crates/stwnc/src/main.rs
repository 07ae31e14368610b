fn main() {
    std::process::exit(stwnc::cli::main());
}
