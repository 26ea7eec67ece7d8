fn main() {
    std::process::exit(vaxplan::cli::main());
}
