fn main() {
    std::process::exit(polysense::cli::main());
}
