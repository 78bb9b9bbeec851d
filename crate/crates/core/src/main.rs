fn main() {
    std::process::exit(hsimplex::cli::run());
}
