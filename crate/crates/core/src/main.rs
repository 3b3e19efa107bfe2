fn main() {
    std::process::exit(hardy_spectral::cli::main());
}
