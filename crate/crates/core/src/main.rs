fn main() {
    std::process::exit(epsigraph::cli::main());
}
