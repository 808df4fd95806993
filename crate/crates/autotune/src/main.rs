fn main() {
    std::process::exit(autotune::cli::main());
}
