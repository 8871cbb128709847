fn main() {
    std::process::exit(conespec::cli::main());
}
