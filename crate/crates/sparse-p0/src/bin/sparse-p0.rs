fn main() {
    std::process::exit(sparse_p0::cli::main());
}
