fn main() {
    std::process::exit(qconsensus::harness::cli::main());
}
