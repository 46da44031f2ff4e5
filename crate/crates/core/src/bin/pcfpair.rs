fn main() {
    std::process::exit(pcfpair::cli::main_entry());
}
