fn main() {
    std::process::exit(stabring::cli::main_entry());
}
