fn main() {
    std::process::exit(degradekit::cli::main_entry());
}
