fn main() {
    std::process::exit(hofa::cli::run());
}
