fn main() {
    std::process::exit(twsc::cli::run());
}
