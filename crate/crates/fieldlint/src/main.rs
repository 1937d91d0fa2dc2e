fn main() {
    std::process::exit(fieldlint::cli::run());
}
