fn main() {
    std::process::exit(medtest::cli::run_from_env());
}
