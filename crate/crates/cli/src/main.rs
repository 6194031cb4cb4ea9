fn main() {
    std::process::exit(gestura_cli::run());
}
