fn main() {
    std::process::exit(secrecy_precoding::cli::parse_and_dispatch(std::env::args().collect()));
}
