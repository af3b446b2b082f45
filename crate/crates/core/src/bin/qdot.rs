fn main() {
    std::process::exit(qdot::cli::parse_and_dispatch(std::env::args_os()));
}
