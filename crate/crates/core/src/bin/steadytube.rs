fn main() {
    std::process::exit(steadytube::cli::run(std::env::args()));
}
