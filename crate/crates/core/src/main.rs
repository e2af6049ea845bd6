fn main() {
    std::process::exit(rideshare::cli::dispatch(std::env::args()));
}
