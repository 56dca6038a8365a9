fn main() {
    std::process::exit(tscale::parse_and_dispatch(std::env::args().collect()));
}
