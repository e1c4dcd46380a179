fn main() {
    std::process::exit(critnet::run(std::env::args()));
}
