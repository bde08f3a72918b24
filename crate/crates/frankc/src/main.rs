fn main() {
    std::process::exit(frankc::run_cli());
}
