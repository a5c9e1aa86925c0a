fn main() {
    std::process::exit(transport_cli::run(std::env::args_os()));
}
