fn main() {
    std::process::exit(symnet_cli::run(std::env::args_os()));
}
