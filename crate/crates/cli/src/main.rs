fn main() {
    std::process::exit(efosnet_cli::run(std::env::args_os()));
}
