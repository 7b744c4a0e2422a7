fn main() {
    std::process::exit(netmix_cli::run(std::env::args_os()));
}
