fn main() {
    std::process::exit(memhd_cli::run(std::env::args_os()));
}
