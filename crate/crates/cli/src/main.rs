fn main() {
    std::process::exit(mpx_cli::run(std::env::args_os()));
}
