fn main() {
    std::process::exit(qbd_cli::run(std::env::args_os()));
}
