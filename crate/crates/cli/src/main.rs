fn main() {
    std::process::exit(biolit_cli::run(std::env::args_os()));
}
