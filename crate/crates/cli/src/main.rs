fn main() {
    std::process::exit(tlmls_cli::run(std::env::args_os()));
}
