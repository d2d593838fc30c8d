fn main() {
    std::process::exit(tdsv_cli::run(std::env::args_os()));
}
