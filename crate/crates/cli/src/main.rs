fn main() {
    std::process::exit(cs_stap_cli::run(std::env::args_os()));
}
