fn main() {
    std::process::exit(ara_core::cli::run(std::env::args_os()));
}
