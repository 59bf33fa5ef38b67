fn main() {
    std::process::exit(lrinv_core::cli::run(std::env::args_os()));
}
