fn main() {
    std::process::exit(irs_core::cli::run(std::env::args_os()));
}
